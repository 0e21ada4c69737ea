import numpy as np
import pytest

from glvortex.profile import (shoot_profile, find_critical_amplitude, profile_residual, pointwise_residual,
                              profiles_cross_once, tail_value, save_profile, load_profile, cached_profile,
                              profile_path, OVERSHOOT, UNDERSHOOT)
from glvortex.profile.profile import RESIDUAL_EDGE
from glvortex.profile.shooting import series_coefficients, series_value, series_residual, series_radius
from glvortex.pipelines.verify import tail_exponent, series_coefficient

# f_1'(0) of the degree one vortex
A1 = 0.5831894958603
SERIES_NODES_MIN = 10


def test_critical_amplitude_d1(profile_d1):
    assert profile_d1.A_d == pytest.approx(A1, rel=1e-6)
    assert abs(profile_d1.A_d - profile_d1.A_bisect) < 1e-6


def test_shooting_classification(profile_d1):
    assert shoot_profile(1.0, 0.0).classification == UNDERSHOOT
    assert shoot_profile(1.0, 10.0).classification == OVERSHOOT
    assert shoot_profile(1.0, profile_d1.A_d - 1e-3).classification == UNDERSHOOT
    assert shoot_profile(1.0, profile_d1.A_d + 1e-3).classification == OVERSHOOT


def test_find_critical_amplitude_rejects_bad_input():
    with pytest.raises(ValueError):
        find_critical_amplitude(0.0)
    with pytest.raises(ValueError):
        find_critical_amplitude(1.0, tol=0.0)


@pytest.mark.parametrize('name', ['profile_d1', 'profile_d15', 'profile_d2', 'profile_d3'])
def test_profile_invariants(name, request):
    profile = request.getfixturevalue(name)
    assert np.all(np.diff(profile.f) >= -10 * profile.tol)
    assert profile.f[0] > 0
    assert profile.f.max() < 1
    assert profile_residual(profile) < 1e-8
    assert np.isfinite(profile.tail_K)


@pytest.mark.parametrize('name', ['profile_d1', 'profile_d15'])
def test_residual_near_origin(name, request):
    profile = request.getfixturevalue(name)
    residual = np.abs(pointwise_residual(profile))
    near = profile.grid < 2 * profile.r_series
    assert near.sum() > SERIES_NODES_MIN
    assert residual[near].max() < 1e-8
    assert residual[np.argmin(np.abs(profile.grid - 3.7e-6))] < 1e-10


@pytest.mark.parametrize('d', [1.0, 1.5, 2.0, 3.0])
def test_series_coefficients(d):
    c = series_coefficients(d)
    assert c[0, 0] == 1
    assert c[0, 1] == pytest.approx(-1 / (4 * (d + 1)))
    assert c[1, 1] == pytest.approx(1 / ((3 * d + 2) ** 2 - d ** 2))
    np.testing.assert_array_equal(c[1:, 0], 0)
    assert not c.flags.writeable


def test_series_radius(profile_d1):
    a0 = profile_d1.A_d
    r = series_radius(1.0, a0, 1e-10)
    assert 1e-4 < r <= 0.5
    assert abs(series_residual(1.0, a0, r)) <= 1e-12
    assert series_radius(1.0, a0, 1e-14) <= r
    assert series_radius(1.0, 0.0, 1e-10) == 0.5
    r_inner = np.geomspace(1e-3, profile_d1.r_series, 5)
    np.testing.assert_array_equal(profile_d1(r_inner), series_value(1.0, a0, r_inner))


def test_series_end(profile_d2):
    r = np.geomspace(1e-4, 1e-2, 5)
    ratio = profile_d2(r) / (profile_d2.A_d * r ** 2)
    np.testing.assert_allclose(ratio, 1 - r ** 2 / 12, rtol=1e-7)
    assert profile_d2.scaled(1e-3) == pytest.approx(profile_d2.A_d, rel=1e-6)


def test_tail_end(profile_d1):
    # agreement with the leading tail term is O(r^-4)
    assert abs(profile_d1(20.0) - (1 - 1 / (2 * 20.0 ** 2))) < 10 / 20.0 ** 4
    assert abs(profile_d1(25.0) - tail_value(1.0, 25.0)) < 1e-6
    r_far = np.array([40.0, 80.0])
    np.testing.assert_allclose(profile_d1(r_far), tail_value(1.0, r_far))


def test_residual_is_local(profile_d1):
    spike = len(profile_d1.grid) // 2
    f = profile_d1.f.copy()
    f[spike] += 1e-4
    perturbed = profile_d1.__class__(**{**profile_d1.info(), 'grid': profile_d1.grid, 'f': f,
                                        'f_prime': profile_d1.f_prime})
    residual = np.abs(pointwise_residual(perturbed))
    assert np.argmax(residual[RESIDUAL_EDGE:-RESIDUAL_EDGE]) + RESIDUAL_EDGE == spike
    assert residual[spike] > 1e-5


def test_higher_degree_profile_lies_below(profile_d1, profile_d2):
    assert profile_d2.A_d < profile_d1.A_d
    assert profiles_cross_once(profile_d1, profile_d2) == 0
    r = np.linspace(0.5, 20, 50)
    assert np.all(profile_d2(r) < profile_d1(r))


@pytest.mark.parametrize('fmt', ['csv', 'npz'])
def test_cache_formats(tmp_path, profile_d1, fmt):
    path = save_profile(profile_d1, profile_path(tmp_path, 1.0, fmt))
    assert path.name == f'profile_d1.{fmt}'
    loaded = load_profile(path)
    np.testing.assert_array_equal(loaded.grid, profile_d1.grid)
    np.testing.assert_array_equal(loaded.f, profile_d1.f)
    assert loaded.info() == profile_d1.info()
    assert loaded(3.3) == profile_d1(3.3)


def test_cache_served_byte_identical(tmp_path, profile_d1):
    path = save_profile(profile_d1, profile_path(tmp_path, 1.0))
    before = path.read_bytes()
    profile = cached_profile(1.0, tmp_path, r_max=30.0, tol=1e-10)
    assert path.read_bytes() == before
    assert profile.A_d == profile_d1.A_d


def test_load_missing_profile(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_profile(tmp_path / 'profile_d1.csv')


@pytest.mark.parametrize('name', ['profile_d1', 'profile_d2'])
def test_fitted_end_behavior(name, request):
    profile = request.getfixturevalue(name)
    assert abs(tail_exponent(profile) - 2) < 0.3
    assert series_coefficient(profile) == pytest.approx(-1 / (4 * (profile.d + 1)), rel=0.01)
