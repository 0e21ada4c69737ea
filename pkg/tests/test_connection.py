import numpy as np
import pytest

from glvortex.basis import ModeParams, zero_basis, infinity_basis, frame_determinant
from glvortex.connection import (propagate, propagate_frame, connect, lagrange_check, amplitude_relation,
                                 scalar_bounded_check, scalar_residual, exact_pair, exact_mode_residual, scan_C3,
                                 default_match_radius, bounded_determinant, regular_seed, SCAN_COLUMNS, ZERO_THRESHOLD)
from glvortex.profile import pointwise_residual


def test_propagate_round_trip(profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    x = np.array([1.0, 0.5, -0.3, 0.2])
    y = propagate(x, 1.0, 3.0, params, profile_d1, tol=1e-11)
    np.testing.assert_allclose(propagate(y, 3.0, 1.0, params, profile_d1, tol=1e-11), x, rtol=1e-7, atol=1e-9)
    np.testing.assert_array_equal(propagate(x, 2.0, 2.0, params, profile_d1), x)
    with pytest.raises(ValueError):
        propagate(x, 0.0, 1.0, params, profile_d1)


def test_propagate_frame_keeps_determinant(profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    frame = np.eye(4)
    _, det = propagate_frame(frame, 1.0, 4.0, params, profile_d1, tol=1e-11)
    assert det == pytest.approx(frame_determinant(frame), rel=1e-7)


def test_exact_mode_is_bounded(profile_d1):
    coeffs = connect(ModeParams.from_mode(1, 1.0), profile_d1)
    assert coeffs.bounded
    assert abs(coeffs.C3_normalized) < ZERO_THRESHOLD
    assert coeffs.condition < 1e8
    assert coeffs.match_radius in coeffs.candidates


def test_unbounded_mode(profile_d1):
    coeffs = connect(ModeParams.from_mode(1, 2.0), profile_d1)
    assert not coeffs.bounded
    row = coeffs.row()
    assert row['n'] == pytest.approx(2.0)
    assert set(row) == set(SCAN_COLUMNS) - {'error'}


def test_regular_branch_grows(profile_d1):
    coeffs = connect(ModeParams.from_mode(1, 1.2), profile_d1, which='Zero1')
    assert coeffs.columns[0] == 'InfGrow'
    assert abs(coeffs.far_coords[0]) > 1e-6
    with pytest.raises(ValueError):
        connect(ModeParams.from_mode(1, 1.2), profile_d1, which='Zero2')


def test_match_radius_default():
    assert default_match_radius(ModeParams.from_mode(1, 1.2)) == 8.0
    assert default_match_radius(ModeParams.from_mode(3, 2.5)) == pytest.approx(11.0)


def test_amplitude_relation(profile_d1):
    relation = amplitude_relation(ModeParams.from_mode(1, 1.2), profile_d1)
    assert relation.relative_error < 1e-3
    assert relation.W_spread < 1e-6
    np.testing.assert_allclose(relation.W, 4 * np.sqrt(2) * relation.C, rtol=1e-3)


def test_lagrange_identity(profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    zero = zero_basis(params, profile_d1)
    far = infinity_basis(params, profile_d1)
    values = lagrange_check(zero[2], far[1], np.linspace(2.0, 10.0, 5))
    assert np.max(np.abs(values / values[0] - 1)) < 1e-6


def test_scalar_equations(profile_d1):
    gl0 = scalar_bounded_check(profile_d1, 'EqGL0')
    assert gl0.bounded
    assert gl0.identity_defect == 0
    assert gl0.sup_residual < 1e-8
    glr = scalar_bounded_check(profile_d1, 'EqGLR')
    assert not glr.bounded
    with pytest.raises(ValueError):
        scalar_bounded_check(profile_d1, 'EqGL1')


def test_scalar_residual_matches_profile_residual(profile_d2):
    residual = scalar_residual(profile_d2, profile_d2.f, profile_d2.f_prime)
    outer = profile_d2.grid >= profile_d2.r_series
    np.testing.assert_array_equal(residual[outer], pointwise_residual(profile_d2)[outer])
    assert np.isnan(residual[~outer]).all()


@pytest.mark.parametrize('name', ['profile_d1', 'profile_d2'])
def test_exact_mode(name, request):
    profile = request.getfixturevalue(name)
    assert exact_mode_residual(profile) < 1e-7
    # the pair of a neighboring degree is not a solution
    assert exact_mode_residual(profile, d=profile.d + 1e-3) > 1e-5
    state = exact_pair(profile, profile.d, 2.0)
    assert state.shape == (4,)


@pytest.mark.parametrize('name, d', [('profile_d2', 2.0), ('profile_d3', 3.0)])
def test_scan_finds_exact_mode_root(name, d, request):
    profile = request.getfixturevalue(name)
    result = scan_C3(d, (0.94, 1.06), 7, profile)
    assert list(result.table.columns) == SCAN_COLUMNS
    assert result.failures == 0
    assert any(abs(root.n - 1) < 1e-3 for root in result.roots)
    summary = result.summary()
    assert summary['points'] == 7
    assert summary['roots'][0]['kind'] in ('sign_change', 'touch')


@pytest.mark.parametrize('name, d, window, expected', [
    ('profile_d2', 2.0, (2.6, 2.8), 2.7311),
    ('profile_d3', 3.0, (4.45, 4.65), 4.5678),
])
def test_scan_finds_root_below_2d_minus_1(name, d, window, expected, request):
    profile = request.getfixturevalue(name)
    result = scan_C3(d, window, 5, profile)
    assert result.failures == 0
    roots = [root for root in result.roots if root.kind == 'sign_change']
    assert len(roots) == 1
    assert abs(roots[0].n - expected) < 0.01
    # the bounded solution determinant changes sign across the same bracket
    low, high = (bounded_determinant(ModeParams.from_mode(d, n), profile) for n in roots[0].bracket)
    assert low * high < 0


def test_bounded_determinant_at_exact_mode(profile_d1):
    at_root = bounded_determinant(ModeParams.from_mode(1, 1.0), profile_d1)
    away = bounded_determinant(ModeParams.from_mode(1, 1.5), profile_d1)
    assert abs(at_root) < 1e-3 * abs(away)
    assert abs(away) <= 1
    seed = regular_seed(ModeParams.from_mode(1, 1.5), 1e-3)
    assert seed.shape == (4, 2)
    assert seed[2, 0] == pytest.approx(1e-3 ** 2.5, rel=1e-5)
    assert seed[0, 1] == pytest.approx(1e-3 ** 0.5, rel=1e-5)
    with pytest.raises(ValueError):
        bounded_determinant(ModeParams.from_mode(1, 1.5), profile_d1, r_start=0.0)


def test_scan_rejects_points_outside_domain(profile_d1):
    with pytest.raises(ValueError):
        scan_C3(1.0, (0.0, 0.4), 3, profile_d1)
    with pytest.raises(ValueError):
        scan_C3(1.0, (1.0, 0.9), 3, profile_d1)
