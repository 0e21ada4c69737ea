import json

import numpy as np
import pytest

from glvortex.basis import (ModeParams, system_matrix, special_weights, zero_basis, infinity_basis, dump_branch,
                            branch_frame, pfaffian_determinant, frame_determinant, wronskian, OMEGA,
                            expected_zero_determinant, expected_far_determinant, ZERO_TAGS, RESOLVENT_ORDER, FrameFlow,
                            zero_frame_determinant)
from glvortex.connection import propagate
from glvortex.pipelines.basis import basis_diagnostics, zero_determinants, far_determinants, branch_file_name
from glvortex.utilities import read_table


def test_mode_params_domains():
    params = ModeParams.from_mode(1, 1)
    assert (params.gamma1, params.gamma2) == (0, 2)
    assert params.n == pytest.approx(1.0)
    assert params.singular_branch_domain == 'D2'

    params = ModeParams.from_mode(2, 1.5)
    assert (params.gamma1, params.gamma2) == (0.5, 3.5)
    assert params.n == pytest.approx(1.5)
    assert params.in_D1 and not params.in_D2
    assert params.singular_branch_domain == 'D1'

    # gamma2 too large for D
    assert not ModeParams(d=1.0, gamma1=0.0, gamma2=5.0).in_D


@pytest.mark.parametrize('kwargs', [
    dict(d=0, gamma1=0, gamma2=2),
    dict(d=1, gamma1=2, gamma2=1),
    dict(d=1, gamma1=-0.5, gamma2=2),
    dict(d=1, gamma1=0.5, gamma2=1.0),
])
def test_mode_params_rejects(kwargs):
    with pytest.raises(ValueError):
        ModeParams(**kwargs)


@pytest.mark.parametrize('r', [0.01, 1.0, 7.5])
def test_system_matrix_structure(profile_d1, r):
    matrix = system_matrix(ModeParams(d=1.0, gamma1=0.2, gamma2=2.2), profile_d1, r)
    assert np.trace(matrix) == 0
    np.testing.assert_allclose(matrix.T @ OMEGA + OMEGA @ matrix, 0, atol=1e-12)


def test_pairing_is_antisymmetric():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=4), rng.normal(size=4)
    assert wronskian(x, y) == pytest.approx(-wronskian(y, x))
    states = rng.normal(size=(4, 4))
    assert pfaffian_determinant(states) == pytest.approx(frame_determinant(states))


def test_special_weights():
    r = np.array([0.1, 0.5, 1.0])
    _, _, tau = special_weights(ModeParams.from_mode(1, 1), r)
    np.testing.assert_allclose(tau, -np.log(r))
    theta, theta_tilde, tau = special_weights(ModeParams.from_mode(1, 1.2), r)
    assert tau[-1] == 0
    assert np.all(tau[:-1] > 0)
    assert np.all(np.isfinite(theta)) and np.all(np.isfinite(theta_tilde))
    with pytest.raises(ValueError):
        special_weights(ModeParams.from_mode(1, 1.2), np.array([2.0]))


@pytest.mark.parametrize('d, n', [(1, 1.2), (1, 1.0)])
def test_zero_basis_determinant(profile_d1, d, n):
    params = ModeParams.from_mode(d, n)
    zero = zero_basis(params, profile_d1, r_out=2.0)
    assert [branch.behavior for branch in zero] == list(ZERO_TAGS)
    radii, det = zero_determinants(zero, r_out=2.0)
    assert radii[-1] == pytest.approx(2.0)
    assert np.max(np.abs(det / det[0] - 1)) < 1e-7
    assert det[0] == pytest.approx(expected_zero_determinant(params), rel=1e-6)


def test_zero_basis_lead_terms(profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    zero = zero_basis(params, profile_d1)
    r = zero[0].grid[0]
    # Zero3 starts like (r^gamma1, 0) and Zero1 like (0, r^gamma2)
    assert zero[2].a[0] / r ** params.gamma1 == pytest.approx(1, abs=1e-6)
    assert zero[0].b[0] / r ** params.gamma2 == pytest.approx(1, abs=1e-6)
    assert abs(zero[2].b[0]) < 1e-6 * r ** params.gamma1


def test_infinity_basis_determinant(profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    far = infinity_basis(params, profile_d1)
    assert [branch.behavior for branch in far] == list(RESOLVENT_ORDER)
    _, det = far_determinants(far)
    np.testing.assert_allclose(det, expected_far_determinant(params), rtol=1e-6)
    assert expected_far_determinant(params) == pytest.approx(-16 * 1.2 * np.sqrt(2))
    assert far[0].pairing_defect < 1e-3


def test_decoupled_modes(profile_d1):
    params = ModeParams(d=1.0, gamma1=1.5, gamma2=1.5)
    zero = zero_basis(params, profile_d1)
    far = infinity_basis(params, profile_d1)
    diagnostics = basis_diagnostics(params, zero, far)
    residuals = diagnostics['decoupled_residual']
    assert set(residuals) == set(ZERO_TAGS) | set(RESOLVENT_ORDER)
    assert max(residuals.values()) < 1e-6


def test_basis_diagnostics(profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    zero = zero_basis(params, profile_d1)
    far = infinity_basis(params, profile_d1)
    diagnostics = basis_diagnostics(params, zero, far)
    assert 'decoupled_residual' not in diagnostics
    assert diagnostics['zero']['spread'] < 1e-8
    assert diagnostics['far']['relative_error'] < 1e-6
    # D2 forms win where both apply
    assert diagnostics['zero']['domain'] == 'D2'


@pytest.mark.parametrize('name, d, n', [('profile_d1', 1.0, 1.2), ('profile_d2', 2.0, 1.5), ('profile_d2', 2.0, 2.5)])
def test_zero_determinant_continued_outward(name, d, n, request):
    profile = request.getfixturevalue(name)
    params = ModeParams.from_mode(d, n)
    zero = zero_basis(params, profile, r_out=d + 4)
    radii, det = zero_determinants(zero, r_out=d + 4)
    assert radii[-1] == pytest.approx(d + 4)
    assert np.max(np.abs(det / det[0] - 1)) < 1e-8
    assert zero_frame_determinant(zero, d + 4) == det[-1]
    # columns of the shared frame are the branches themselves
    R = zero[0].R
    for branch in zero:
        direct = propagate(branch.vector_at(R), R, R + 0.3, params, profile, tol=1e-11)
        assert np.linalg.norm(branch.vector_at(R + 0.3) - direct) < 1e-7 * np.linalg.norm(direct)


def test_frame_flow(profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    states = np.random.default_rng(1).normal(size=(4, 4))
    flow = FrameFlow(states, 1.0, params, profile_d1, tol=1e-11)
    assert flow.determinant(7.0) == pytest.approx(frame_determinant(states), rel=1e-8)
    assert flow.r_end == 7.0
    np.testing.assert_allclose(flow.states(1.0), states, atol=1e-12)
    single = FrameFlow(states[:, 0], 1.0, params, profile_d1, tol=1e-11)
    assert single.k == 1
    diff = single.column(2.2, 0) - flow.column(2.2, 0)
    assert np.linalg.norm(diff) < 1e-8 * np.linalg.norm(flow.column(2.2, 0))
    with pytest.raises(ValueError):
        flow.extend(0.5)
    with pytest.raises(ValueError):
        single.determinant(2.0)


def test_dump_branch(tmp_path, profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    zero = zero_basis(params, profile_d1)
    far = infinity_basis(params, profile_d1)
    path = dump_branch(zero[0], tmp_path / branch_file_name('Zero1'), r_out=1.0)
    data, comments = read_table(path)
    assert list(data.columns) == ['r', 'a', 'a_prime', 'b', 'b_prime']
    assert data['r'].iloc[-1] == pytest.approx(1.0)
    assert json.loads(comments[0])['tag'] == 'Zero1'

    path = dump_branch(far[3], tmp_path / branch_file_name('InfPoly+'))
    assert path.name == 'basis_InfPolyplus.csv'
    data, _ = read_table(path)
    assert 'log_scale' in data.columns
    state, log_scale = branch_frame([far[3]], data['r'].iloc[10])
    assert data['a'].iloc[10] == pytest.approx(state[0, 0])
    assert data['log_scale'].iloc[10] == pytest.approx(log_scale[0])
