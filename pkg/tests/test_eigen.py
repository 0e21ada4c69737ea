import numpy as np
import pytest
from scipy import sparse

from glvortex.basis import ModeParams
from glvortex.eigen import (Assembly, assemble, assemble_scalar, make_mesh, smallest_eig, solve_mode, m0,
                            eigenvector_distance, eigenvector_local_distance, cutoff_family, lin_map, lin_trick_eval,
                            syst_residual, bounds)
from glvortex.errors import TailTooLargeError

MESH_SIZE = 200
EPSILONS = (0.1, 0.05)


def test_make_mesh():
    mesh = make_mesh(8, 0.0)
    assert mesh[0] == 0 and mesh[-1] == 1
    assert np.all(np.diff(mesh) > 0)
    # beta = 4 for gamma1 below 1/2
    assert mesh[1] == pytest.approx(8.0 ** -4)
    np.testing.assert_allclose(make_mesh(4, 1.0, grading=1.0), np.linspace(0, 1, 5))
    with pytest.raises(ValueError):
        make_mesh(3, 1.0)


def test_assembly_structure(profile_d1):
    mesh = make_mesh(MESH_SIZE, 0.2)
    assembly = assemble(ModeParams.from_mode(1, 1.2), profile_d1, 0.1, mesh)
    assert abs(assembly.A - assembly.A.T).max() < 1e-12
    assert abs(assembly.B - assembly.B.T).max() < 1e-12
    assert assembly.B.min() >= 0
    assert assembly.free_a[0] == 1 and assembly.free_a[-1] == MESH_SIZE - 1

    free = assemble(ModeParams.from_mode(1, 1.0), profile_d1, 0.1, make_mesh(MESH_SIZE, 0.0))
    assert free.free_a[0] == 0 and free.free_b[0] == 1

    a, b = assembly.expand(np.arange(assembly.A.shape[0], dtype=float))
    assert a[0] == 0 and a[-1] == 0 and b[-1] == 0
    np.testing.assert_array_equal(assembly.restrict(a, b), np.arange(assembly.A.shape[0]))

    with pytest.raises(ValueError):
        assemble_scalar(1.0, profile_d1, 0.0, mesh)


def test_smallest_eig_diagonal():
    A = sparse.diags([1.0, 2.0, 3.0, 4.0, 5.0]).tocsc()
    B = sparse.identity(5, format='csc')
    assembly = Assembly(A=A, B=B, mesh=np.linspace(0, 1, 7), free_a=np.arange(1, 6),
                        free_b=np.array([], dtype=int), epsilon=1.0, d=1.0)
    result = smallest_eig(assembly)
    assert result.scalar
    assert result.m == pytest.approx(1.0)
    assert result.gap == pytest.approx(1.0, rel=1e-3)
    assert result.vec_a[1] > 0
    np.testing.assert_allclose(result.vec_a[2:], 0, atol=1e-8)
    assert result.sign_structure
    assert result.rayleigh_residual < 1e-10


def test_scalar_quotient(profile_d1):
    results = [m0(1.0, profile_d1, eps) for eps in EPSILONS]
    assert all(result.m > 1 for result in results)
    for result in results:
        assert np.all(result.vec_a >= -1e-8 * result.vec_a.max())
        assert result.rayleigh_residual < 1e-8 * result.m
        assert result.gap > 0
        row = result.row()
        assert np.isnan(row['n']) and row['mesh_size'] == 400


def test_scalar_eigenvector_approaches_profile(profile_d1):
    result = m0(1.0, profile_d1, 0.05, mesh_size=MESH_SIZE)
    distance = eigenvector_distance(result, profile_d1, 'profile')
    assert 0 <= distance < 0.5
    with pytest.raises(ValueError):
        eigenvector_distance(result, profile_d1, 'other')


@pytest.mark.parametrize('name, d', [('profile_d1', 1.0), ('profile_d2', 2.0)])
def test_scalar_quotient_rate(name, d, request):
    profile = request.getfixturevalue(name)
    results = [m0(d, profile, eps) for eps in EPSILONS]
    excess = [result.m - 1 for result in results]
    quotients = [x / result.epsilon ** 2 for x, result in zip(excess, results)]
    # m0 - 1 shrinks much slower than eps^2, so the quotient grows
    assert excess[1] < excess[0]
    assert quotients[1] > 1.5 * quotients[0]
    local = [eigenvector_local_distance(result, profile) for result in results]
    assert local[1] < local[0]
    weighted = [eigenvector_distance(result, profile, 'profile') for result in results]
    assert abs(weighted[1] - weighted[0]) < 0.2
    with pytest.raises(ValueError):
        eigenvector_local_distance(results[0], profile, window=0.0)


def test_limit_mode_decreases_to_one(profile_d1):
    params = ModeParams.from_mode(1, 1.0)
    results = [solve_mode(params, profile_d1, eps) for eps in EPSILONS]
    excess = [result.m - 1 for result in results]
    assert all(x > 0 for x in excess)
    assert excess[1] < excess[0]
    assert all(result.sign_structure for result in results)
    assert np.isfinite(eigenvector_distance(results[1], profile_d1, 'exact_pair'))


def test_test_function_bound(profile_d2):
    bound = bounds.test_function_bound(2.0, 1.5, profile_d2)
    assert bound.C_n > 0
    assert bound.quotient == pytest.approx(1 - bound.C_n)
    assert bound.direct_quotient == pytest.approx(bound.quotient, rel=1e-4)
    assert bound.tail_fraction < 0.01
    assert bound.syst_residual < 1e-6
    with pytest.raises(ValueError):
        bounds.test_function_bound(2.0, 3.5, profile_d2)
    with pytest.raises(ValueError):
        bounds.test_function_bound(1.0, 1.5, profile_d2)


def test_short_range_tail_is_rejected(profile_d2):
    with pytest.raises(TailTooLargeError):
        bounds.test_function_bound(2.0, 1.1, profile_d2, r_max=3.0)


def test_syst_residual(profile_d2):
    assert syst_residual(profile_d2, 1.5) < 1e-6


def test_cutoff_pair_bounds_eigenvalue(profile_d2):
    pair = cutoff_family(2.0, 1.5, profile_d2, 0.05, mesh_size=MESH_SIZE)
    assert pair.a[-1] == 0 and pair.b[-1] == 0
    result = solve_mode(ModeParams.from_mode(2, 1.5), profile_d2, 0.05, mesh=pair.mesh)
    assert result.m <= pair.quotient * (1 + 1e-9)
    with pytest.raises(ValueError):
        cutoff_family(2.0, 2.5, profile_d2, 0.05, mesh_size=MESH_SIZE)
    with pytest.raises(ValueError):
        cutoff_family(2.0, 1.5, profile_d2, 0.05, N=1.0, mesh_size=MESH_SIZE)


def test_lin_trick():
    params = ModeParams.from_mode(2, 1.5)
    r = np.linspace(0.1, 5, 20)
    tau0, h0 = lin_trick_eval(params, r, f=np.zeros_like(r))
    np.testing.assert_array_equal(tau0, 0)
    np.testing.assert_allclose(h0, (params.gamma1 ** 2 - params.d ** 2) / r)

    f = np.tanh(r)
    tau0, h0 = lin_trick_eval(params, r, f=f)
    np.testing.assert_allclose(lin_map(params, r, tau0, f=f), h0, rtol=1e-12, atol=1e-12)
    for tau in np.linspace(-2, 1, 13):
        assert np.all(lin_map(params, r, tau, f=f) >= h0 - 1e-10)


def test_random_vectors_bound_eigenvalue(profile_d1):
    params = ModeParams.from_mode(1, 1.2)
    result = solve_mode(params, profile_d1, 0.1, mesh_size=MESH_SIZE)
    assembly = assemble(params, profile_d1, 0.1, result.mesh)
    rng = np.random.default_rng(1)
    for _ in range(5):
        a, b = assembly.expand(rng.standard_normal(assembly.A.shape[0]))
        assert assembly.quotient(a, b) >= result.m * (1 - 1e-9)
