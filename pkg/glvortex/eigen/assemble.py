"""
Piecewise linear finite elements for the weighted quotients on (0, 1].

    numerator    int r a'^2 + r b'^2 + g1^2 a^2 / r + g2^2 b^2 / r + (r / eps^2) f^2(r / eps) (a + b)^2
    denominator  (1 / eps^2) int r (1 - f^2(r / eps)) (a^2 + b^2)

Both components vanish at r = 1. At r = 0 only the a component of a
gamma1 = 0 problem keeps a value.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse

from ..errors import QuadratureError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

GAUSS_POINTS = 6
_XI, _WEIGHTS = leggauss(GAUSS_POINTS)
FREE_GAMMA = 1e-12
QUADRATURE_CHECK = 1e-6


def make_mesh(size, gamma1, grading=0.0):
    """
    Graded nodes r_k = (k / size)^beta, k = 0..size.

    beta defaults to max(2, 2 / max(gamma1, 1/2)) so that r^gamma1 is resolved
    near 0.
    """
    if size < 4:
        raise ValueError(f'Mesh needs at least 4 elements, got {size}')
    beta = grading if grading > 0 else max(2.0, 2.0 / max(gamma1, 0.5))
    return (np.arange(size + 1) / size) ** beta


def _element_points(mesh, rule=(_XI, _WEIGHTS)):
    xi, w = rule
    r0, r1 = mesh[:-1], mesh[1:]
    h = r1 - r0
    t = (xi + 1) / 2
    points = r0[:, None] + h[:, None] * t[None, :]
    weights = h[:, None] * w[None, :] / 2
    phi = np.stack([1 - t, t])
    return points, weights, phi


def _local_mass(weight_values, weights, phi):
    """Element matrices int w phi_i phi_j, shape (elements, 2, 2)."""
    ww = weight_values * weights
    return np.einsum('eq,iq,jq->eij', ww, phi, phi)


def _local_stiffness(mesh):
    r0, r1 = mesh[:-1], mesh[1:]
    h = r1 - r0
    value = (r0 + r1) / (2 * h)
    return value[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])[None, :, :]


def _local_inverse_r(mesh, rule=(_XI, _WEIGHTS)):
    """
    Element matrices of int phi_i phi_j / r.

    Closed forms on elements with r0 <= h, Gauss-Legendre on the rest where
    r1 / r0 < 2. On the first element the (0, 0) entry diverges; it is set to
    zero since node 0 carries no 1/r weight.
    """
    r0, r1 = mesh[:-1], mesh[1:]
    h = r1 - r0
    points, weights, phi = _element_points(mesh, rule)
    local = _local_mass(1 / points, weights, phi)

    near = r0 <= h
    a, b, hn = r0[near], r1[near], h[near]
    with np.errstate(divide='ignore', invalid='ignore'):
        log_ratio = np.where(a > 0, np.log(b / np.where(a > 0, a, 1)), 0.0)
    half_sq = (b ** 2 - a ** 2) / 2
    m00 = (b ** 2 * log_ratio - 2 * b * hn + half_sq) / hn ** 2
    m11 = (a ** 2 * log_ratio - 2 * a * hn + half_sq) / hn ** 2
    m01 = (-half_sq + (a + b) * hn - a * b * log_ratio) / hn ** 2
    m00 = np.where(a > 0, m00, 0.0)
    local[near] = np.stack([np.stack([m00, m01], -1), np.stack([m01, m11], -1)], -2)
    return local


def _global(local, mesh):
    elements = len(mesh) - 1
    rows = np.empty((elements, 2, 2), dtype=int)
    cols = np.empty((elements, 2, 2), dtype=int)
    for i in range(2):
        for j in range(2):
            rows[:, i, j] = np.arange(elements) + i
            cols[:, i, j] = np.arange(elements) + j
    size = len(mesh)
    return sparse.coo_matrix((local.ravel(), (rows.ravel(), cols.ravel())), shape=(size, size)).tocsr()


def profile_weights(profile, epsilon, mesh):
    """
    Global matrices with weights (r / eps^2) f^2(r / eps) and (r / eps^2)(1 - f^2(r / eps)).

    Beyond the profile grid f is taken from its tail expansion.
    """
    if epsilon <= 0:
        raise ValueError(f'epsilon must be > 0, got {epsilon}')
    points, weights, phi = _element_points(mesh)
    f2 = profile(points / epsilon) ** 2
    coupling = _global(_local_mass(points * f2 / epsilon ** 2, weights, phi), mesh)
    mass = _global(_local_mass(points * (1 - f2) / epsilon ** 2, weights, phi), mesh)
    return coupling, mass


def _check_quadrature(mesh):
    """1/r element matrices against a rule with twice the points."""
    local = _local_inverse_r(mesh)
    fine = _local_inverse_r(mesh, leggauss(2 * GAUSS_POINTS))
    scale = np.abs(fine).max(axis=(1, 2))
    defect = float(np.max(np.abs(local - fine).max(axis=(1, 2)) / scale))
    if defect > QUADRATURE_CHECK:
        raise QuadratureError(f'Mesh with {len(mesh) - 1} elements too coarse near 0 for the 1/r weights, '
                              f'relative quadrature defect {defect:.2e}')
    return _global(local, mesh)


@dataclass
class Assembly:
    """
    Stiffness form A and weighted mass B restricted to the free nodes.

    For the system the unknowns are (a at free_a nodes, b at free_b nodes);
    for the scalar problem only a.
    """
    A: sparse.csc_matrix
    B: sparse.csc_matrix
    mesh: np.ndarray
    free_a: np.ndarray
    free_b: np.ndarray
    epsilon: float
    params: object = None
    d: float = None

    @property
    def scalar(self):
        return self.free_b.size == 0

    def restrict(self, a, b=None):
        """Nodal values to the unknown vector."""
        a = np.asarray(a, dtype=float)
        if self.scalar:
            return a[self.free_a]
        return np.concatenate([a[self.free_a], np.asarray(b, dtype=float)[self.free_b]])

    def expand(self, x):
        """Unknown vector to nodal values (a, b), zero on pinned nodes."""
        a = np.zeros(len(self.mesh))
        b = np.zeros(len(self.mesh))
        k = self.free_a.size
        a[self.free_a] = x[:k]
        b[self.free_b] = x[k:]
        return a, b

    def quotient(self, a, b=None):
        """Rayleigh quotient of a nodal pair; values on pinned nodes are dropped."""
        x = self.restrict(a, b)
        return float(x @ (self.A @ x)) / float(x @ (self.B @ x))


def _free_nodes(mesh, gamma):
    last = len(mesh) - 1
    start = 0 if gamma < FREE_GAMMA else 1
    return np.arange(start, last)


def assemble(params, profile, epsilon, mesh):
    """
    (A, B) of the system quotient for gamma1 = params.gamma1, gamma2 = params.gamma2.

    A = [[K + g1^2 M + C, C], [C, K + g2^2 M + C]] and B = diag(D, D) with K
    the r-weighted stiffness, M the 1/r mass, C and D the profile weighted masses.
    """
    mesh = np.asarray(mesh, dtype=float)
    stiffness = _global(_local_stiffness(mesh), mesh)
    inverse_r = _check_quadrature(mesh)
    coupling, mass = profile_weights(profile, epsilon, mesh)

    free_a = _free_nodes(mesh, params.gamma1)
    free_b = _free_nodes(mesh, params.gamma2)
    block_a = (stiffness + params.gamma1 ** 2 * inverse_r + coupling)[free_a][:, free_a]
    block_b = (stiffness + params.gamma2 ** 2 * inverse_r + coupling)[free_b][:, free_b]
    cross = coupling[free_a][:, free_b]
    A = sparse.bmat([[block_a, cross], [cross.T, block_b]], format='csc')
    B = sparse.block_diag([mass[free_a][:, free_a], mass[free_b][:, free_b]], format='csc')
    log.debug(f'Assembled {A.shape[0]} unknowns on {len(mesh) - 1} elements, epsilon={epsilon}')
    return Assembly(A=A, B=B, mesh=mesh, free_a=free_a, free_b=free_b, epsilon=float(epsilon),
                    params=params, d=params.d)


def assemble_scalar(d, profile, epsilon, mesh):
    """(A, B) of the scalar quotient int r a'^2 + d^2 a^2 / r over (1 / eps^2) int r (1 - f^2) a^2."""
    mesh = np.asarray(mesh, dtype=float)
    stiffness = _global(_local_stiffness(mesh), mesh)
    inverse_r = _check_quadrature(mesh)
    _, mass = profile_weights(profile, epsilon, mesh)
    free_a = _free_nodes(mesh, d)
    A = (stiffness + d ** 2 * inverse_r)[free_a][:, free_a].tocsc()
    B = mass[free_a][:, free_a].tocsc()
    return Assembly(A=A, B=B, mesh=mesh, free_a=free_a, free_b=np.array([], dtype=int),
                    epsilon=float(epsilon), d=float(d))
