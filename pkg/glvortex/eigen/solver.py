import logging
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.sparse.linalg import splu

from ..errors import NoConvergenceError
from .assemble import assemble, assemble_scalar, make_mesh

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

INVERSE_STEPS = 8
MAX_ITERATIONS = 200
DEFLATION_STEPS = 20
NEAR_DEGENERATE = 1e-8
SIGN_TOLERANCE = 1e-8
LOCAL_WINDOW = 5.0


@dataclass
class EigenResult:
    """
    First eigenvalue of a quotient and its eigenvector on the mesh.

    vec_a and vec_b are nodal values including the pinned nodes; vec_b is all
    zero for the scalar problem.
    """
    params: object
    d: float
    epsilon: float
    m: float
    mesh: np.ndarray
    vec_a: np.ndarray
    vec_b: np.ndarray
    rayleigh_residual: float
    residual_norm: float
    iterations: int
    m2: float
    gap: float
    sign_structure: bool
    near_degenerate: bool = False

    @property
    def scalar(self):
        return self.params is None

    def rescaled(self, s):
        """omega~(s) = omega(eps s) for s in [0, 1 / eps], zero beyond."""
        r = np.asarray(s, dtype=float) * self.epsilon
        a = np.interp(r, self.mesh, self.vec_a, right=0.0)
        b = np.interp(r, self.mesh, self.vec_b, right=0.0)
        return a, b

    def row(self):
        gamma1 = self.params.gamma1 if self.params is not None else float('nan')
        gamma2 = self.params.gamma2 if self.params is not None else float('nan')
        n = self.params.n if self.params is not None else float('nan')
        return {'d': self.d, 'n': n, 'gamma1': gamma1, 'gamma2': gamma2, 'epsilon': self.epsilon,
                'm': self.m, 'gap': self.gap, 'iterations': self.iterations, 'mesh_size': len(self.mesh) - 1}


def _b_normalize(x, B):
    return x / np.sqrt(x @ (B @ x))


def _rayleigh(x, A, B):
    return float(x @ (A @ x)) / float(x @ (B @ x))


def _relative_residual(x, m, A, B):
    bx = B @ x
    return float(np.linalg.norm(A @ x - m * bx) / (abs(m) * np.linalg.norm(bx)))


def _second_eigenvalue(A, B, x, lu, rng):
    """Inverse iteration B-orthogonal to x; returns the Rayleigh quotient of the result."""
    y = rng.standard_normal(x.size)
    bx = B @ x
    for _ in range(DEFLATION_STEPS):
        y = y - (y @ bx) * x
        y = _b_normalize(lu.solve(B @ y), B)
    y = y - (y @ bx) * x
    return _rayleigh(y, A, B)


def _smallest_pair(A, B, tol=1e-10, seed=0):
    """
    Smallest eigenvalue of A x = m B x for symmetric A > 0 and B > 0.

    Plain inverse iteration for a few steps, then Rayleigh quotient iteration.
    Returns (m, x, iterations, m2) with x B-normalized and m2 an estimate of the
    second eigenvalue from a deflated inverse iteration.
    """
    rng = np.random.default_rng(seed)
    lu = splu(A.tocsc())
    x = _b_normalize(np.ones(A.shape[0]), B)
    m = _rayleigh(x, A, B)
    iterations = 0
    for _ in range(INVERSE_STEPS):
        iterations += 1
        x = _b_normalize(lu.solve(B @ x), B)
        m = _rayleigh(x, A, B)
    log.debug(f'Inverse iteration: quotient {m:.12g} after {iterations} steps')

    previous = float('inf')
    while _relative_residual(x, m, A, B) > tol and abs(m - previous) > tol * abs(m):
        iterations += 1
        if iterations > MAX_ITERATIONS:
            raise NoConvergenceError(f'Rayleigh quotient iteration did not converge in {MAX_ITERATIONS} steps, '
                                     f'residual {_relative_residual(x, m, A, B):.3e}')
        try:
            shifted = splu((A - m * B).tocsc())
        except RuntimeError:
            # exactly singular: m is an eigenvalue to machine precision
            break
        x_new = _b_normalize(shifted.solve(B @ x), B)
        if x_new @ (B @ x) < 0:
            x_new = -x_new
        x = x_new
        previous, m = m, _rayleigh(x, A, B)
        log.debug(f'Rayleigh quotient iteration {iterations}: m={m:.15g}')

    m2 = _second_eigenvalue(A, B, x, lu, rng)
    if m2 < m * (1 - tol):
        raise NoConvergenceError(f'Converged to m={m:.10g} but a smaller eigenvalue {m2:.10g} exists')
    return m, x, iterations, m2


def _normalize_sign(a, b):
    k = int(np.argmax(np.abs(a)))
    if a[k] < 0:
        return -a, -b
    return a, b


def _sign_structure(a, b):
    """a >= -b >= 0 up to 1e-8 max|a|."""
    tol = SIGN_TOLERANCE * np.abs(a).max()
    return bool(np.all(-b >= -tol) and np.all(a + b >= -tol))


def smallest_eig(assembly, tol=1e-10, seed=0):
    """
    EigenResult of an assembled quotient: first eigenvalue, sign normalized eigenvector,
    gap to the second eigenvalue.
    """
    params, d = assembly.params, assembly.d
    m, x, iterations, m2 = _smallest_pair(assembly.A, assembly.B, tol=tol, seed=seed)
    a, b = _normalize_sign(*assembly.expand(x))
    gap = m2 - m
    near_degenerate = gap < NEAR_DEGENERATE * m
    if near_degenerate:
        log.warning(f'First eigenvalue {m:.10g} is nearly degenerate, gap {gap:.3e}')
    sign_ok = _sign_structure(a, b)
    if not sign_ok:
        log.warning(f'Eigenvector for {params.info() if params is not None else {"d": d}} '
                    f'at epsilon={assembly.epsilon} violates a >= -b >= 0')
    quotient = assembly.quotient(a, b)
    return EigenResult(params=params, d=d, epsilon=assembly.epsilon, m=float(m), mesh=assembly.mesh,
                       vec_a=a, vec_b=b, rayleigh_residual=abs(quotient - m),
                       residual_norm=_relative_residual(x, m, assembly.A, assembly.B), iterations=iterations,
                       m2=float(m2), gap=float(gap), sign_structure=sign_ok, near_degenerate=near_degenerate)


def eigen_mesh(gamma1, mesh_size=400, grading=0.0, mesh=None):
    if mesh is not None:
        return np.asarray(mesh, dtype=float)
    return make_mesh(mesh_size, gamma1, grading)


def solve_mode(params, profile, epsilon, mesh=None, mesh_size=400, grading=0.0, tol=1e-10, seed=0):
    """m_{gamma1, gamma2}(eps) with its eigenvector."""
    mesh = eigen_mesh(params.gamma1, mesh_size, grading, mesh)
    assembly = assemble(params, profile, epsilon, mesh)
    result = smallest_eig(assembly, tol, seed)
    log.info(f'm(eps={epsilon}) = {result.m:.12g} for gamma1={params.gamma1:.6g}, gamma2={params.gamma2:.6g}')
    return result


def m0(d, profile, epsilon, mesh=None, mesh_size=400, grading=0.0, tol=1e-10, seed=0):
    """m_0(eps) of the scalar quotient; the eigenvector is nonnegative."""
    mesh = eigen_mesh(d, mesh_size, grading, mesh)
    assembly = assemble_scalar(d, profile, epsilon, mesh)
    result = smallest_eig(assembly, tol, seed)
    if np.any(result.vec_a < -SIGN_TOLERANCE * np.abs(result.vec_a).max()):
        log.warning(f'm0 eigenvector for d={d} at epsilon={epsilon} changes sign')
    log.info(f'm0(eps={epsilon}) = {result.m:.12g} for d={d}')
    return result


def eigenvector_distance(result, profile, target='profile', quad_points=6):
    """
    Relative distance between the rescaled eigenvector and F in the (1 - f^2) r dr norm on [0, 1 / eps].

    F is f for target='profile' and (f' + d f / r, f' - d f / r) for
    target='exact_pair'. The eigenvector is scaled by the best constant first.
    """
    if target not in ('profile', 'exact_pair'):
        raise ValueError(f'Unknown target {target}')
    xi, w = leggauss(quad_points)
    s_nodes = result.mesh / result.epsilon
    s0, s1 = s_nodes[:-1], s_nodes[1:]
    h = s1 - s0
    s = (s0[:, None] + h[:, None] * (xi[None, :] + 1) / 2).ravel()
    weights = (h[:, None] * w[None, :] / 2).ravel()

    a, b = result.rescaled(s)
    f = profile(s)
    fp = profile.derivative(s)
    if target == 'profile':
        fa, fb = f, np.zeros_like(s)
    else:
        fa, fb = fp + result.d * f / s, fp - result.d * f / s
    weights = weights * s * (1 - f * f)

    def inner(x1, y1, x2, y2):
        return float(np.sum(weights * (x1 * x2 + y1 * y2)))

    scale = inner(a, b, fa, fb) / inner(fa, fb, fa, fb)
    diff = inner(a - scale * fa, b - scale * fb, a - scale * fa, b - scale * fb)
    return float(np.sqrt(diff / inner(a, b, a, b)))


def eigenvector_local_distance(result, profile, window=LOCAL_WINDOW, points=200):
    """
    Sup distance between the rescaled scalar eigenvector and f on s in (0, window].

    The eigenvector is fitted to f by least squares on the window first; the
    distance is relative to max f there and goes to zero with m - 1.
    """
    if window <= 0:
        raise ValueError(f'window must be > 0, got {window}')
    s = np.linspace(window / points, window, points)
    s = s[s <= 1 / result.epsilon]
    a, _ = result.rescaled(s)
    f = profile(s)
    norm = float(a @ a)
    if norm == 0:
        return float('inf')
    scale = float(a @ f) / norm
    return float(np.max(np.abs(scale * a - f)) / np.max(f))
