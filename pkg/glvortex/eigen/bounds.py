"""
Explicit admissible pairs built from the profile.

For 1 < n < d + 1 the functions x = f' / r^(n-1) and y = d f / r^n give
a = (x + y) / 2 and b = (x - y) / 2, which satisfy

    -(r a')' + g1^2 a / r + r f^2 b - r (1 - 2 f^2) a = -(n - 1) r^(1-n) f (1 - f^2)
    -(r b')' + g2^2 b / r + r f^2 a - r (1 - 2 f^2) b = -(n - 1) r^(1-n) f (1 - f^2)

with g1 = |n - d|, g2 = n + d, so their quotient on (0, inf) is 1 - C_n.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import make_interp_spline

from ..basis import ModeParams
from ..errors import TailTooLargeError
from ..profile.profile import RESIDUAL_EDGE
from .assemble import assemble, make_mesh

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

TAIL_LIMIT = 0.01
QUAD_LIMIT = 400
QUAD_RTOL = 1e-10


def _check_range(d, n):
    if d < 1 or not 1 < n < d + 1:
        raise ValueError(f'Need d >= 1 and 1 < n < d + 1, got d={d}, n={n}')


def trial_pair(profile, n, r):
    """(a, b, r a', r b') of the test pair at r > 0, with f'' from the profile equation."""
    d = profile.d
    r = np.asarray(r, dtype=float)
    f = profile(r)
    fp = profile.derivative(r)
    fpp = -fp / r + d ** 2 * f / r ** 2 - f * (1 - f * f)
    x = fp * r ** (1 - n)
    y = d * f * r ** -n
    rx = fpp * r ** (2 - n) + (1 - n) * fp * r ** (1 - n)
    ry = d * fp * r ** (1 - n) - n * d * f * r ** -n
    return (x + y) / 2, (x - y) / 2, (rx + ry) / 2, (rx - ry) / 2


@dataclass
class TestFunctionBound:
    """C_n and the quotient 1 - C_n of the test pair on (0, inf)."""
    d: float
    n: float
    C_n: float
    quotient: float
    numerator: float
    denominator: float
    tail_fraction: float
    direct_quotient: float
    syst_residual: float

    __test__ = False

    def to_dict(self):
        return dict(self.__dict__)


def _integrate(func, r_max):
    value = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, r_max)):
        part, _ = quad(func, lo, hi, limit=QUAD_LIMIT, epsabs=0.0, epsrel=QUAD_RTOL)
        value += part
    return value


def syst_residual(profile, n, r_max=30.0):
    """
    Sup over interior profile nodes of the test pair residual, relative to the largest term.

    (r a')' is taken from a quintic spline of the exact r a' samples.
    """
    d = profile.d
    g1, g2 = abs(n - d), n + d
    grid = profile.grid
    r = grid[(grid >= profile.r_series) & (grid <= r_max)]
    a, b, ra, rb = trial_pair(profile, n, r)
    f = profile(r)
    rhs = -(n - 1) * r ** (1 - n) * f * (1 - f * f)
    worst = 0.0
    for u, ru, v, g in ((a, ra, b, g1), (b, rb, a, g2)):
        terms = np.stack([-make_interp_spline(r, ru, k=5)(r, 1), g ** 2 * u / r, r * f * f * v,
                          -r * (1 - 2 * f * f) * u, -rhs])
        residual = np.abs(terms.sum(axis=0)) / np.abs(terms).max(axis=0)
        worst = max(worst, float(np.max(residual[RESIDUAL_EDGE:-RESIDUAL_EDGE])))
    return worst


def test_function_bound(d, n, profile, r_max=30.0):
    """
    C_n = int (n - 1) r^(1-n) f (1 - f^2)(a + b) / int r (1 - f^2)(a^2 + b^2) by quadrature.

    Both integrals are truncated at r_max and completed with their leading
    tails; TailTooLargeError when a tail exceeds 1% of its integral. For n <= d
    the quotient is also computed directly as a cross check.
    """
    _check_range(d, n)
    if abs(profile.d - d) > 1e-12:
        raise ValueError(f'Profile has degree {profile.d}, expected {d}')
    g1, g2 = abs(n - d), n + d
    d4 = d ** 4

    def numerator(r):
        f = profile(r)
        x = profile.derivative(r) * r ** (1 - n)
        return (n - 1) * r ** (1 - n) * f * (1 - f * f) * x

    def denominator(r):
        a, b, _, _ = trial_pair(profile, n, r)
        return r * (1 - profile(r) ** 2) * (a * a + b * b)

    num = _integrate(numerator, r_max)
    den = _integrate(denominator, r_max)
    num_tail = (n - 1) * d4 * r_max ** (-2 - 2 * n) / (2 * n + 2)
    den_tail = d4 * r_max ** (-2 * n) / (4 * n)
    tail_fraction = max(num_tail / abs(num), den_tail / den)
    if tail_fraction > TAIL_LIMIT:
        raise TailTooLargeError(f'd={d}, n={n}: tail beyond r_max={r_max} is {tail_fraction:.2%} of the integrals')
    num += num_tail
    den += den_tail
    C_n = num / den

    direct = float('nan')
    if n <= d:
        def energy(r):
            f = profile(r)
            a, b, ra, rb = trial_pair(profile, n, r)
            return (ra * ra + rb * rb) / r + g1 ** 2 * a * a / r + g2 ** 2 * b * b / r + r * f * f * (a + b) ** 2

        energy_tail = d ** 2 * r_max ** (-2 * n) / (2 * n) * (n ** 2 / 2 + (g1 ** 2 + g2 ** 2) / 4)
        direct = (_integrate(energy, r_max) + energy_tail) / den

    residual = syst_residual(profile, n, r_max)
    log.info(f'd={d}, n={n}: C_n={C_n:.10g}, quotient 1 - C_n={1 - C_n:.10g}, direct {direct:.10g}')
    return TestFunctionBound(d=float(d), n=float(n), C_n=float(C_n), quotient=float(1 - C_n), numerator=float(num),
                             denominator=float(den), tail_fraction=float(tail_fraction),
                             direct_quotient=float(direct), syst_residual=residual)


@dataclass
class CutoffPair:
    """The test pair at scale eps on [0, N], tapered by (1 - r)^2 / (1 - N)^2 on [N, 1]."""
    d: float
    n: float
    epsilon: float
    N: float
    mesh: np.ndarray
    a: np.ndarray
    b: np.ndarray
    quotient: float
    assembly: object


def cutoff_family(d, n, profile, epsilon, N=0.5, mesh=None, mesh_size=400, grading=0.0):
    """
    Nodal interpolant of the cutoff pair and its quotient in the discrete space.

    The interpolant is admissible, so every m(eps) computed on the same mesh
    is at most this quotient. The pair has finite energy only for n <= d.
    """
    if not 0 < N < 1:
        raise ValueError(f'Need 0 < N < 1, got {N}')
    if not 0 < n <= d:
        raise ValueError(f'Cutoff pair needs 0 < n <= d for finite energy, got d={d}, n={n}')
    params = ModeParams.from_mode(d, n)
    if mesh is None:
        mesh = make_mesh(mesh_size, params.gamma1, grading)
    mesh = np.asarray(mesh, dtype=float)

    a = np.zeros_like(mesh)
    b = np.zeros_like(mesh)
    inner = mesh > 0
    a[inner], b[inner], _, _ = trial_pair(profile, n, mesh[inner] / epsilon)
    if abs(n - d) < 1e-12:
        a[~inner] = d * profile.A_d
    taper = np.where(mesh > N, (1 - mesh) ** 2 / (1 - N) ** 2, 1.0)
    a, b = a * taper, b * taper

    assembly = assemble(params, profile, epsilon, mesh)
    quotient = assembly.quotient(a, b)
    log.info(f'Cutoff pair d={d}, n={n}, eps={epsilon}, N={N}: quotient {quotient:.10g}')
    return CutoffPair(d=float(d), n=float(n), epsilon=float(epsilon), N=float(N), mesh=mesh, a=a, b=b,
                      quotient=quotient, assembly=assembly)


def _lin_inputs(params, r, profile, f):
    if params.gamma2 ** 2 <= params.d ** 2:
        raise ValueError(f'Need gamma2^2 > d^2, got gamma2={params.gamma2}, d={params.d}')
    r = np.asarray(r, dtype=float)
    if f is None:
        f = profile(r)
    return r, np.asarray(f, dtype=float)


def lin_map(params, r, tau, profile=None, f=None):
    """H(tau) = (g1^2 - d^2) / r + (g2^2 - d^2) tau^2 / r + r f^2 (1 + tau)^2."""
    r, f = _lin_inputs(params, r, profile, f)
    d2 = params.d ** 2
    return (params.gamma1 ** 2 - d2) / r + (params.gamma2 ** 2 - d2) * tau ** 2 / r + r * f * f * (1 + tau) ** 2


def lin_trick_eval(params, r, profile=None, f=None):
    """
    Pointwise minimizer tau0 of H and the minimum H(tau0).

    1 + tau0 = k / (k + r f^2) with k = (g2^2 - d^2) / r, so
    H(tau0) = (g1^2 - d^2) / r + k r f^2 / (k + r f^2).
    """
    r, f = _lin_inputs(params, r, profile, f)
    d2 = params.d ** 2
    k = (params.gamma2 ** 2 - d2) / r
    rf2 = r * f * f
    tau0 = -rf2 / (k + rf2)
    h0 = (params.gamma1 ** 2 - d2) / r + k * rf2 / (k + rf2)
    return tau0, h0


# not test cases when collected by pytest
test_function_bound.__test__ = False
