"""
Scalar analogues of the connection problem and the exact bounded pair at n = 1.

    EqGL0:  a'' + a'/r - d^2 a / r^2 = -(1 - f^2) a
    EqGLR:  a'' + a'/r - d^2 a / r^2 - 2 f^2 a = -(1 - f^2) a

EqGL0 is satisfied by f itself; at infinity its solutions behave like 1 and
log r. EqGLR behaves like exp(+-sqrt(2) r) / sqrt(r).
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline

from ..basis import ModeParams, system_matrix
from ..errors import IntegrationError
from ..profile import pointwise_residual
from ..profile.profile import RESIDUAL_EDGE, spline_residual, linear_coefficient
from .connect import ZERO_THRESHOLD

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

SCALAR_EQUATIONS = ('EqGL0', 'EqGLR')
START_RADIUS = 1e-3
GL0_FIT = (15.0, 30.0)
GLR_MATCH = 15.0
EXACT_MODE_R_MAX = 30.0
SQRT2 = np.sqrt(2)


@dataclass
class ScalarCheck:
    """
    Verdict of one scalar equation.

    coefficient is the relative weight of the unbounded behavior: lim r a'
    over a at the far end for EqGL0, the exp(sqrt(2) r) share at the match
    radius for EqGLR.
    """
    which: str
    d: float
    bounded: bool
    coefficient: float
    threshold: float
    radius: float
    identity_defect: float = float('nan')
    sup_residual: float = float('nan')

    def to_dict(self):
        return dict(self.__dict__)


def scalar_potential(profile, r, which):
    """q(r) with (r a')' = q(r) a."""
    f2 = profile(r) ** 2
    q = profile.d ** 2 / r - r * (1 - f2)
    if which == 'EqGLR':
        q = q + 2 * r * f2
    return q


def scalar_residual(profile, a, a_prime, which='EqGL0'):
    """
    Residual of a scalar equation for samples (a, a') on the profile grid, NaN below r_series.

    For a = f the EqGL0 residual is computed in the same way as the profile
    residual, so the two arrays agree exactly beyond the series region.
    """
    if which not in SCALAR_EQUATIONS:
        raise ValueError(f'Unknown scalar equation {which}')
    coefficient = linear_coefficient(profile)
    if which == 'EqGLR':
        coefficient = coefficient - 2 * profile.f ** 2
    return spline_residual(profile, np.asarray(a, dtype=float), np.asarray(a_prime, dtype=float), coefficient)


def _regular_solution(profile, which, r_end, tol):
    d = profile.d

    def rhs(r, y):
        return [y[1] / r, scalar_potential(profile, r, which) * y[0]]

    y0 = [START_RADIUS ** d, d * START_RADIUS ** d]
    sol = solve_ivp(rhs, (START_RADIUS, r_end), y0, method='DOP853', rtol=tol / 10, atol=tol * y0[0] * 1e-3,
                    dense_output=True)
    if sol.status == -1:
        raise IntegrationError(f'{which}: {sol.message}', radius=sol.t[-1])
    return sol


def _check_gl0(profile, tol):
    r_lo, r_hi = GL0_FIT
    sol = _regular_solution(profile, 'EqGL0', r_hi, tol)
    r = np.linspace(r_lo, r_hi, 200)
    a, ra = sol.sol(r)
    design = np.column_stack([np.ones_like(r), r ** -2, r ** -4])
    coef, *_ = np.linalg.lstsq(design, ra, rcond=None)
    beta = float(coef[0])
    coefficient = abs(beta) / abs(a[-1])

    identity = scalar_residual(profile, profile.f, profile.f_prime, 'EqGL0')
    reference = pointwise_residual(profile)
    inner = slice(RESIDUAL_EDGE, -RESIDUAL_EDGE)
    log.debug(f'EqGL0: lim r a\' = {beta:.3e}, a({r_hi}) = {a[-1]:.6e}')
    return ScalarCheck(which='EqGL0', d=profile.d, bounded=coefficient < ZERO_THRESHOLD, coefficient=coefficient,
                       threshold=ZERO_THRESHOLD, radius=r_hi,
                       identity_defect=float(np.nanmax(np.abs(identity - reference))),
                       sup_residual=float(np.nanmax(np.abs(identity[inner]))))


def _check_glr(profile, tol):
    r = GLR_MATCH
    sol = _regular_solution(profile, 'EqGLR', r, tol)
    a, ra = sol.y[:, -1]
    grow = np.exp(SQRT2 * r) / np.sqrt(r)
    decay = np.exp(-SQRT2 * r) / np.sqrt(r)
    r_decay = decay * (-SQRT2 * r - 0.5)
    # r (a' J- - a J-') = 2 sqrt(2) alpha for a = alpha J+ + beta J-
    alpha = (ra * decay - a * r_decay) / (2 * SQRT2)
    coefficient = abs(alpha) * grow / abs(a)
    log.debug(f'EqGLR: growing amplitude {alpha:.6e} at r={r}, share {coefficient:.6f}')
    return ScalarCheck(which='EqGLR', d=profile.d, bounded=coefficient < ZERO_THRESHOLD,
                       coefficient=float(coefficient), threshold=ZERO_THRESHOLD, radius=r)


def scalar_bounded_check(profile, which, tol=1e-10):
    """
    Decide whether the solution of EqGL0 or EqGLR that is regular at 0 stays bounded.

    The regular solution is started as r^d at r = 1e-3 and integrated outward.
    """
    if which not in SCALAR_EQUATIONS:
        raise ValueError(f'Unknown scalar equation {which}, expected one of {SCALAR_EQUATIONS}')
    if which == 'EqGL0':
        check = _check_gl0(profile, tol)
    else:
        check = _check_glr(profile, tol)
    verdict = 'a bounded solution' if check.bounded else 'no bounded solution'
    log.info(f'{which} for d={profile.d}: {verdict} (coefficient {check.coefficient:.3e})')
    return check


def exact_pair(profile, d, r):
    """
    (a, r a', b, r b') of (f' + d f / r, f' - d f / r) with f'' taken from the profile equation.

    d is the degree used in the pair; the profile keeps its own degree.
    """
    f = profile(r)
    fp = profile.derivative(r)
    fpp = -fp / r + profile.d ** 2 * f / r ** 2 - f * (1 - f * f)
    a = fp + d * f / r
    b = fp - d * f / r
    a_prime = fpp + d * fp / r - d * f / r ** 2
    b_prime = fpp - d * fp / r + d * f / r ** 2
    return np.array([a, r * a_prime, b, r * b_prime])


def exact_mode_residual(profile, d=None, r_max=EXACT_MODE_R_MAX):
    """
    Sup residual of the pair (f' + d f / r, f' - d f / r) in the linear system with n = 1.

    The system is assembled for the profile's own degree; passing a different d
    only changes the pair.
    """
    d = profile.d if d is None else float(d)
    params = ModeParams.from_mode(profile.d, 1.0)
    grid = profile.grid
    r = grid[(grid >= profile.r_series) & (grid <= r_max)]
    states = exact_pair(profile, d, r)
    derivative = np.empty_like(states)
    for i in (1, 3):
        derivative[i] = make_interp_spline(r, states[i], k=5)(r, 1)
    expected = np.column_stack([system_matrix(params, profile, x) @ states[:, j] for j, x in enumerate(r)])
    residual = np.maximum(np.abs(derivative[1] - expected[1]), np.abs(derivative[3] - expected[3])) / r
    inner = slice(RESIDUAL_EDGE, -RESIDUAL_EDGE)
    value = float(np.max(residual[inner]))
    log.info(f'Exact mode residual for d={profile.d} (pair d={d}): {value:.3e}')
    return value
