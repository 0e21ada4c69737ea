"""
Shooting on the leading amplitude of the vortex profile.

The profile equation f'' + f'/r - d^2 f / r^2 = -f (1 - f^2) is integrated as a
first order system in y = (f, r f') from the small-r series seed. Amplitudes
above A_d overshoot 1, amplitudes below turn down before reaching it.
"""

import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.signal import convolve

from ..errors import IntegrationError, DichotomyError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

OVERSHOOT = 'Overshoot'
UNDERSHOOT = 'Undershoot'
INDETERMINATE = 'Indeterminate'

OVERSHOOT_LEVEL = 1 + 1e-12
SLOPE_LEVEL = -1e-12
PLATEAU_LEVEL = 1 - 1e-6
SEED_ATOL = 1e-14

# powers of r^2 and odd powers of a0 r^d kept in the small-r series
SERIES_ORDER = 12
SERIES_DEGREE = 6
SERIES_R_MIN = 1e-4
SERIES_R_MAX = 0.5
SERIES_CANDIDATES = 120
SERIES_SAFETY = 1e-2


@dataclass(frozen=True, eq=False)
class ShootResult:
    classification: str
    a0: float
    r: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray

    @property
    def r_end(self):
        return float(self.r[-1])


def _series_terms(d, a0, r):
    """Terms c[j, k] a0^(2j+1) r^p at each r, and the powers p = (2j+1) d + 2k."""
    c = series_coefficients(d)
    j = np.arange(c.shape[0])[:, None]
    k = np.arange(c.shape[1])[None, :]
    powers = (2 * j + 1) * d + 2 * k
    r = np.asarray(r, dtype=float)
    terms = c * a0 ** (2 * j + 1) * r[..., None, None] ** powers
    return terms, powers


@functools.lru_cache(maxsize=64)
def series_coefficients(d):
    """
    c[j, k] with f = sum c[j, k] (a0 r^d)^(2j+1) r^(2k) solving the profile equation near 0.

    Matching powers of a0 r^d and r^2 gives
    (p^2 - d^2) c[j, k] = [f^3]_(j, k-1) - c[j, k-1] with p = (2j+1) d + 2k,
    so c[0, 0] = 1, c[0, 1] = -1 / (4(d+1)) and c[j, 0] = 0 for j > 0.
    """
    d = float(d)
    c = np.zeros((SERIES_DEGREE, SERIES_ORDER + 1))
    c[0, 0] = 1.0
    for k in range(1, SERIES_ORDER + 1):
        known = c[:, :k]
        # coefficients of P^3 where f = u P(u^2, r^2), u = a0 r^d
        cube = convolve(convolve(known, known, method='direct'), known, method='direct')
        for j in range(SERIES_DEGREE):
            forcing = cube[j - 1, k - 1] if j > 0 else 0.0
            p = (2 * j + 1) * d + 2 * k
            c[j, k] = (forcing - c[j, k - 1]) / (p * p - d * d)
    c.flags.writeable = False
    return c


def series_value(d, a0, r):
    """f near 0 from the truncated series with leading amplitude a0."""
    terms, _ = _series_terms(d, a0, r)
    return terms.sum(axis=(-2, -1))


def series_radial_derivative(d, a0, r):
    """r f' of series_value."""
    terms, powers = _series_terms(d, a0, r)
    return (terms * powers).sum(axis=(-2, -1))


def series_residual(d, a0, r):
    """
    Profile equation residual of the truncated series, in closed form.

    The r^d term drops out of the operator exactly, so no cancellation is
    amplified by 1 / r^2.
    """
    terms, powers = _series_terms(d, a0, r)
    r = np.asarray(r, dtype=float)
    f = terms.sum(axis=(-2, -1))
    operator = (terms * (powers ** 2 - d * d)).sum(axis=(-2, -1)) / r ** 2
    return operator + f * (1 - f * f)


def series_radius(d, a0, tol):
    """Largest r in [1e-4, 0.5] up to which the truncated series solves the profile equation within tol / 100."""
    if a0 <= 0:
        return SERIES_R_MAX
    r = np.geomspace(SERIES_R_MIN, SERIES_R_MAX, SERIES_CANDIDATES)
    with np.errstate(over='ignore', invalid='ignore'):
        residual = np.abs(series_residual(d, a0, r))
    bad = np.flatnonzero(~(residual <= tol * SERIES_SAFETY))
    if bad.size == 0:
        return SERIES_R_MAX
    if bad[0] == 0:
        return SERIES_R_MIN
    return float(r[bad[0] - 1])


def profile_rhs(d):
    d2 = d * d

    def rhs(r, y):
        f, rfp = y
        return [rfp / r, d2 * f / r - r * f * (1 - f * f)]

    return rhs


def shoot_profile(d, a0, r_max=30.0, tol=1e-10):
    """
    Integrate the profile equation from the series seed with amplitude a0 and classify it.

    Returns a ShootResult: Overshoot if f exceeds 1, Undershoot if f turns down
    while below 1, Indeterminate if neither happens before r_max.
    """
    if d <= 0:
        raise ValueError(f'd must be > 0, got {d}')
    if a0 < 0:
        raise ValueError(f'a0 must be >= 0, got {a0}')
    if r_max <= 1:
        raise ValueError(f'r_max must be > 1, got {r_max}')

    r0 = series_radius(d, a0, tol)
    if a0 == 0:
        # zero amplitude is the zero solution, flat counts as turning down
        r = np.array([r0, r_max])
        zeros = np.zeros(2)
        return ShootResult(UNDERSHOOT, a0, r, zeros, zeros.copy())

    f0 = float(series_value(d, a0, r0))
    if f0 >= 1:
        raise IntegrationError(f'Amplitude a0={a0} too large, f exceeds 1 inside the series region', radius=r0)
    y0 = [f0, float(series_radial_derivative(d, a0, r0))]

    def overshoot(r, y):
        return y[0] - OVERSHOOT_LEVEL

    overshoot.terminal = True
    overshoot.direction = 1

    def undershoot(r, y):
        if y[0] >= PLATEAU_LEVEL:
            return 1.0
        return y[1] / r - SLOPE_LEVEL

    undershoot.terminal = True
    undershoot.direction = -1

    sol = solve_ivp(profile_rhs(d), (r0, r_max), y0,
                    method='DOP853',
                    rtol=tol / 10,
                    atol=SEED_ATOL,
                    events=[overshoot, undershoot])
    if sol.status == -1:
        raise IntegrationError(f'Profile integration failed for a0={a0}: {sol.message}', radius=sol.t[-1])

    r = sol.t
    f = sol.y[0]
    f_prime = sol.y[1] / r
    if sol.t_events[0].size > 0:
        classification = OVERSHOOT
    elif sol.t_events[1].size > 0:
        classification = UNDERSHOOT
    elif f_prime[-1] <= -SLOPE_LEVEL and f[-1] < PLATEAU_LEVEL:
        classification = UNDERSHOOT
    else:
        classification = INDETERMINATE
    return ShootResult(classification, a0, r, f, f_prime)


def find_critical_amplitude(d, tol=1e-10, r_max=30.0):
    """
    Bisection on the Overshoot / Undershoot dichotomy of shoot_profile.

    Returns the bracket midpoint once the bracket is narrower than tol. An
    Indeterminate midpoint is already within the integrator's resolution of A_d
    and is returned as is.
    """
    if d <= 0:
        raise ValueError(f'd must be > 0, got {d}')
    if tol <= 0:
        raise ValueError(f'tol must be > 0, got {tol}')

    def classify(a0):
        return shoot_profile(d, a0, r_max=r_max, tol=tol).classification

    lo = 0.0
    hi = 1.0
    for _ in range(60):
        try:
            cls = classify(hi)
        except IntegrationError:
            # seed already above 1, certainly too large
            cls = OVERSHOOT
        if cls == OVERSHOOT:
            break
        if cls == INDETERMINATE:
            return hi
        lo = hi
        hi *= 2
    else:
        raise DichotomyError(f'No overshooting amplitude found below {hi} for d={d}')

    if classify(lo) != UNDERSHOOT:
        raise DichotomyError(f'Lower bracket end a0={lo} does not undershoot for d={d}, '
                             f'integrator tolerance too loose?')

    iteration = 0
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        cls = classify(mid)
        iteration += 1
        if cls == OVERSHOOT:
            hi = mid
        elif cls == UNDERSHOOT:
            lo = mid
        else:
            log.debug(f'd={d}: indeterminate shot at a0={mid:.15g} after {iteration} bisections')
            return mid
    log.debug(f'd={d}: bracket [{lo:.15g}, {hi:.15g}] after {iteration} bisections')
    return 0.5 * (lo + hi)
