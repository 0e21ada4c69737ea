"""
The four canonical solutions near r = +inf.

In x = a + b, y = a - b the system reads

    x'' + x'/r - gamma^2 x / r^2 - 2 x = -(2 + mu) (d^2 / r^2 + s) x - xi^2 y / r^2
    y'' + y'/r - n^2 y / r^2           = -mu s y - xi^2 x / r^2

with s(r) = 1 - f^2 - d^2 / r^2 = O(r^-4). Every branch is stored through
reduced unknowns (w, z), x = 2 F w and y = 2 F z, where F = exp(sigma sqrt(2) r) / sqrt(r)
for InfGrow / InfDecay and F = r^(sigma n) for InfPoly+ / InfPoly-. The
integrals to +inf are truncated at r_max; the exact amplitude of each branch is
then recovered from a fit in 1/r of its leading reduced component.
"""

import logging

import numpy as np
from numpy.polynomial import polynomial

from ..errors import NonContractionError, DegenerateBasisError
from .branch import FarBranch, FAR_TAGS, branch_frame
from .quadrature import UniformGrid
from .system import frame_determinant, wronskian

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

SQRT2 = np.sqrt(2)
MAX_ITERATIONS = 60
STALL_RATIO = 0.9
R0_GROWTH = 1.25
CONTRACTION_TARGET = 0.5
BALL_RADIUS = 2.0
FIT_EXCLUDE = 5.0
FIT_DEGREE = 3
OVERFLOW_LOG = np.log(1e300)
DETERMINANT_RTOL = 1e-6
RESOLVENT_ORDER = ('InfGrow', 'InfDecay', 'InfPoly-', 'InfPoly+')


class _FarOperator:
    """Fixed point map of one far branch on a uniform grid."""

    def __init__(self, params, profile, grid, which):
        self.params = params
        self.grid = grid
        self.which = which
        t = grid.t
        self.t = t
        f = profile(t)
        d2 = params.d ** 2
        mu = params.mu
        self.s = (1 - f) * (1 + f) - d2 / t ** 2
        c = params.gamma_sq - (2 + mu) * d2 - 0.25
        self.coef = c / t ** 2 - (2 + mu) * self.s
        self.n = params.n
        self.xi2 = params.xi_sq
        self.mu = mu

    def lead(self):
        ones, zeros = np.ones_like(self.t), np.zeros_like(self.t)
        if self.which in ('InfGrow', 'InfDecay'):
            return ones, zeros
        return zeros, ones

    def H(self, w, z):
        return self.coef * w - self.xi2 * z / self.t ** 2

    def G(self, w, z):
        return -self.mu * self.s * z - self.xi2 * w / self.t ** 2

    def _w_part(self, w, z, lead):
        grid, t, n = self.grid, self.t, self.n
        H = self.H(w, z)
        if self.which == 'InfGrow':
            wp = grid.exp_up(2 * SQRT2, H)
            return lead - grid.cumulative_down(wp), wp
        if self.which == 'InfDecay':
            wp = -grid.exp_down(2 * SQRT2, H)
            return lead - grid.cumulative_down(wp), wp
        if self.which == 'InfPoly+':
            e1 = grid.exp_up(SQRT2, t ** (n + 0.5) * H)
            outer = grid.exp_down(SQRT2, e1)
            w = -t ** (-n - 0.5) * outer
            wp = -((-n - 0.5) * t ** (-n - 1.5) * outer + t ** (-n - 0.5) * (SQRT2 * outer - e1))
            return lead + w, wp
        e2 = grid.exp_down(SQRT2, t ** (0.5 - n) * H)
        outer = grid.exp_up(SQRT2, e2)
        w = -t ** (n - 0.5) * outer
        wp = -((n - 0.5) * t ** (n - 1.5) * outer + t ** (n - 0.5) * (-SQRT2 * outer + e2))
        return lead + w, wp

    def _z_part(self, w, z, lead):
        grid, t, n = self.grid, self.t, self.n
        G = self.G(w, z)
        if self.which == 'InfGrow':
            q1 = t ** (-2 * n - 1) * grid.exp_up(SQRT2, t ** (n + 0.5) * G)
            P = grid.exp_up(SQRT2, q1)
            zp = (n + 0.5) * t ** (n - 0.5) * P + t ** (n + 0.5) * (-SQRT2 * P + q1)
            return lead + t ** (n + 0.5) * P, zp
        if self.which == 'InfDecay':
            q1 = t ** (2 * n - 1) * grid.exp_down(SQRT2, t ** (0.5 - n) * G)
            P = grid.exp_down(SQRT2, q1)
            zp = (0.5 - n) * t ** (-0.5 - n) * P + t ** (0.5 - n) * (SQRT2 * P - q1)
            return lead + t ** (0.5 - n) * P, zp
        if self.which == 'InfPoly+':
            zp = t ** (-2 * n - 1) * grid.cumulative_up(t ** (2 * n + 1) * G)
            return lead - grid.cumulative_down(zp), zp
        # the truncated part of the inner integral, with G ~ r^-4
        tail = G[-1] * t[-1] ** (2 - 2 * n) / (2 * n + 2)
        zp = -t ** (2 * n - 1) * (grid.cumulative_down(t ** (1 - 2 * n) * G) + tail)
        return lead - grid.cumulative_down(zp), zp

    def apply(self, w, z, with_lead=True):
        """One Gauss-Seidel sweep, w first. Returns (w, w', z, z')."""
        lead_w, lead_z = self.lead() if with_lead else (0.0, 0.0)
        w_new, wp = self._w_part(w, z, lead_w)
        z_new, zp = self._z_part(w_new, z, lead_z)
        return w_new, wp, z_new, zp

    def second_derivatives(self, w, wp, z, zp):
        t, n = self.t, self.n
        H, G = self.H(w, z), self.G(w, z)
        if self.which in ('InfGrow', 'InfDecay'):
            sigma = 1.0 if self.which == 'InfGrow' else -1.0
            wpp = H - 2 * sigma * SQRT2 * wp
            zpp = G - 2 * sigma * SQRT2 * zp - 2 * z + (n ** 2 - 0.25) * z / t ** 2
            return wpp, zpp
        sigma = 1.0 if self.which == 'InfPoly+' else -1.0
        k = sigma * n + 0.5
        wpp = H + 2 * w - 2 * k * wp / t - k * (k - 1) * w / t ** 2
        zpp = G - (2 * sigma * n + 1) * zp / t
        return wpp, zpp


def _contraction_estimate(params, profile, R0, r_max, step):
    """Growth rate of the linear part of the fixed point maps, by a few power steps."""
    worst = 0.0
    for which in FAR_TAGS:
        operator = _FarOperator(params, profile, UniformGrid(R0, r_max, step), which)
        w = np.ones_like(operator.t)
        z = np.ones_like(operator.t)
        norms = []
        for _ in range(3):
            w, _, z, _ = operator.apply(w, z, with_lead=False)
            norms.append(max(np.max(np.abs(w)), np.max(np.abs(z))))
        rate = norms[-1] / norms[-2] if norms[-2] > 0 else 0.0
        worst = max(worst, rate)
    return worst


def choose_R0(params, tol=1e-12, profile=None, r_max=40.0, step=0.05):
    """
    Left end of the far field interval.

    Starts from the integral bound condition t >= 2 alpha / beta over the
    exponents alpha in {n + 1/2, |n - 1/2|} with beta = sqrt(2), then, when a
    profile is given, grows by 25% until the numerical contraction estimate
    of the four maps is below 1/2. The rule does not depend on tol.
    """
    n = params.n
    alphas = (n + 0.5, abs(n - 0.5))
    R0 = max(2 * alpha / SQRT2 for alpha in alphas)
    if profile is None:
        return float(R0)
    coarse = max(step, 0.2)
    while R0 < r_max - 2 * FIT_EXCLUDE:
        estimate = _contraction_estimate(params, profile, R0, r_max, coarse)
        log.debug(f'R0={R0:.4g}: contraction estimate {estimate:.3g}')
        if estimate < CONTRACTION_TARGET:
            break
        R0 *= R0_GROWTH
    else:
        log.warning(f'No far field contraction below r_max={r_max} for {params.info()}, using R0={R0:.4g}')
    return float(R0)


def _iterate(operator, tol):
    w, z = operator.lead()
    delta_old = None
    ratio = float('nan')
    for iteration in range(1, MAX_ITERATIONS + 1):
        w_new, wp, z_new, zp = operator.apply(w, z)
        delta = max(np.max(np.abs(w_new - w)), np.max(np.abs(z_new - z)))
        w, z = w_new, z_new
        if not np.isfinite(delta):
            return None
        if delta_old is not None and delta_old > 0:
            ratio = delta / delta_old
        log.debug(f'{operator.which} iteration {iteration}: change {delta:.3e}, ratio {ratio:.3g}')
        if delta < max(tol, 1e-14):
            return w, wp, z, zp, iteration, ratio
        if iteration > 2 and ratio > STALL_RATIO:
            return None
        delta_old = delta
    return None


def _fit_amplitude(t, values, R0, r_max):
    """Limit of values at +inf from a cubic in 1/r over the outer half, away from the truncation end."""
    mask = (t >= (R0 + r_max) / 2) & (t <= r_max - FIT_EXCLUDE)
    if np.count_nonzero(mask) < 4 * (FIT_DEGREE + 1):
        mask = t >= (R0 + r_max) / 2
    coefficients = polynomial.polyfit(1 / t[mask], values[mask], FIT_DEGREE)
    return float(coefficients[0])


def far_branch(params, profile, which, R0=None, r_max=40.0, tol=1e-12, step=0.05, ode_tol=1e-10):
    """
    One canonical solution near +inf, normalized so its tagged behavior has coefficient 1.

    On a stalled iteration R0 grows by 25%; NonContractionError when R0 runs
    into the fitting window.
    """
    if which not in FAR_TAGS:
        raise ValueError(f'Unknown far branch {which}')
    if R0 is None:
        R0 = choose_R0(params, tol, profile=profile, r_max=r_max, step=step)
    while True:
        if R0 >= r_max - 2 * FIT_EXCLUDE:
            raise NonContractionError(f'{which} for {params.info()}: '
                                      f'no contraction with R0 < {r_max - 2 * FIT_EXCLUDE}')
        grid = UniformGrid(R0, r_max, step)
        operator = _FarOperator(params, profile, grid, which)
        result = _iterate(operator, tol)
        if result is not None:
            break
        log.info(f'{which}: far field iteration stalls at R0={R0:.4g}, increase R0')
        R0 *= R0_GROWTH
    w, wp, z, zp, iterations, contraction = result
    if max(np.max(np.abs(w)), np.max(np.abs(z))) > BALL_RADIUS:
        log.warning(f'{which}: iterate leaves the ball of radius {BALL_RADIUS}')
    wpp, zpp = operator.second_derivatives(w, wp, z, zp)

    leading = w if which in ('InfGrow', 'InfDecay') else z
    amplitude = _fit_amplitude(grid.t, leading, grid.start, grid.stop)
    log.debug(f'{which}: converged in {iterations} iterations, fitted amplitude {amplitude:.12g}')
    branch = FarBranch(params=params, behavior=which, grid=grid.t.copy(),
                       w=w, w_prime=wp, w_second=wpp, z=z, z_prime=zp, z_second=zpp,
                       lead_coeff=amplitude, profile=profile, tol=ode_tol, R0=grid.start,
                       iterations=iterations, contraction=contraction)
    branch = branch.scaled(1 / amplitude)

    peak = np.max(branch.log_scale(branch.grid) + np.log(np.abs(branch.u) + np.abs(branch.v) + 1e-300))
    if peak > OVERFLOW_LOG:
        branch.overflow = True
        log.warning(f'{which}: values beyond r={branch.grid[np.argmax(branch.log_scale(branch.grid))]:.4g} '
                    f'are not representable without compensation')
    return branch


def expected_far_determinant(params):
    return -16 * params.n * SQRT2


def _pair(first, second, r):
    x, lx = first.state(r)
    y, ly = second.state(r)
    return wronskian(x, y) * np.exp(lx + ly)


def infinity_basis(params, profile, R0=None, r_max=40.0, tol=1e-12, step=0.05, ode_tol=1e-10):
    """
    InfGrow, InfDecay, InfPoly-, InfPoly+ on a common [R0, r_max].

    InfDecay and InfPoly- are rescaled so that W(InfGrow, InfDecay) = 4 sqrt(2)
    and W(InfPoly+, InfPoly-) = 4n, which makes the frame determinant -16 n sqrt(2).
    The relative pairing defect before rescaling is kept on the branches.
    """
    if R0 is None:
        R0 = choose_R0(params, tol, profile=profile, r_max=r_max, step=step)
    branches = {which: far_branch(params, profile, which, R0, r_max, tol, step, ode_tol) for which in FAR_TAGS}
    R0_common = max(branch.R0 for branch in branches.values())
    if any(branch.R0 != R0_common for branch in branches.values()):
        branches = {which: far_branch(params, profile, which, R0_common, r_max, tol, step, ode_tol)
                    for which in FAR_TAGS}

    grid = branches['InfGrow'].grid
    r_pair = float(grid[np.argmin(np.abs(grid - (R0_common + r_max) / 2))])
    n = params.n
    exponential = _pair(branches['InfGrow'], branches['InfDecay'], r_pair)
    power = _pair(branches['InfPoly+'], branches['InfPoly-'], r_pair)
    defect = max(abs(exponential / (4 * SQRT2) - 1), abs(power / (4 * n) - 1))
    log.debug(f'Far field pairings {exponential:.12g} and {power:.12g}, defect {defect:.3e}')
    branches['InfDecay'] = branches['InfDecay'].scaled(4 * SQRT2 / exponential)
    branches['InfPoly-'] = branches['InfPoly-'].scaled(4 * n / power)
    for branch in branches.values():
        branch.pairing_defect = defect

    ordered = [branches[which] for which in RESOLVENT_ORDER]
    expected = expected_far_determinant(params)
    for r in (R0_common, r_pair, r_max - FIT_EXCLUDE):
        det = frame_determinant(*branch_frame(ordered, r))
        if not np.isfinite(det) or abs(det) < 1e-12 * abs(expected):
            raise DegenerateBasisError(f'Far frame for {params.info()} is degenerate at r={r}')
        if abs(det / expected - 1) > DETERMINANT_RTOL:
            log.warning(f'Far frame determinant {det:.12g} differs from {expected:.12g} at r={r:.4g}')
    log.info(f'Infinity basis for d={params.d}, n={n:.6g} built on [{R0_common:.4g}, {r_max:.4g}]')
    return ordered
