"""
The four canonical solutions near r = 0.

Each branch is the fixed point of an integral operator built from the
scalar kernels of L_g y = y'' + y'/r - g^2 y / r^2:

    regular    y = r^g  int_0^r t^(-2g-1) int_0^t s^(g+1) h
    singular   y = r^-g int_0^r t^(2g-1)  int_R^t s^(1-g) h   (or int_0^t)
    tau        y = tau  int_0^r t^-1 tau^-2 int_0^t s tau h

applied to the right hand sides h_a = f^2 b - (mu - (1 + mu) f^2) a and
h_b = f^2 a - (mu - (1 + mu) f^2) b.
"""

import logging

import numpy as np

from ..errors import NonContractionError, DegenerateBasisError
from .branch import SolutionBranch, ZERO_TAGS
from .quadrature import LogGrid
from .system import FrameFlow, pfaffian_determinant

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

DEGENERATE_DENOMINATOR = 1e-8
DEGENERATE_WRONSKIAN = 1e-10
R_FLOOR = 1e-3
MAX_ITERATIONS = 100
STALL_RATIO = 0.9
ROUNDOFF = 1e-14

# (kind, inner limit, carries the lead) for the a and b components
BRANCH_PLANS = {
    ('Zero1', None): (('regular', 'zero', False), ('regular', 'zero', True)),
    ('Zero3', None): (('regular', 'zero', True), ('regular', 'zero', False)),
    ('Zero2', 'D1'): (('singular', 'end', False), ('singular', 'end', True)),
    ('Zero2', 'D2'): (('regular', 'zero', False), ('singular', 'end', True)),
    ('Zero4', 'D1'): (('singular', 'end', True), ('singular', 'end', False)),
    ('Zero4', 'D2'): (('tau', 'zero', True), ('singular', 'zero', False)),
}


def special_weights(params, r):
    """
    The auxiliary weights theta, theta~ and tau of the Zero2 and Zero4 estimates.

    theta  = (-r^(g1-2) + r^(-g2+2d)) / (g1 + g2 - 2d - 2), or -r^(g1-2) log r
    theta~ = (-r^(g2-2) + r^(-g1+2d)) / (g1 + g2 - 2d - 2), or -r^(g2-2) log r
    tau    = (r^-g1 - r^g1) / (2 g1), or -log r for g1 = 0
    """
    if not params.in_D:
        raise ValueError(f'Parameters {params} outside the domain D')
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0) or np.any(r > 1):
        raise ValueError('special weights need r in (0, 1]')
    g1, g2, d = params.gamma1, params.gamma2, params.d
    log_r = np.log(r)
    den = g1 + g2 - 2 * d - 2
    if abs(den) < DEGENERATE_DENOMINATOR:
        theta = -r ** (g1 - 2) * log_r
        theta_tilde = -r ** (g2 - 2) * log_r
    else:
        theta = (-r ** (g1 - 2) + r ** (-g2 + 2 * d)) / den
        theta_tilde = (-r ** (g2 - 2) + r ** (-g1 + 2 * d)) / den
    if g1 < DEGENERATE_DENOMINATOR:
        tau = -log_r
    else:
        tau = (r ** -g1 - r ** g1) / (2 * g1)
    return theta, theta_tilde, tau


class _Operator:
    """Integral operator of one branch on a fixed grid."""

    def __init__(self, params, profile, grid, plan):
        self.params = params
        self.grid = grid
        self.plan = plan
        r = grid.r
        scaled_f = profile.scaled(r)
        f2 = profile(r) ** 2
        self.f2 = grid.scaled(2 * params.d, scaled_f ** 2)
        self.potential = grid.scaled(0.0, params.mu - (1 + params.mu) * f2)
        self.gammas = (params.gamma1, params.gamma2)
        if any(kind == 'tau' for kind, _, _ in plan):
            self._tau_weights()

    def _tau_weights(self):
        g = self.params.gamma1
        x = self.grid.x
        if g < DEGENERATE_DENOMINATOR:
            smooth = -x
        else:
            smooth = -np.expm1(2 * g * x) / (2 * g)
        self.tau = self.grid.scaled(-g, smooth)
        self.r_tau_prime = self.grid.scaled(-g, -(1 + np.exp(2 * g * x)) / 2)
        self.tau_inv = self.grid.scaled(g, 1 / smooth)
        self.tau_inv2 = self.grid.scaled(2 * g, 1 / smooth ** 2)

    def lead(self, component):
        kind, _, has_lead = self.plan[component]
        if not has_lead:
            return None, None
        g = self.gammas[component]
        if kind == 'regular':
            y = self.grid.power(g)
            return y, g * y
        if kind == 'singular':
            y = self.grid.power(-g)
            return y, -g * y
        return self.tau, self.r_tau_prime

    def kernel(self, component, source):
        kind, inner, _ = self.plan[component]
        g = self.gammas[component]
        grid = self.grid
        if kind == 'regular':
            V = grid.integrate(source.shift(g + 1), 'zero')
            y = grid.integrate(V.shift(-2 * g - 1), 'zero').shift(g)
            return y, g * y + V.shift(-g)
        if kind == 'singular':
            V = grid.integrate(source.shift(1 - g), inner)
            y = grid.integrate(V.shift(2 * g - 1), 'zero').shift(-g)
            return y, -g * y + V.shift(g)
        V = grid.integrate(source.shift(1) * self.tau, 'zero')
        U = grid.integrate(V.shift(-1) * self.tau_inv2, 'zero')
        return self.tau * U, self.r_tau_prime * U + V * self.tau_inv

    def source(self, own, other):
        terms = []
        if other is not None:
            terms.append(self.f2 * other)
        if own is not None:
            terms.append(-(self.potential * own))
        if not terms:
            return None
        total = terms[0]
        for term in terms[1:]:
            total = total + term
        return total

    def apply(self, a, b):
        result = []
        for component, (own, other) in enumerate(((a, b), (b, a))):
            lead, lead_flux = self.lead(component)
            h = self.source(own, other)
            if h is None:
                result.append((lead, lead_flux))
                continue
            y, flux = self.kernel(component, h)
            result.append((y + lead, flux + lead_flux))
        return result


def _on_grid(value, size):
    if value is None:
        return np.zeros(size)
    return value.on_grid()


def _branch_plan(params, which):
    if which not in ZERO_TAGS:
        raise ValueError(f'Unknown zero side branch {which}')
    if which in ('Zero1', 'Zero3'):
        return BRANCH_PLANS[(which, None)], None
    domain = params.singular_branch_domain
    if domain is None:
        raise ValueError(f'{which} needs parameters in D1 or D2, got {params.domain_flags}')
    return BRANCH_PLANS[(which, domain)], domain


def _lead_power(params, which):
    return {'Zero1': params.gamma2, 'Zero2': -params.gamma2,
            'Zero3': params.gamma1, 'Zero4': -params.gamma1}[which]


def expected_zero_determinant(params):
    """W12 W34 of the lead terms: 2 gamma2 times 2 gamma1, or times 1 for the tau branch."""
    if params.singular_branch_domain == 'D2':
        return 2 * params.gamma2
    return 4 * params.gamma1 * params.gamma2


def initial_radius(params):
    return min(0.5, 0.1 * (2 * params.d + 2) / (params.gamma2 + 1))


def _iterate(operator, tol):
    """Picard iteration; returns (a, ra', b, rb', iterations, ratio) or None when not contracting."""
    size = len(operator.grid)
    (a, ra), (b, rb) = operator.lead(0), operator.lead(1)
    lead = a if a is not None else b
    lead_size = np.abs(lead.on_grid())
    delta_old = None
    ratio = float('nan')
    for iteration in range(1, MAX_ITERATIONS + 1):
        (a_new, ra_new), (b_new, rb_new) = operator.apply(a, b)
        change = np.maximum(np.abs(_on_grid(a_new, size) - _on_grid(a, size)),
                            np.abs(_on_grid(b_new, size) - _on_grid(b, size)))
        delta = float(np.max(change / lead_size))
        a, ra, b, rb = a_new, ra_new, b_new, rb_new
        if not np.isfinite(delta):
            return None
        if delta_old is not None and delta_old > 0:
            ratio = delta / delta_old
        log.debug(f'Picard iteration {iteration}: change {delta:.3e}, ratio {ratio:.3g}')
        if delta < max(tol, ROUNDOFF):
            return a, ra, b, rb, iteration, ratio
        if iteration > 2 and ratio > STALL_RATIO:
            return None
        delta_old = delta
    return None


def picard_branch(params, profile, which, R=None, tol=1e-12, ratio=1.05, floor=1e-6, ode_tol=1e-10):
    """
    One canonical solution near 0 by Picard iteration on (0, R].

    R is halved while the iteration does not contract; below 1e-3 a
    NonContractionError is raised.
    """
    if not params.in_D:
        raise ValueError(f'Parameters {params.info()} outside the domain D')
    plan, domain = _branch_plan(params, which)
    R = initial_radius(params) if R is None else float(R)
    while True:
        grid = LogGrid(R, ratio=ratio, floor=floor)
        operator = _Operator(params, profile, grid, plan)
        result = _iterate(operator, tol)
        if result is not None:
            break
        log.info(f'{which}: Picard iteration does not contract on (0, {R:.4g}], halve R')
        R /= 2
        if R < R_FLOOR:
            raise NonContractionError(f'{which} for {params.info()}: no contraction down to R={R_FLOOR}')
    a, ra, b, rb, iterations, contraction = result
    size = len(grid)
    r = grid.r
    branch = SolutionBranch(params=params, behavior=which, grid=r.copy(),
                            a=_on_grid(a, size), a_prime=_on_grid(ra, size) / r,
                            b=_on_grid(b, size), b_prime=_on_grid(rb, size) / r,
                            lead_coeff=1.0, profile=profile, tol=ode_tol,
                            lead_power=_lead_power(params, which), iterations=iterations,
                            contraction=contraction, domain=domain)
    log.debug(f'{which}: converged in {iterations} iterations on (0, {R:.4g}]')
    return branch


def zero_basis(params, profile, R=None, tol=1e-12, r_out=None, ode_tol=1e-10, ratio=1.05, floor=1e-6):
    """
    Zero1..Zero4 on a common (0, R], optionally continued outward to r_out.

    Beyond R the four branches are continued together as one FrameFlow.
    Raises DegenerateBasisError when the normalized determinant of the four
    states at R is below 1e-10.
    """
    grid = dict(ratio=ratio, floor=floor)
    branches = [picard_branch(params, profile, which, R=R, tol=tol, ode_tol=ode_tol, **grid) for which in ZERO_TAGS]
    R_common = min(branch.R for branch in branches)
    branches = [branch if branch.R == R_common else picard_branch(params, profile, branch.behavior, R=R_common, tol=tol,
                                                                      ode_tol=ode_tol, **grid)
                for branch in branches]
    states = np.column_stack([branch.vector_at(R_common) for branch in branches])
    det = pfaffian_determinant(states)
    normalized = abs(det) / np.prod(np.linalg.norm(states, axis=0))
    log.debug(f'Zero basis at R={R_common:.4g}: determinant {det:.6e}, normalized {normalized:.3e}')
    if normalized < DEGENERATE_WRONSKIAN:
        raise DegenerateBasisError(f'Zero basis for {params.info()} is degenerate, '
                                   f'normalized determinant {normalized:.3e}')
    frame = FrameFlow(states, R_common, params, profile, tol=ode_tol)
    for column, branch in enumerate(branches):
        branch.frame = frame
        branch.column = column
    if r_out is not None and r_out > R_common:
        frame.extend(r_out)
    log.info(f'Zero basis for d={params.d}, gamma1={params.gamma1:.6g}, gamma2={params.gamma2:.6g} '
             f'built on (0, {R_common:.4g}]')
    return branches


def zero_frame_determinant(branches, r):
    """
    Determinant of Zero1..Zero4 at r.

    On (0, R] it comes from the pairings of the Picard samples, beyond R from
    the shared frame continuation when the branches carry one.
    """
    R = branches[0].R
    frame = branches[0].frame
    columns = [branch.column for branch in branches]
    shared = frame is not None and frame.k == 4 and all(branch.frame is frame for branch in branches)
    if r <= R or not shared or sorted(columns) != list(range(4)):
        states = np.column_stack([branch.vector_at(r) for branch in branches])
        return pfaffian_determinant(states)
    # sign of the column permutation
    sign = round(np.linalg.det(np.eye(4)[:, columns]))
    return sign * frame.determinant(r)
