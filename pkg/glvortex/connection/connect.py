"""
Connection coefficients between the zero side and the far side bases.

omega_3 (Zero3) is written at a match radius as

    omega_3 = C1 omega_1 + C2 InfDecay + C3 InfPoly+ + C4 InfPoly-

so C3 multiplies the only remaining unbounded branch and C3 = 0 exactly when
a bounded solution exists.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..basis import picard_branch, infinity_basis, zero_basis, wronskian
from ..basis.farfield import FIT_EXCLUDE
from ..errors import IllConditionedError, IntegrationError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

MAX_CONDITION = 1e8
ZERO_THRESHOLD = 1e-3
SEARCH_FACTORS = (1.0, 0.5, 0.75, 1.25, 1.5)
MIXED_COLUMNS = ('omega1', 'InfDecay', 'InfPoly+', 'InfPoly-')
FAR_COLUMNS = ('InfGrow', 'InfDecay', 'InfPoly+', 'InfPoly-')


@dataclass
class ConnectionCoeffs:
    """
    Coordinates of a zero side branch at the match radius.

    C is taken against `columns`; C_scaled against the same columns scaled to
    unit norm at the match radius, with the branch state scaled to unit norm.
    far_coords are the coordinates in the pure far frame.
    """
    params: object
    branch: str
    C: np.ndarray
    C_scaled: np.ndarray
    far_coords: np.ndarray
    C3_normalized: float
    match_radius: float
    condition: float
    residual: float
    R0: float
    pairing_defect: float
    columns: tuple = MIXED_COLUMNS
    candidates: dict = field(default_factory=dict)

    @property
    def bounded(self):
        """A bounded solution at these parameters, up to the zero threshold."""
        return abs(self.C3_normalized) < ZERO_THRESHOLD

    def row(self):
        row = {'d': self.params.d, 'n': self.params.n,
               'C1': self.C[0], 'C2': self.C[1], 'C3': self.C[2], 'C4': self.C[3],
               'C3_normalized': self.C3_normalized, 'condition': self.condition,
               'residual': self.residual, 'match_radius': self.match_radius}
        return row


def default_match_radius(params):
    return max(8.0, 2 * params.n + 2 * params.d)


def _unit_columns(matrix):
    norms = np.linalg.norm(matrix, axis=0)
    return matrix / norms, norms


def _solve(matrix, rhs):
    scaled, norms = _unit_columns(matrix)
    rhs_norm = np.linalg.norm(rhs)
    coords = np.linalg.solve(scaled, rhs / rhs_norm)
    defect = np.linalg.norm(scaled @ coords - rhs / rhs_norm)
    return coords, norms, rhs_norm, np.linalg.cond(scaled), defect


def _candidate_radii(params, R_mid, R0, r_max, search):
    R_mid = default_match_radius(params) if R_mid is None else float(R_mid)
    low, high = R0, r_max - FIT_EXCLUDE
    factors = SEARCH_FACTORS if search else (1.0,)
    radii = []
    for factor in factors:
        r = min(max(R_mid * factor, low), high)
        if all(abs(r - other) > 1e-9 for other in radii):
            radii.append(r)
    return radii


def connect(params, profile, R_mid=None, tol=1e-10, which='Zero3', picard_tol=1e-10, far_r_max=40.0,
            far_step=0.02, search=True, far=None, zero=None, ratio=1.05, floor=1e-6):
    """
    Connection coefficients of omega_3 (which='Zero3') or omega_1 (which='Zero1').

    omega_3 is expanded against (omega_1, InfDecay, InfPoly+, InfPoly-), omega_1
    against the pure far frame. The match radius is searched in R_mid * [0.5, 1.5]
    for the best conditioned column scaled system; IllConditionedError when even the
    best one exceeds 1e8.
    """
    if which not in ('Zero1', 'Zero3'):
        raise ValueError(f'connect expands Zero1 or Zero3, got {which}')
    if far is None:
        far = infinity_basis(params, profile, r_max=far_r_max, tol=picard_tol, step=far_step, ode_tol=tol)
    grow, decay, minus, plus = far
    if zero is None:
        zero = {tag: picard_branch(params, profile, tag, tol=picard_tol, ode_tol=tol, ratio=ratio, floor=floor)
                for tag in ('Zero1', 'Zero3')}
    omega1, target = zero['Zero1'], zero[which]
    R0, r_max = grow.R0, grow.r_max

    best = None
    candidates = {}
    for r in _candidate_radii(params, R_mid, R0, r_max, search):
        far_frame = np.column_stack([branch.vector_at(r) for branch in (grow, decay, plus, minus)])
        try:
            rhs = target.vector_at(r)
            first = omega1.vector_at(r) if which == 'Zero3' else far_frame[:, 0]
        except IntegrationError as e:
            log.debug(f'Match radius {r:.4g} skipped: {e}')
            continue
        matrix = far_frame.copy()
        matrix[:, 0] = first
        condition = np.linalg.cond(_unit_columns(matrix)[0])
        candidates[float(r)] = float(condition)
        log.debug(f'Match radius {r:.4g}: condition {condition:.3e}')
        if best is None or condition < best[1]:
            best = (r, condition, matrix, far_frame, rhs)
    if best is None:
        raise IntegrationError(f'No usable match radius for {params.info()}')
    r, condition, matrix, far_frame, rhs = best
    if condition > MAX_CONDITION:
        raise IllConditionedError(f'Connection system for {params.info()} has condition {condition:.3e} '
                                  f'at R_mid={r:.4g}, move the match radius', condition=condition)

    coords, norms, rhs_norm, _, defect = _solve(matrix, rhs)
    C = coords * rhs_norm / norms
    far_scaled, far_norms, _, _, far_defect = _solve(far_frame, rhs)
    far_coords = far_scaled * rhs_norm / far_norms

    unit = matrix / norms
    remainder = unit[:, 1:] @ coords[1:]
    size = np.linalg.norm(remainder)
    C3_normalized = float(coords[2] / size) if size > 0 else float('nan')

    result = ConnectionCoeffs(params=params, branch=which, C=C, C_scaled=coords, far_coords=far_coords,
                              C3_normalized=C3_normalized, match_radius=float(r), condition=float(condition),
                              residual=float(max(defect, far_defect)), R0=float(R0),
                              pairing_defect=float(grow.pairing_defect),
                              columns=MIXED_COLUMNS if which == 'Zero3' else FAR_COLUMNS,
                              candidates=candidates)
    log.debug(f'd={params.d}, n={params.n:.8g}: C={C}, C3 normalized {C3_normalized:.6e}')
    return result


def lagrange_check(branch_a, branch_b, radii):
    """W(r) = r (a' u - u' a + b' v - v' b) at each radius; constant for two solutions."""
    values = []
    for r in radii:
        x, lx = branch_a.state(r)
        y, ly = branch_b.state(r)
        values.append(wronskian(x, y) * np.exp(lx + ly))
    return np.array(values)


@dataclass
class AmplitudeRelation:
    """W(omega_1, InfDecay) against 4 sqrt(2) C and the near zero amplitude D of InfDecay."""
    radii: np.ndarray
    W: np.ndarray
    C: float
    D: float
    D_expected: float
    relative_error: float
    W_spread: float


def amplitude_relation(params, profile, tol=1e-10, picard_tol=1e-10, far_r_max=40.0, far_step=0.02, radii=None,
                       ratio=1.05, floor=1e-6):
    """
    Check 2 gamma2 D = 4 sqrt(2) C.

    C is the InfGrow coordinate of omega_1 in the far frame, D the Zero2
    coordinate of InfDecay in the zero frame, found where InfDecay is continued inward.
    """
    zero = zero_basis(params, profile, tol=picard_tol, ode_tol=tol, ratio=ratio, floor=floor)
    far = infinity_basis(params, profile, r_max=far_r_max, tol=picard_tol, step=far_step, ode_tol=tol)
    omega1, decay = zero[0], far[1]
    coeffs = connect(params, profile, tol=tol, which='Zero1', far=far,
                     zero={'Zero1': omega1, 'Zero3': zero[2]})
    C = float(coeffs.far_coords[0])

    r_zero = min(1.0, decay.R0)
    zero_frame = np.column_stack([branch.vector_at(r_zero) for branch in zero])
    coords, norms, rhs_norm, condition, _ = _solve(zero_frame, decay.vector_at(r_zero))
    D = float(coords[1] * rhs_norm / norms[1])
    log.debug(f'Zero frame at r={r_zero:.4g}: condition {condition:.3e}')

    if radii is None:
        radii = np.linspace(r_zero, coeffs.match_radius, 6)
    W = lagrange_check(omega1, decay, radii)
    D_expected = 2 * np.sqrt(2) * C / params.gamma2
    relative_error = abs(D / D_expected - 1)
    spread = float(np.max(np.abs(W / W[0] - 1)))
    log.info(f'Amplitude relation: C={C:.10g}, D={D:.10g}, 2 sqrt(2) C / gamma2={D_expected:.10g}, '
             f'relative error {relative_error:.2e}')
    return AmplitudeRelation(radii=np.asarray(radii), W=W, C=C, D=D, D_expected=float(D_expected),
                             relative_error=float(relative_error), W_spread=spread)
