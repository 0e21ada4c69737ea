"""
Bounded solution test without the Picard zero basis.

The solutions regular at 0 are seeded from their leading behavior

    omega_1 ~ (0, r^gamma2),   omega_3 ~ (r^gamma1, 0)

at a small radius and continued together as a FrameFlow. A bounded solution
exists exactly when their span meets span(InfDecay, InfPoly-), that is when

    det[omega_1, omega_3, InfDecay, InfPoly-] = C3 det[omega_1, InfPoly+, InfDecay, InfPoly-]

vanishes at the match radius.
"""

import logging

import numpy as np

from ..basis import FrameFlow, infinity_basis
from ..basis.farfield import FIT_EXCLUDE
from .connect import default_match_radius

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

SEED_RADIUS = 1e-3


def regular_seed(params, r):
    """States of omega_1 and omega_3 at small r, to second order in r, as columns."""
    mu = params.mu

    def leading(gamma):
        power = r ** gamma
        value = power * (1 - mu * r * r / (4 * (gamma + 1)))
        flux = power * (gamma - mu * (gamma + 2) * r * r / (4 * (gamma + 1)))
        return value, flux

    b, rb = leading(params.gamma2)
    a, ra = leading(params.gamma1)
    return np.array([[0.0, a], [0.0, ra], [b, 0.0], [rb, 0.0]])


def bounded_determinant(params, profile, r_match=None, r_start=SEED_RADIUS, tol=1e-10, picard_tol=1e-10,
                        far_r_max=40.0, far_step=0.02, far=None):
    """
    Normalized det[omega_1, omega_3, InfDecay, InfPoly-] at r_match.

    The regular pair enters through an orthonormal basis of its span, oriented
    like (omega_1, omega_3), and the far columns at unit norm, so the value lies
    in [-1, 1] and changes sign with C3.
    """
    if r_start <= 0:
        raise ValueError(f'r_start must be > 0, got {r_start}')
    if far is None:
        far = infinity_basis(params, profile, r_max=far_r_max, tol=picard_tol, step=far_step, ode_tol=tol)
    _, decay, minus, _ = far
    if r_match is None:
        r_match = min(max(default_match_radius(params), decay.R0), decay.r_max - FIT_EXCLUDE)
    if r_match <= r_start:
        raise ValueError(f'r_match={r_match} must exceed r_start={r_start}')

    flow = FrameFlow(regular_seed(params, r_start), r_start, params, profile, tol=tol)
    y, t = flow.factors(r_match)
    orientation = np.sign(np.prod(np.diag(t)))
    area = np.sqrt(np.linalg.det(y.T @ y))
    columns = [branch.state(r_match)[0] for branch in (decay, minus)]
    columns = [vector / np.linalg.norm(vector) for vector in columns]
    value = orientation * np.linalg.det(np.column_stack([y, *columns])) / area
    log.debug(f'd={params.d}, n={params.n:.8g}: bounded determinant {value:.6e} at r={r_match:.4g}')
    return float(value)
