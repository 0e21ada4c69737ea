"""
Solution branches of the linear system.

Both branch types answer state(r) with a pair (vector, log_scale) so that the
state X = (a, r a', b, r b') at r is exp(log_scale) * vector. Zero side
branches have log_scale 0; far branches keep the exponential or power factor
out of the stored values.
"""

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.interpolate import CubicHermiteSpline, make_interp_spline

from ..errors import IntegrationError
from ..utilities import write_table
from .system import FrameFlow, integrate_system, system_matrix

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

ZERO_TAGS = ('Zero1', 'Zero2', 'Zero3', 'Zero4')
FAR_TAGS = ('InfGrow', 'InfDecay', 'InfPoly+', 'InfPoly-')
INWARD_STOP_NORM = 1e12
NODE_MATCH = 1e-13
RESIDUAL_EDGE = 4


@dataclass(eq=False)
class SolutionBranch:
    """
    One solution near r = 0, sampled on the Picard grid (0, R].

    Beyond R the branch is continued on demand as column `column` of a
    FrameFlow, shared with the other branches of a zero basis.
    """
    params: object
    behavior: str
    grid: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray
    b: np.ndarray
    b_prime: np.ndarray
    lead_coeff: float
    profile: object
    tol: float
    lead_power: float = 0.0
    iterations: int = 0
    contraction: float = float('nan')
    domain: str = None
    frame: object = field(default=None, repr=False)
    column: int = field(default=0, repr=False)

    @property
    def R(self):
        return float(self.grid[-1])

    def _sample(self, i):
        r = self.grid[i]
        return np.array([self.a[i], r * self.a_prime[i], self.b[i], r * self.b_prime[i]])

    def extend(self, r_out):
        """Continue the branch outward from R to r_out."""
        if r_out <= self.R:
            return self
        if self.frame is None:
            self.frame = FrameFlow(self._sample(-1), self.R, self.params, self.profile, tol=self.tol)
            self.column = 0
        if self.frame.r_end < r_out:
            self.frame.extend(r_out)
            log.debug(f'{self.behavior}: extended from R={self.R:.4g} to r={r_out:.4g}')
        return self

    def state(self, r):
        r = float(r)
        if r <= 0:
            raise ValueError(f'r must be > 0, got {r}')
        if r > self.R:
            self.extend(r)
            return self.frame.column(r, self.column), 0.0
        i = int(np.searchsorted(self.grid, r))
        i = min(i, self.grid.size - 1)
        if abs(self.grid[i] - r) <= NODE_MATCH * r:
            return self._sample(i), 0.0
        if i > 0 and abs(self.grid[i - 1] - r) <= NODE_MATCH * r:
            return self._sample(i - 1), 0.0
        # propagate inward from the next node above r
        sol, scale = integrate_system(self._sample(i), self.grid[i], r, self.params, self.profile, tol=self.tol)
        return sol.y[:, -1] * scale, 0.0

    def vector_at(self, r):
        vector, log_scale = self.state(r)
        return vector * np.exp(log_scale)

    def header(self):
        return {'params': self.params.info(), 'tag': self.behavior, 'lead_coeff': self.lead_coeff,
                'R': self.R, 'domain': self.domain, 'iterations': self.iterations}

    def to_frame(self, r_out=None, count=200):
        data = pd.DataFrame({'r': self.grid, 'a': self.a, 'a_prime': self.a_prime,
                             'b': self.b, 'b_prime': self.b_prime})
        if r_out is not None and r_out > self.R:
            outer = np.linspace(self.R, r_out, count + 1)[1:]
            states = np.array([self.vector_at(r) for r in outer])
            data = pd.concat([data, pd.DataFrame({'r': outer,
                                                  'a': states[:, 0], 'a_prime': states[:, 1] / outer,
                                                  'b': states[:, 2], 'b_prime': states[:, 3] / outer})],
                             ignore_index=True)
        return data


@dataclass(eq=False)
class FarBranch:
    """
    One solution near r = +inf, sampled on a uniform grid [R0, r_max].

    The stored (u, v) are compensated: the true components are exp(log_scale) * (u, v)
    where log_scale = sigma*sqrt(2)*r - log(r)/2 for the exponential branches and
    sigma*n*log(r) for the polynomial ones. The reduced unknowns (w, z) with
    u = w + z, v = w - z are kept with two derivatives for interpolation.
    """
    params: object
    behavior: str
    grid: np.ndarray
    w: np.ndarray
    w_prime: np.ndarray
    w_second: np.ndarray
    z: np.ndarray
    z_prime: np.ndarray
    z_second: np.ndarray
    lead_coeff: float
    profile: object
    tol: float
    R0: float
    iterations: int = 0
    contraction: float = float('nan')
    overflow: bool = False
    pairing_defect: float = float('nan')
    _inward: object = field(default=None, repr=False)
    _inward_scale: float = field(default=1.0, repr=False)
    _inward_end: float = field(default=None, repr=False)

    @property
    def r_max(self):
        return float(self.grid[-1])

    @property
    def exponential(self):
        return self.behavior in ('InfGrow', 'InfDecay')

    @property
    def sigma(self):
        return 1.0 if self.behavior in ('InfGrow', 'InfPoly+') else -1.0

    def log_scale(self, r):
        r = np.asarray(r, dtype=float)
        if self.exponential:
            return self.sigma * np.sqrt(2) * r - 0.5 * np.log(r)
        return self.sigma * self.params.n * np.log(r)

    def log_scale_prime(self, r):
        r = np.asarray(r, dtype=float)
        if self.exponential:
            return self.sigma * np.sqrt(2) - 0.5 / r
        return self.sigma * self.params.n / r

    @property
    def u(self):
        return self.w + self.z

    @property
    def v(self):
        return self.w - self.z

    @property
    def u_prime(self):
        return self.w_prime + self.z_prime + self.log_scale_prime(self.grid) * self.u

    @property
    def v_prime(self):
        return self.w_prime - self.z_prime + self.log_scale_prime(self.grid) * self.v

    def scaled(self, factor):
        """The same branch multiplied by a constant."""
        return FarBranch(params=self.params, behavior=self.behavior, grid=self.grid,
                         w=self.w * factor, w_prime=self.w_prime * factor, w_second=self.w_second * factor,
                         z=self.z * factor, z_prime=self.z_prime * factor, z_second=self.z_second * factor,
                         lead_coeff=self.lead_coeff * factor, profile=self.profile, tol=self.tol, R0=self.R0,
                         iterations=self.iterations, contraction=self.contraction, overflow=self.overflow,
                         pairing_defect=self.pairing_defect)

    def __post_init__(self):
        self._w_spline = CubicHermiteSpline(self.grid, self.w, self.w_prime)
        self._wp_spline = CubicHermiteSpline(self.grid, self.w_prime, self.w_second)
        self._z_spline = CubicHermiteSpline(self.grid, self.z, self.z_prime)
        self._zp_spline = CubicHermiteSpline(self.grid, self.z_prime, self.z_second)

    def _compensated(self, r):
        w, z = float(self._w_spline(r)), float(self._z_spline(r))
        wp, zp = float(self._wp_spline(r)), float(self._zp_spline(r))
        ls_prime = float(self.log_scale_prime(r))
        u, v = w + z, w - z
        return np.array([u, r * (wp + zp + ls_prime * u), v, r * (wp - zp + ls_prime * v)])

    def extend_inward(self, r_in):
        """Continue the branch below R0 by direct integration, stopping where it exceeds 1e12."""
        if r_in >= self.R0:
            return self
        if self._inward_end is not None and self._inward_end <= r_in:
            return self
        ls0 = float(self.log_scale(self.R0))
        sol, scale = integrate_system(self._compensated(self.R0), self.R0, r_in, self.params, self.profile,
                                      tol=self.tol, dense=True, stop_norm=INWARD_STOP_NORM * np.exp(-ls0))
        self._inward = sol.sol
        self._inward_scale = scale
        self._inward_end = float(sol.t[-1])
        if self._inward_end > r_in:
            log.debug(f'{self.behavior}: inward extension stopped at r={self._inward_end:.4g}')
        return self

    def state(self, r):
        r = float(r)
        if r > self.r_max * (1 + NODE_MATCH):
            raise ValueError(f'r={r} beyond the far field grid end {self.r_max}')
        if r >= self.R0:
            return self._compensated(min(r, self.r_max)), float(self.log_scale(r))
        self.extend_inward(r)
        if r < self._inward_end * (1 - NODE_MATCH):
            raise IntegrationError(f'{self.behavior} exceeds {INWARD_STOP_NORM:.0e} before reaching r={r}',
                                   radius=self._inward_end)
        return self._inward(r) * self._inward_scale, float(self.log_scale(self.R0))

    def vector_at(self, r):
        vector, log_scale = self.state(r)
        return vector * np.exp(log_scale)

    def header(self):
        return {'params': self.params.info(), 'tag': self.behavior, 'lead_coeff': self.lead_coeff,
                'R0': self.R0, 'iterations': self.iterations}

    def to_frame(self):
        return pd.DataFrame({'r': self.grid, 'a': self.u, 'a_prime': self.u_prime,
                             'b': self.v, 'b_prime': self.v_prime,
                             'log_scale': self.log_scale(self.grid)})


def dump_branch(branch, path, **kwargs):
    """Write a branch as CSV with a JSON header line."""
    return write_table(branch.to_frame(**kwargs), path, comments=[json.dumps(branch.header(), sort_keys=True)])


def _spline_derivative(x, y):
    return make_interp_spline(x, y, k=5)(x, 1)


def branch_residual(branch):
    """
    Relative residual of the branch's own samples.

    Zero side: X' = M X with derivatives taken in log r after dividing out the
    lead power. Far side: the reduced equations for (w, z), with w'' and z''
    taken from the stored w' and z' by spline differentiation.
    """
    if isinstance(branch, FarBranch):
        wpp = _spline_derivative(branch.grid, branch.w_prime)
        zpp = _spline_derivative(branch.grid, branch.z_prime)
        scale = np.abs(branch.w) + np.abs(branch.z) + np.abs(branch.w_prime) + np.abs(branch.z_prime)
        residual = (np.abs(wpp - branch.w_second) + np.abs(zpp - branch.z_second)) / scale
        return float(np.max(residual[RESIDUAL_EDGE:-RESIDUAL_EDGE]))

    r = branch.grid
    x = np.log(r)
    weight = r ** (-branch.lead_power)
    states = np.vstack([branch.a, r * branch.a_prime, branch.b, r * branch.b_prime]) * weight
    derivative = np.vstack([_spline_derivative(x, row) for row in states])
    expected = np.empty_like(states)
    for i, ri in enumerate(r):
        expected[:, i] = ri * system_matrix(branch.params, branch.profile, ri) @ states[:, i] \
            - branch.lead_power * states[:, i]
    scale = np.max(np.abs(states), axis=0)
    residual = np.max(np.abs(derivative - expected), axis=0) / scale
    return float(np.max(residual[RESIDUAL_EDGE:-RESIDUAL_EDGE]))


def decoupled_residual(branch, radii):
    """
    With gamma1 = gamma2, x = a + b and y = a - b solve separate scalar equations:

        (r x')' = (gamma^2 / r - r (mu - (2 + mu) f^2)) x
        (r y')' = (gamma^2 / r - r mu (1 - f^2)) y

    Returns the largest pointwise relative residual of each, with (r x')'
    obtained by spline differentiation along the given radii.
    """
    params = branch.params
    if params.xi_sq != 0:
        raise ValueError(f'Decoupling needs gamma1 == gamma2, got {params.gamma1}, {params.gamma2}')
    radii = np.asarray(radii, dtype=float)
    states = np.array([branch.vector_at(r) for r in radii])
    f2 = branch.profile(radii) ** 2
    mu = params.mu
    g2 = params.gamma_sq
    result = []
    for value, flux, potential in ((states[:, 0] + states[:, 2], states[:, 1] + states[:, 3], mu - (2 + mu) * f2),
                                   (states[:, 0] - states[:, 2], states[:, 1] - states[:, 3], mu * (1 - f2))):
        lhs = make_interp_spline(radii, flux, k=5)(radii, 1)
        rhs = (g2 / radii - radii * potential) * value
        scale = np.abs(lhs) + np.abs(rhs)
        # floor for sign changes of x or y
        scale = np.maximum(scale, 1e-8 * scale.max())
        if scale.max() == 0:
            result.append(0.0)
            continue
        rel = np.abs(lhs - rhs) / scale
        result.append(float(np.max(rel[RESIDUAL_EDGE:-RESIDUAL_EDGE])))
    return tuple(result)


def branch_frame(branches, r):
    """States of several branches at r as columns, with their log scales."""
    pairs = [branch.state(r) for branch in branches]
    return np.column_stack([vector for vector, _ in pairs]), np.array([scale for _, scale in pairs])
