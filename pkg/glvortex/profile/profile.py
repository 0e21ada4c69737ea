import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_bvp
from scipy.interpolate import CubicHermiteSpline, make_interp_spline

from ..errors import ProfileError
from .shooting import (find_critical_amplitude, series_value, series_radial_derivative, series_residual,
                       series_radius)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

SERIES_NODES = 40
BVP_MAX_NODES = 500000
RESIDUAL_EDGE = 3
# the residual spline starts this factor below r_series, so its left end stays off the refinement nodes
SEAM_OVERLAP = 4


def tail_value(d, r):
    """Two-term expansion of f at infinity."""
    r = np.asarray(r, dtype=float)
    d2 = d * d
    return 1 - d2 / (2 * r ** 2) - d2 * (d2 + 8) / (8 * r ** 4)


def tail_derivative(d, r):
    r = np.asarray(r, dtype=float)
    d2 = d * d
    return d2 / r ** 3 + d2 * (d2 + 8) / (2 * r ** 5)


@dataclass(frozen=True, eq=False)
class Profile:
    """
    Vortex profile f_d sampled on a grid, evaluable anywhere on (0, inf).

    Below r_series the small-r series with amplitude A_d is used, beyond the
    last grid node the tail expansion, and a cubic Hermite interpolant of
    (f, f') in between.
    """
    d: float
    A_d: float
    grid: np.ndarray
    f: np.ndarray
    f_prime: np.ndarray
    r_series: float
    r_tail: float
    tol: float
    tail_K: float
    A_bisect: float

    @functools.cached_property
    def _spline(self):
        return CubicHermiteSpline(self.grid, self.f, self.f_prime, extrapolate=False)

    @property
    def r_end(self):
        return float(self.grid[-1])

    def _evaluate(self, r, derivative):
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.empty_like(r)

        series = r <= self.r_series
        tail = r >= self.r_end
        middle = ~(series | tail)

        rs = r[series]
        with np.errstate(divide='ignore', invalid='ignore'):
            if derivative:
                values = np.where(rs > 0, series_radial_derivative(self.d, self.A_d, rs) / rs,
                                  self.d * self.A_d * rs ** (self.d - 1))
            else:
                values = series_value(self.d, self.A_d, rs)
        out[series] = values
        if derivative:
            out[tail] = tail_derivative(self.d, r[tail])
            out[middle] = self._spline(r[middle], 1)
        else:
            out[tail] = tail_value(self.d, r[tail])
            out[middle] = self._spline(r[middle])
        if scalar:
            return float(out[0])
        return out

    def __call__(self, r):
        return self._evaluate(r, derivative=False)

    def derivative(self, r):
        return self._evaluate(r, derivative=True)

    def scaled(self, r):
        """f(r) / r^d, smooth down to r = 0."""
        r = np.asarray(r, dtype=float)
        return self(r) / r ** self.d

    def info(self):
        return {
            'd': self.d,
            'A_d': self.A_d,
            'A_bisect': self.A_bisect,
            'r_series': self.r_series,
            'r_tail': self.r_tail,
            'tol': self.tol,
            'tail_K': self.tail_K,
        }


def _initial_guess(d, amplitude, r):
    """Monotone profile with the right behavior at both ends."""
    u = amplitude ** (2 / d) * r ** 2
    f0 = (u / (1 + u)) ** (d / 2)
    return np.vstack([f0, d * f0 / (1 + u)])


def _initial_mesh(r_left, r_right):
    inner = np.geomspace(r_left, 1.0, 60, endpoint=False)
    middle = np.arange(1.0, min(30.0, r_right), 0.1)
    outer = np.geomspace(max(30.0, middle[-1] + 0.1), r_right, 40) if r_right > 30 else np.array([r_right])
    mesh = np.unique(np.concatenate([inner, middle, outer]))
    return mesh[(mesh >= r_left) & (mesh <= r_right)]


def _refine_profile(d, amplitude, r_left, r_right, tol):
    """
    Boundary value refinement of the profile with the amplitude as unknown parameter.

    Left boundary data come from the series at r_left, right boundary value from
    the tail expansion at r_right.
    """
    d2 = d * d

    def fun(r, y, p):
        f, rfp = y
        return np.vstack([rfp / r, d2 * f / r - r * f * (1 - f * f)])

    def fun_jac(r, y, p):
        f = y[0]
        m = r.size
        df_dy = np.zeros((2, 2, m))
        df_dy[0, 1] = 1 / r
        df_dy[1, 0] = d2 / r - r + 3 * r * f * f
        df_dp = np.zeros((2, 1, m))
        return df_dy, df_dp

    tail_f = float(tail_value(d, r_right))

    def bc(ya, yb, p):
        return np.array([ya[0] - float(series_value(d, p[0], r_left)),
                         ya[1] - float(series_radial_derivative(d, p[0], r_left)),
                         yb[0] - tail_f])

    mesh = _initial_mesh(r_left, r_right)
    sol = solve_bvp(fun, bc, mesh, _initial_guess(d, amplitude, mesh), p=[amplitude],
                    fun_jac=fun_jac, tol=max(tol, 1e-12), max_nodes=BVP_MAX_NODES)
    if not sol.success:
        raise ProfileError(f'Boundary value refinement of f_{d} failed: {sol.message}')
    log.debug(f'd={d}: profile refined on [{r_left:.3g}, {r_right:.3g}] with {sol.x.size} nodes, '
              f'max rms residual {sol.rms_residuals.max():.2e}')
    return sol


def build_profile(d, r_max=30.0, tol=1e-10):
    """
    Compute f_d: bisection for A_d, then a boundary value refinement between the series and tail regions.

    The returned grid holds geometric series nodes below r_series followed by the
    refinement mesh up to max(r_max, r_tail).
    """
    if d <= 0:
        raise ValueError(f'd must be > 0, got {d}')
    A_bisect = find_critical_amplitude(d, tol=tol, r_max=r_max)
    log.info(f'd={d}: critical amplitude from bisection A_d={A_bisect:.12g}')

    r_series = series_radius(d, A_bisect, tol)
    r_tail = (d * d / tol) ** 0.25
    r_right = max(r_max, r_tail)

    sol = _refine_profile(d, A_bisect, r_series, r_right, tol)
    A_d = float(sol.p[0])
    log.info(f'd={d}: refined A_d={A_d:.15g} (bisection differs by {A_d - A_bisect:.2e})')

    series_grid = np.geomspace(r_series * 1e-4, r_series, SERIES_NODES, endpoint=False)
    grid = np.concatenate([series_grid, sol.x])
    f = np.concatenate([series_value(d, A_d, series_grid), sol.y[0]])
    f_prime = np.concatenate([series_radial_derivative(d, A_d, series_grid) / series_grid,
                              sol.y[1] / sol.x])

    far = grid >= r_tail / 2
    if far.any():
        tail_K = float(np.max(grid[far] ** 4 * np.abs(f[far] - (1 - d * d / (2 * grid[far] ** 2)))))
    else:
        tail_K = float('nan')

    profile = Profile(d=float(d), A_d=A_d, grid=grid, f=f, f_prime=f_prime,
                      r_series=float(r_series), r_tail=float(r_tail), tol=float(tol),
                      tail_K=tail_K, A_bisect=float(A_bisect))
    _check_monotone(profile)
    return profile


def _check_monotone(profile):
    if np.any(np.diff(profile.f) < -10 * profile.tol):
        log.warning(f'd={profile.d}: profile is not monotone within tolerance')
    if profile.f.min() < 0 or profile.f.max() >= 1:
        log.warning(f'd={profile.d}: profile leaves [0, 1)')
    return


def linear_coefficient(profile):
    """Coefficient of a in the operator a'' + a'/r + (1 - f^2 - d^2/r^2) a, at the grid nodes."""
    r = profile.grid
    f = profile.f
    return (1 - f * f) - profile.d ** 2 / r ** 2


def spline_residual(profile, a, a_prime, coefficient):
    """
    a'' + a'/r + coefficient * a at the grid nodes beyond r_series, NaN below.

    r a' samples are differentiated with a quintic interpolating spline over the
    nodes from r_series / SEAM_OVERLAP on, so the residual at a node only depends
    on a few neighbors and the 1/r^2 amplification near the origin stays out.
    """
    r = profile.grid
    if r.size < 2 * RESIDUAL_EDGE + 6:
        raise ValueError(f'Profile grid with {r.size} nodes is too coarse for the differentiation stencil')
    used = r >= profile.r_series / SEAM_OVERLAP
    spline = make_interp_spline(r[used], r[used] * a_prime[used], k=5)
    residual = np.full(r.shape, np.nan)
    outer = r >= profile.r_series
    residual[outer] = spline(r[outer], 1) / r[outer] + coefficient[outer] * a[outer]
    return residual


def pointwise_residual(profile):
    """
    Residual of the profile equation at the grid nodes.

    Series nodes use the closed form residual of the truncated series, the
    others the spline residual of the refined solution.
    """
    residual = spline_residual(profile, profile.f, profile.f_prime, linear_coefficient(profile))
    inner = profile.grid < profile.r_series
    residual[inner] = series_residual(profile.d, profile.A_d, profile.grid[inner])
    return residual


def profile_residual(profile):
    """Sup norm of the profile equation residual over interior grid nodes."""
    residual = pointwise_residual(profile)
    return float(np.max(np.abs(residual[RESIDUAL_EDGE:-RESIDUAL_EDGE])))


def profiles_cross_once(profile_small, profile_large, r_max=None):
    """
    Number of sign changes of f_large - f_small on a common grid.

    Differences below ten times the profile tolerance are ignored.
    """
    r_hi = min(profile_small.r_end, profile_large.r_end)
    if r_max is not None:
        r_hi = min(r_hi, r_max)
    r_lo = max(profile_small.grid[0], profile_large.grid[0])
    r = np.geomspace(r_lo, r_hi, 4000)
    diff = profile_large(r) - profile_small(r)
    # ignore differences below resolution
    scale = max(profile_small.tol, profile_large.tol) * 10
    signs = np.sign(diff[np.abs(diff) > scale])
    return int(np.count_nonzero(np.diff(signs) != 0))


def critical_amplitudes(ds, tol=1e-10, r_max=30.0):
    """A_d for each degree, by bisection."""
    return [find_critical_amplitude(d, tol=tol, r_max=r_max) for d in ds]
