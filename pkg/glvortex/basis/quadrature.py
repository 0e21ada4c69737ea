"""
Quadrature for the nested integrals of the fixed point problems.

Near r = 0 functions are carried as r^power * (smooth part) on a geometric
grid and integrated in x = log r, so powers r^(+-gamma) never need to be
resolved by the quadrature. Near infinity the grid is uniform and the
exponential kernels e^(+-beta t) are folded into a first order recursion.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.signal import lfilter

from ..errors import QuadratureError

GAUSS_POINTS = 8
_XI, _WEIGHTS = leggauss(GAUSS_POINTS)


def _recursion(ratio, increments):
    """y[0] = increments[0], y[k] = ratio * y[k-1] + increments[k]."""
    return lfilter([1.0], [1.0, -ratio], increments)


@dataclass(frozen=True, eq=False)
class Scaled:
    """A function sampled on a LogGrid as r^power * values."""
    grid: 'LogGrid'
    power: float
    values: np.ndarray

    # let ndarray * Scaled dispatch to __rmul__
    __array_ufunc__ = None

    def on_grid(self):
        return self.values * self.grid.r ** self.power

    def shift(self, power):
        """Multiply by r^power."""
        return Scaled(self.grid, self.power + power, self.values)

    def __mul__(self, other):
        if isinstance(other, Scaled):
            return Scaled(self.grid, self.power + other.power, self.values * other.values)
        return Scaled(self.grid, self.power, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return Scaled(self.grid, self.power, -self.values)

    def __add__(self, other):
        if other is None:
            return self
        power = min(self.power, other.power)
        r = self.grid.r
        values = self.values * r ** (self.power - power) + other.values * r ** (other.power - power)
        return Scaled(self.grid, power, values)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)


class LogGrid:
    """Geometric grid r_k = r_0 q^k ending at R."""

    def __init__(self, R, ratio=1.05, floor=1e-6):
        if R <= 0:
            raise ValueError(f'R must be > 0, got {R}')
        if ratio <= 1:
            raise ValueError(f'Grid ratio must be > 1, got {ratio}')
        self.R = float(R)
        count = int(np.ceil(np.log(1 / floor) / np.log(ratio)))
        self.x = np.log(R) - np.log(ratio) * np.arange(count, -1, -1)
        self.dx = float(np.log(ratio))
        self.r = np.exp(self.x)
        self.r[-1] = self.R

    def __len__(self):
        return self.r.size

    def scaled(self, power, values):
        values = np.broadcast_to(np.asarray(values, dtype=float), self.r.shape).copy()
        return Scaled(self, float(power), values)

    def power(self, power):
        """r^power itself."""
        return self.scaled(power, 1.0)

    def _panel_nodes(self, values):
        spline = CubicSpline(self.x, values)
        nodes = self.x[:-1, None] + 0.5 * self.dx * (_XI[None, :] + 1)
        return spline, nodes, spline(nodes)

    def integrate(self, integrand, lower='zero'):
        """
        Cumulative integral of s^power * h(s) ds as a Scaled function of t.

        lower='zero' integrates from 0 and requires power > -1; the panel [0, r_0]
        is integrated exactly for h linear in log s. lower='end' integrates from R.
        """
        lam = integrand.power + 1
        h = integrand.values
        spline, nodes, h_nodes = self._panel_nodes(h)
        half = 0.5 * self.dx
        if lower == 'zero':
            if lam <= 0:
                raise QuadratureError(f'Integrand s^{integrand.power:.6g} is not integrable at 0')
            panels = half * np.sum(_WEIGHTS * np.exp(lam * (nodes - self.x[1:, None])) * h_nodes, axis=1)
            slope = float(spline(self.x[0], 1))
            start = h[0] / lam - slope / lam ** 2
            values = _recursion(np.exp(-lam * self.dx), np.concatenate([[start], panels]))
            return Scaled(self, lam, values)
        elif lower == 'end':
            if lam < 0:
                panels = half * np.sum(_WEIGHTS * np.exp(lam * (nodes - self.x[:-1, None])) * h_nodes, axis=1)
                tail = _recursion(np.exp(lam * self.dx), np.concatenate([[0.0], panels[::-1]]))[::-1]
                return Scaled(self, lam, -tail)
            panels = half * np.sum(_WEIGHTS * np.exp(lam * nodes) * h_nodes, axis=1)
            tail = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]])
            return Scaled(self, 0.0, -tail)
        else:
            raise ValueError(f'Unknown lower limit {lower}')


class UniformGrid:
    """Uniform grid on [start, stop] for the far field integrals."""

    def __init__(self, start, stop, step):
        if stop <= start:
            raise ValueError(f'Empty far field interval [{start}, {stop}]')
        count = int(np.ceil((stop - start) / step))
        self.t = np.linspace(start, stop, count + 1)
        self.h = float(self.t[1] - self.t[0])

    def __len__(self):
        return self.t.size

    @property
    def start(self):
        return float(self.t[0])

    @property
    def stop(self):
        return float(self.t[-1])

    def _nodes(self, q):
        spline = CubicSpline(self.t, q)
        nodes = self.t[:-1, None] + 0.5 * self.h * (_XI[None, :] + 1)
        return nodes, spline(nodes)

    def exp_up(self, beta, q):
        """e^(-beta t) * integral from start to t of e^(beta s) q(s) ds."""
        nodes, q_nodes = self._nodes(q)
        panels = 0.5 * self.h * np.sum(_WEIGHTS * np.exp(-beta * (self.t[1:, None] - nodes)) * q_nodes, axis=1)
        return _recursion(np.exp(-beta * self.h), np.concatenate([[0.0], panels]))

    def exp_down(self, beta, q):
        """e^(beta t) * integral from t to stop of e^(-beta s) q(s) ds."""
        nodes, q_nodes = self._nodes(q)
        panels = 0.5 * self.h * np.sum(_WEIGHTS * np.exp(-beta * (nodes - self.t[:-1, None])) * q_nodes, axis=1)
        return _recursion(np.exp(-beta * self.h), np.concatenate([[0.0], panels[::-1]]))[::-1]

    def cumulative_up(self, q):
        """Integral from start to t."""
        nodes, q_nodes = self._nodes(q)
        panels = 0.5 * self.h * np.sum(_WEIGHTS * q_nodes, axis=1)
        return np.concatenate([[0.0], np.cumsum(panels)])

    def cumulative_down(self, q):
        """Integral from t to stop."""
        nodes, q_nodes = self._nodes(q)
        panels = 0.5 * self.h * np.sum(_WEIGHTS * q_nodes, axis=1)
        return np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]])
