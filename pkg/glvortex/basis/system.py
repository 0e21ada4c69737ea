"""
The linear system as a first order system in X = (a, r a', b, r b').

    a'' + a'/r - gamma1^2 a / r^2 = f^2 b - (mu - (1 + mu) f^2) a
    b'' + b'/r - gamma2^2 b / r^2 = f^2 a - (mu - (1 + mu) f^2) b

The matrix is trace free, so the determinant of any four solutions and the
bilinear form W(X, Y) = X^T OMEGA Y are constant in r.
"""

import logging

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import IntegrationError

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

OMEGA = np.array([[0.0, -1.0, 0.0, 0.0],
                  [1.0, 0.0, 0.0, 0.0],
                  [0.0, 0.0, 0.0, -1.0],
                  [0.0, 0.0, 1.0, 0.0]])

OVERFLOW_NORM = 1e250


def system_matrix(params, profile, r):
    """M(r) with X' = M X, for scalar r."""
    f2 = profile(r) ** 2
    potential = params.mu - (1 + params.mu) * f2
    return np.array([
        [0.0, 1 / r, 0.0, 0.0],
        [params.gamma1 ** 2 / r - r * potential, 0.0, r * f2, 0.0],
        [0.0, 0.0, 0.0, 1 / r],
        [r * f2, 0.0, params.gamma2 ** 2 / r - r * potential, 0.0],
    ])


def system_rhs(params, profile):
    g1 = params.gamma1 ** 2
    g2 = params.gamma2 ** 2
    mu = params.mu

    def rhs(r, x):
        f2 = profile(r) ** 2
        potential = mu - (1 + mu) * f2
        return np.array([
            x[1] / r,
            (g1 / r - r * potential) * x[0] + r * f2 * x[2],
            x[3] / r,
            r * f2 * x[0] + (g2 / r - r * potential) * x[2],
        ])

    return rhs


def integrate_system(x0, r0, r1, params, profile, tol=1e-10, dense=False, stop_norm=None):
    """
    Integrate X' = M X from r0 to r1 (either direction).

    The initial state is normalized before integration and scaled back
    afterwards, so tolerances are relative to the solution size. Returns the
    solve_ivp solution object together with the scale.
    """
    x0 = np.asarray(x0, dtype=float)
    scale = float(np.linalg.norm(x0))
    if scale == 0 or not np.isfinite(scale):
        raise ValueError(f'Invalid initial state {x0}')

    events = []
    if stop_norm is not None:
        def too_large(r, x):
            return np.linalg.norm(x) - stop_norm / scale

        too_large.terminal = True
        events.append(too_large)

    sol = solve_ivp(system_rhs(params, profile), (r0, r1), x0 / scale,
                    method='DOP853', rtol=tol / 10, atol=tol * 1e-4,
                    dense_output=dense, events=events or None)
    if sol.status == -1:
        raise IntegrationError(f'Propagation failed: {sol.message}', radius=sol.t[-1])
    if not np.all(np.isfinite(sol.y[:, -1])) or np.linalg.norm(sol.y[:, -1]) > OVERFLOW_NORM:
        raise IntegrationError('State magnitude overflow during propagation, use the compensated far field',
                               radius=sol.t[-1])
    return sol, scale


def wronskian(x, y):
    """W(X, Y) = r (a_X' a_Y - a_Y' a_X + b_X' b_Y - b_Y' b_X) for state vectors."""
    return float(np.asarray(x) @ OMEGA @ np.asarray(y))


def frame_determinant(states, log_scales=None):
    """
    Determinant of four state vectors given as columns.

    With log_scales, column j stands for exp(log_scales[j]) * states[:, j].
    """
    states = np.asarray(states, dtype=float)
    det = np.linalg.det(states)
    if log_scales is None:
        return float(det)
    return float(det * np.exp(np.sum(log_scales)))


def pfaffian_determinant(states):
    """
    Determinant through the pairings, det = W12 W34 - W13 W24 + W14 W23.

    Less sensitive than a direct determinant when the columns have very
    different sizes.
    """
    w = states.T @ OMEGA @ states
    return float(w[0, 1] * w[2, 3] - w[0, 2] * w[1, 3] + w[0, 3] * w[1, 2])


FRAME_SEGMENT = 0.5


class FrameFlow:
    """
    Joint continuation of k solutions with re-orthonormalization.

    The frame is F(r) = Y(r) T: on each segment of length FRAME_SEGMENT the
    columns of Y start orthonormal and are integrated together, and at the
    segment end a QR factorization Y = Q U restarts Y at Q while T becomes U T.
    T stays upper triangular, so det F(r) = det Y(r) prod(diag T).
    """

    def __init__(self, states, r0, params, profile, tol=1e-10, segment=FRAME_SEGMENT):
        states = np.asarray(states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if states.shape[0] != 4 or not np.all(np.isfinite(states)):
            raise ValueError(f'Invalid frame of shape {states.shape}')
        if segment <= 0:
            raise ValueError(f'segment must be > 0, got {segment}')
        self.params = params
        self.profile = profile
        self.tol = tol
        self.segment = float(segment)
        self.r0 = float(r0)
        self.k = states.shape[1]
        q, t = np.linalg.qr(states)
        if np.any(np.abs(np.diag(t)) == 0):
            raise ValueError('Frame columns are linearly dependent')
        self.direction = 0
        # (r_start, r_end, dense solution of Y, T)
        self._segments = []
        self._end = (self.r0, q, t)
        self._rhs = system_rhs(params, profile)

    @property
    def r_end(self):
        return self._end[0]

    def _frame_rhs(self, r, y):
        return self._rhs(r, y.reshape(4, self.k)).ravel()

    def extend(self, r):
        """Continue the frame to r, in the direction of its first extension."""
        r = float(r)
        if r <= 0:
            raise ValueError(f'r must be > 0, got {r}')
        step = np.sign(r - self.r0)
        if step == 0:
            return self
        if self.direction == 0:
            self.direction = step
        elif step != self.direction:
            raise ValueError(f'Frame started at r={self.r0} runs the other way, cannot reach r={r}')
        r_end, q, t = self._end
        while (r - r_end) * self.direction > 0:
            r_next = r_end + self.direction * self.segment
            if (r_next - r) * self.direction > 0:
                r_next = r
            sol = solve_ivp(self._frame_rhs, (r_end, r_next), q.ravel(), method='DOP853',
                            rtol=self.tol / 10, atol=self.tol * 1e-4, dense_output=True)
            if sol.status == -1:
                raise IntegrationError(f'Frame propagation failed: {sol.message}', radius=sol.t[-1])
            y = sol.y[:, -1].reshape(4, self.k)
            if not np.all(np.isfinite(y)):
                raise IntegrationError('Frame propagation produced non finite values', radius=r_next)
            self._segments.append((r_end, r_next, sol.sol, t))
            q, u = np.linalg.qr(y)
            t = u @ t
            if not np.all(np.isfinite(t)) or np.max(np.abs(t)) > OVERFLOW_NORM:
                raise IntegrationError('Frame magnitude overflow during propagation', radius=r_next)
            r_end = r_next
            self._end = (r_end, q, t)
        log.debug(f'Frame of {self.k} solutions continued to r={r_end:.4g} in {len(self._segments)} segments')
        return self

    def factors(self, r):
        """(Y(r), T) of the segment holding r, with F(r) = Y(r) T."""
        r = float(r)
        if r == self.r0 and not self._segments:
            _, q, t = self._end
            return q, t
        self.extend(r)
        for r_start, r_stop, flow, t in self._segments:
            lo, hi = min(r_start, r_stop), max(r_start, r_stop)
            if lo <= r <= hi:
                return flow(r).reshape(4, self.k), t
        _, q, t = self._end
        return q, t

    def states(self, r):
        y, t = self.factors(r)
        return y @ t

    def column(self, r, j):
        y, t = self.factors(r)
        return y @ t[:, j]

    def determinant(self, r):
        """det F(r) for a frame of four solutions, from det Y(r) and the triangular factors."""
        if self.k != 4:
            raise ValueError(f'Determinant needs four solutions, the frame holds {self.k}')
        y, t = self.factors(r)
        return float(np.linalg.det(y) * np.prod(np.diag(t)))
