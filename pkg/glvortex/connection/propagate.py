import numpy as np

from ..basis.system import integrate_system, frame_determinant


def propagate(x, r0, r1, params, profile, tol=1e-10):
    """
    State X = (a, r a', b, r b') at r1 of the solution with X(r0) = x.

    Works in either direction. Raises IntegrationError on step failure or
    magnitude overflow; overflow means the compensated far field should be
    used instead.
    """
    if r0 <= 0 or r1 <= 0:
        raise ValueError(f'Radii must be > 0, got r0={r0}, r1={r1}')
    x = np.asarray(x, dtype=float)
    if r0 == r1:
        return x.copy()
    sol, scale = integrate_system(x, r0, r1, params, profile, tol=tol)
    return sol.y[:, -1] * scale


def propagate_frame(states, r0, r1, params, profile, tol=1e-10):
    """Propagate every column of a 4 x 4 frame; returns the new frame and its determinant."""
    states = np.asarray(states, dtype=float)
    moved = np.column_stack([propagate(states[:, j], r0, r1, params, profile, tol)
                             for j in range(states.shape[1])])
    return moved, frame_determinant(moved)
