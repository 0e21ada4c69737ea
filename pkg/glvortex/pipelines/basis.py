import logging

import numpy as np
import pandas as pd

from ..basis import (zero_basis, infinity_basis, dump_branch, branch_frame, branch_residual, decoupled_residual,
                     frame_determinant, zero_frame_determinant, expected_zero_determinant, expected_far_determinant)
from ..basis.farfield import FIT_EXCLUDE
from ..utilities import write_table, write_json
from .utilities import prepare_run, get_profile, mode_params, finish_run

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

DETERMINANT_POINTS = 5
DECOUPLING_FLOOR = 1e-3


def branch_file_name(tag):
    return f"basis_{tag.replace('+', 'plus').replace('-', 'minus')}.csv"


def _spread(values):
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values / values[0] - 1)))


def zero_determinants(zero, r_out=None):
    """Frame determinant of Zero1..Zero4 on (0, R], and beyond R up to r_out when given."""
    R = zero[0].R
    radii = list(np.geomspace(R * 1e-2, R, DETERMINANT_POINTS))
    if r_out is not None and r_out > R:
        radii += list(np.linspace(R, r_out, DETERMINANT_POINTS)[1:])
    return np.array(radii), np.array([zero_frame_determinant(zero, r) for r in radii])


def far_determinants(far):
    R0, r_max = far[0].R0, far[0].r_max
    radii = np.linspace(R0, r_max - FIT_EXCLUDE, DETERMINANT_POINTS)
    return radii, np.array([frame_determinant(*branch_frame(far, r)) for r in radii])


def _decoupling(branches, far):
    """Decoupled scalar residuals on the branch grids, away from the innermost nodes."""
    result = {}
    for branch in branches:
        if far:
            radii = branch.grid
        else:
            radii = branch.grid[branch.grid >= DECOUPLING_FLOOR * branch.R]
        result[branch.behavior] = max(decoupled_residual(branch, radii))
    return result


def basis_diagnostics(params, zero, far, r_out=None):
    """Determinants, their spread in r, branch residuals and, for gamma1 = gamma2, the decoupled residuals."""
    zero_radii, zero_det = zero_determinants(zero, r_out)
    far_radii, far_det = far_determinants(far)
    expected_zero = expected_zero_determinant(params)
    expected_far = expected_far_determinant(params)
    diagnostics = {
        'params': params.info(),
        'zero': {'radii': zero_radii, 'determinant': zero_det, 'expected': expected_zero,
                 'spread': _spread(zero_det), 'relative_error': float(np.max(np.abs(zero_det / expected_zero - 1))),
                 'R': zero[0].R, 'domain': zero[1].domain,
                 'residual': {branch.behavior: branch_residual(branch) for branch in zero}},
        'far': {'radii': far_radii, 'determinant': far_det, 'expected': expected_far,
                'spread': _spread(far_det), 'relative_error': float(np.max(np.abs(far_det / expected_far - 1))),
                'R0': far[0].R0, 'r_max': far[0].r_max, 'pairing_defect': far[0].pairing_defect,
                'residual': {branch.behavior: branch_residual(branch) for branch in far}},
    }
    if params.xi_sq == 0:
        diagnostics['decoupled_residual'] = {**_decoupling(zero, far=False), **_decoupling(far, far=True)}
    return diagnostics


def basis_pipeline(d, n=None, gamma1=None, gamma2=None, mu=1.0, zero_R=None, R0=None, r_out=None, config=None,
                   output_dir=None, picard_tol=None, ode_tol=None, far_r_max=None, far_step=None, cache_dir=None):
    """
    Dump the zero side and far side bases of one parameter point.

    Written files: basis_<tag>.csv for the eight branches, basis_summary.json, basis_determinants.csv,
    manifest.json.
    """
    config, output_dir = prepare_run(config, output_dir=output_dir, picard_tol=picard_tol, ode_tol=ode_tol,
                                     far_r_max=far_r_max, far_step=far_step, cache_dir=cache_dir)
    params = mode_params(d, n, gamma1, gamma2, mu)
    profile = get_profile(params.d, config)

    zero = zero_basis(params, profile, R=zero_R, tol=config.picard_tol, r_out=r_out, ode_tol=config.ode_tol,
                      ratio=config.zero_grid_ratio, floor=config.zero_grid_floor)
    far = infinity_basis(params, profile, R0=R0, r_max=config.far_r_max, tol=config.picard_tol,
                         step=config.far_step, ode_tol=config.ode_tol)
    for branch in zero:
        dump_branch(branch, output_dir / branch_file_name(branch.behavior), r_out=r_out)
    for branch in far:
        dump_branch(branch, output_dir / branch_file_name(branch.behavior))

    diagnostics = basis_diagnostics(params, zero, far, r_out)
    determinants = pd.concat([
        pd.DataFrame({'side': 'zero', 'r': diagnostics['zero']['radii'],
                      'determinant': diagnostics['zero']['determinant']}),
        pd.DataFrame({'side': 'far', 'r': diagnostics['far']['radii'],
                      'determinant': diagnostics['far']['determinant']}),
    ], ignore_index=True)
    write_table(determinants, output_dir / 'basis_determinants.csv')
    write_json(diagnostics, output_dir / 'basis_summary.json')
    log.info(f"Determinant spread: zero {diagnostics['zero']['spread']:.2e}, far {diagnostics['far']['spread']:.2e}")
    finish_run(output_dir, 'basis', config, params=params.info())
    return diagnostics
