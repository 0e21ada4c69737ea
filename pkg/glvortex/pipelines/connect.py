import logging

import pandas as pd

from ..basis import infinity_basis, zero_basis
from ..connection import connect, amplitude_relation
from ..utilities import write_table, write_json
from .utilities import prepare_run, get_profile, mode_params, connection_settings, finish_run

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


def coeffs_to_dict(coeffs):
    return {'branch': coeffs.branch, 'columns': list(coeffs.columns), 'C': coeffs.C, 'C_scaled': coeffs.C_scaled,
            'far_coords': coeffs.far_coords, 'C3_normalized': coeffs.C3_normalized, 'bounded': coeffs.bounded,
            'match_radius': coeffs.match_radius, 'condition': coeffs.condition, 'residual': coeffs.residual,
            'R0': coeffs.R0, 'pairing_defect': coeffs.pairing_defect,
            'candidates': {format(r, '.8g'): c for r, c in coeffs.candidates.items()}}


def connect_pipeline(d, n=None, gamma1=None, gamma2=None, mu=1.0, R_mid=None, amplitude=False, config=None,
                     output_dir=None, picard_tol=None, ode_tol=None, far_r_max=None, far_step=None, cache_dir=None):
    """
    C1..C4 of omega_3 and of omega_1 at one parameter point.

    Written files: connect.csv (one row per expanded branch), connect.json, manifest.json.
    With amplitude, the Lagrange identity and the relation 2 gamma2 D = 4 sqrt(2) C are added to connect.json.
    """
    config, output_dir = prepare_run(config, output_dir=output_dir, picard_tol=picard_tol, ode_tol=ode_tol,
                                     far_r_max=far_r_max, far_step=far_step, cache_dir=cache_dir)
    params = mode_params(d, n, gamma1, gamma2, mu)
    profile = get_profile(params.d, config)
    settings = connection_settings(config)

    far = infinity_basis(params, profile, r_max=config.far_r_max, tol=config.picard_tol, step=config.far_step,
                         ode_tol=config.ode_tol)
    zero = zero_basis(params, profile, tol=config.picard_tol, ode_tol=config.ode_tol,
                      ratio=config.zero_grid_ratio, floor=config.zero_grid_floor)
    zero = dict(zip(('Zero1', 'Zero2', 'Zero3', 'Zero4'), zero))

    results = {}
    rows = []
    for which in ('Zero3', 'Zero1'):
        coeffs = connect(params, profile, R_mid=R_mid, which=which, far=far, zero=zero, **settings)
        results[which] = coeffs_to_dict(coeffs)
        rows.append({'branch': which, **coeffs.row()})
        log.info(f'{which}: C={coeffs.C}, C3 normalized {coeffs.C3_normalized:.6e}')
    summary = {'params': params.info(), 'coefficients': results, 'bounded': results['Zero3']['bounded']}

    if amplitude:
        relation = amplitude_relation(params, profile, **settings)
        summary['amplitude_relation'] = {'C': relation.C, 'D': relation.D, 'D_expected': relation.D_expected,
                                         'relative_error': relation.relative_error, 'radii': relation.radii,
                                         'W': relation.W, 'W_spread': relation.W_spread}

    write_table(pd.DataFrame(rows), output_dir / 'connect.csv')
    write_json(summary, output_dir / 'connect.json')
    finish_run(output_dir, 'connect', config, params=params.info())
    return summary
