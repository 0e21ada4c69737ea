import logging

import numpy as np
import pandas as pd

from ..connection import scan_C3
from ..utilities import write_table, write_json, run_parallel
from .eig import eig_row, EIG_COLUMNS
from .utilities import (prepare_run, get_profile, d_list, d_label, scan_range, connection_settings,
                        eigen_settings, finish_run)

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

SWEEP_EIG_COLUMNS = EIG_COLUMNS + ['sign_structure', 'near_degenerate', 'residual_norm', 'error']


def run_scans(degrees, config, output_dir, n_min=None, n_max=None, R_mid=None, clip=False, refine=True):
    """C3 scans for each degree; writes scan_d{d}.csv and returns {d label: ScanResult}."""
    results = {}
    for d in degrees:
        profile = get_profile(d, config)
        n_lo, n_hi, steps = scan_range(d, config, n_min, n_max, clip=clip)
        result = scan_C3(d, (n_lo, n_hi), steps, profile, R_mid=R_mid, workers=config.workers, refine=refine,
                         **connection_settings(config))
        write_table(result.table, output_dir / f'scan_d{d_label(d)}.csv')
        results[d_label(d)] = result
    return results


def scan_pipeline(d=None, n_min=None, n_max=None, n_step=None, R_mid=None, config=None, output_dir=None,
                  workers=None, picard_tol=None, ode_tol=None, far_r_max=None, far_step=None, cache_dir=None):
    """
    Scan C3 over a uniform n range for each degree and report its roots.

    Written files: scan_d{d}.csv, scan_summary.json, manifest.json.
    """
    config, output_dir = prepare_run(config, output_dir=output_dir, n_min=n_min, n_max=n_max, n_step=n_step,
                                     workers=workers, picard_tol=picard_tol, ode_tol=ode_tol, far_r_max=far_r_max,
                                     far_step=far_step, cache_dir=cache_dir)
    results = run_scans(d_list(d, config), config, output_dir, R_mid=R_mid)
    summary = {label: result.summary() for label, result in results.items()}
    write_json(summary, output_dir / 'scan_summary.json')
    finish_run(output_dir, 'scan', config)
    return results


def eig_sweep(degrees, config, n_values=None):
    """
    Eigenvalue grid over degrees, modes and epsilons.

    The scalar m0 rows carry n = NaN. Failing points keep their (d, n, epsilon)
    and the error text.
    """
    jobs = []
    for d in degrees:
        profile = get_profile(d, config)
        modes = config.n_values() if n_values is None else n_values
        for n in [None] + list(modes):
            for eps in config.epsilons:
                jobs.append(dict(d=d, epsilon=eps, profile=profile, n=n, scalar=n is None, **eigen_settings(config)))
    rows = run_parallel(eig_row, jobs, workers=config.workers, key='epsilon')
    for job, row in zip(jobs, rows):
        if row.get('error'):
            row.update({'d': job['d'], 'n': np.nan if job['n'] is None else job['n']})
    return pd.DataFrame(rows).reindex(columns=SWEEP_EIG_COLUMNS).fillna({'error': ''})


def sweep_pipeline(d=None, config=None, output_dir=None, workers=None, scan=True, eig=True, cache_dir=None):
    """
    Eigenvalue and C3 grids over the configured sweep ranges.

    The C3 scans run on [n_min, min(n_max, 2d - 0.1)]. Written files: eig.csv,
    scan_d{d}.csv, sweep_summary.json, manifest.json; SVG plots too when plot is on.
    """
    config, output_dir = prepare_run(config, output_dir=output_dir, workers=workers, cache_dir=cache_dir)
    degrees = d_list(d, config)
    summary = {}
    if scan:
        results = run_scans(degrees, config, output_dir, clip=True)
        summary['scan'] = {label: result.summary() for label, result in results.items()}
    if eig:
        table = eig_sweep(degrees, config)
        write_table(table, output_dir / 'eig.csv')
        summary['eig'] = {'points': len(table), 'failures': int((table['error'] != '').sum()),
                          'sign_structure': bool(table['sign_structure'].fillna(False).all())}
    write_json(summary, output_dir / 'sweep_summary.json')
    if config.plot:
        from ..plot import emit_plotdata
        emit_plotdata(output_dir, output_dir, svg=True)
    finish_run(output_dir, 'sweep', config, degrees=degrees)
    return summary
