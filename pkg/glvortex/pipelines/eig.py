import logging

import numpy as np
import pandas as pd

from ..eigen import solve_mode, m0, eigenvector_distance, eigenvector_local_distance
from ..utilities import write_table, write_json
from .utilities import prepare_run, get_profile, mode_params, eigen_settings, d_label, finish_run

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

EIG_COLUMNS = ['d', 'n', 'gamma1', 'gamma2', 'epsilon', 'm', 'gap', 'iterations', 'mesh_size']


def eig_point(d, epsilon, profile, n=None, gamma1=None, gamma2=None, mu=1.0, scalar=False, mesh_size=400,
              grading=0.0, tol=1e-10, seed=0):
    """One eigenvalue solve; returns the EigenResult. Runs in a worker process during sweeps."""
    if scalar:
        return m0(d, profile, epsilon, mesh_size=mesh_size, grading=grading, tol=tol, seed=seed)
    params = mode_params(d, n, gamma1, gamma2, mu)
    return solve_mode(params, profile, epsilon, mesh_size=mesh_size, grading=grading, tol=tol, seed=seed)


def eig_row(d, epsilon, profile, **kwargs):
    """eig_point flattened to an eig.csv row plus diagnostics."""
    result = eig_point(d, epsilon, profile, **kwargs)
    row = result.row()
    row.update({'sign_structure': result.sign_structure, 'near_degenerate': result.near_degenerate,
                'residual_norm': result.residual_norm, 'error': ''})
    return row


def _distance_target(result):
    if result.scalar:
        return 'profile'
    if result.params.mu == 1 and abs(result.params.n - 1) < 1e-12:
        return 'exact_pair'
    return None


def eigvec_file_name(result):
    n = 'scalar' if result.scalar else format(result.params.n, '.6g')
    return f'eigvec_d{d_label(result.d)}_n{n}_eps{format(result.epsilon, ".6g")}.csv'


def eig_pipeline(d, n=None, gamma1=None, gamma2=None, mu=1.0, epsilon=None, scalar=False, eigvec=False,
                 config=None, output_dir=None, mesh_size=None, mesh_grading=None, eigen_tol=None, seed=None,
                 cache_dir=None):
    """
    First eigenvalue m(eps) for one (gamma1, gamma2), or m0(eps) with scalar, over the given epsilons.

    Written files: eig.csv, eig_summary.json, optional eigvec_*.csv, manifest.json.
    """
    epsilons = None if epsilon is None else tuple(np.atleast_1d(epsilon).astype(float))
    config, output_dir = prepare_run(config, output_dir=output_dir, mesh_size=mesh_size, mesh_grading=mesh_grading,
                                     eigen_tol=eigen_tol, seed=seed, cache_dir=cache_dir, epsilons=epsilons)
    params = None if scalar else mode_params(d, n, gamma1, gamma2, mu)
    profile = get_profile(d, config)

    rows = []
    details = []
    for eps in config.epsilons:
        result = eig_point(d, eps, profile, n=n, gamma1=gamma1, gamma2=gamma2, mu=mu, scalar=scalar,
                           **eigen_settings(config))
        rows.append(result.row())
        target = _distance_target(result)
        detail = {'epsilon': eps, 'm': result.m, 'm2': result.m2, 'gap': result.gap,
                  'sign_structure': result.sign_structure, 'near_degenerate': result.near_degenerate,
                  'residual_norm': result.residual_norm, 'rayleigh_residual': result.rayleigh_residual,
                  'distance_target': target,
                  'distance': eigenvector_distance(result, profile, target) if target else None,
                  'local_distance': eigenvector_local_distance(result, profile) if result.scalar else None}
        details.append(detail)
        if eigvec:
            write_table(pd.DataFrame({'r': result.mesh, 'a': result.vec_a, 'b': result.vec_b}),
                        output_dir / eigvec_file_name(result))

    table = pd.DataFrame(rows).reindex(columns=EIG_COLUMNS)
    write_table(table, output_dir / 'eig.csv')
    write_json({'d': d, 'scalar': scalar, 'params': None if params is None else params.info(),
                'results': details}, output_dir / 'eig_summary.json')
    finish_run(output_dir, 'eig', config, params=None if params is None else params.info())
    return table
