import logging

import numpy as np
import pandas as pd

from ..profile import profile_residual, profiles_cross_once, save_profile
from ..utilities import write_table, write_json
from .utilities import prepare_run, get_profile, d_list, d_label, finish_run

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

PROFILE_SUMMARY_COLUMNS = ['d', 'A_d', 'A_bisect', 'r_series', 'r_tail', 'tail_K', 'tol', 'residual']


def profile_pipeline(d=None, config=None, output_dir=None, r_max=None, profile_tol=None, cache_dir=None,
                     cache_format=None):
    """
    Build or load f_d for each degree and write the profiles with a summary.

    Written files: profile_d{d}.csv, profile_summary.csv, profile_summary.json, manifest.json.
    """
    config, output_dir = prepare_run(config, output_dir=output_dir, r_max=r_max, profile_tol=profile_tol,
                                     cache_dir=cache_dir, cache_format=cache_format)
    degrees = sorted(d_list(d, config))

    profiles = {}
    rows = []
    for d_value in degrees:
        profile = get_profile(d_value, config)
        profiles[d_value] = profile
        save_profile(profile, output_dir / f'profile_d{d_label(d_value)}.csv')
        residual = profile_residual(profile)
        log.info(f'd={d_value}: A_d={profile.A_d:.12g}, residual {residual:.3e}')
        rows.append({**profile.info(), 'residual': residual})
    summary = pd.DataFrame(rows).reindex(columns=PROFILE_SUMMARY_COLUMNS)
    write_table(summary, output_dir / 'profile_summary.csv')

    amplitudes = [profiles[d_value].A_d for d_value in degrees]
    crossings = {f'{d_label(small)}-{d_label(large)}': profiles_cross_once(profiles[small], profiles[large])
                 for small, large in zip(degrees[:-1], degrees[1:])}
    write_json({'degrees': degrees, 'A_d': amplitudes,
                'amplitudes_increasing': bool(np.all(np.diff(amplitudes) > 0)),
                'crossings': crossings,
                'max_residual': float(summary['residual'].max())},
               output_dir / 'profile_summary.json')
    finish_run(output_dir, 'profile', config, degrees=degrees)
    return profiles
