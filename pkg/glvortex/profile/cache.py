import json
import logging
import pathlib

import numpy as np
import pandas as pd

from ..utilities import write_table, read_table
from .profile import Profile, build_profile

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

ARRAY_FIELDS = ('grid', 'f', 'f_prime')
META_FIELDS = ('d', 'A_d', 'A_bisect', 'r_series', 'r_tail', 'tol', 'tail_K')


def profile_key(d):
    """Cache key of a degree, d rounded to 12 digits."""
    return format(round(float(d), 12), '.12g')


def profile_path(cache_dir, d, fmt='csv'):
    if fmt not in ('csv', 'npz'):
        raise ValueError(f'Unknown profile cache format {fmt}')
    return pathlib.Path(cache_dir) / f'profile_d{profile_key(d)}.{fmt}'


def save_profile(profile, path):
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = profile.info()
    if path.suffix == '.npz':
        np.savez(path, grid=profile.grid, f=profile.f, f_prime=profile.f_prime,
                 meta=np.array(json.dumps(meta, sort_keys=True)))
        log.info(f'Write {path}')
    else:
        data = pd.DataFrame({'r': profile.grid, 'f': profile.f, 'f_prime': profile.f_prime})
        write_table(data, path, comments=[json.dumps(meta, sort_keys=True)])
    return path


def load_profile(path):
    path = pathlib.Path(path)
    if not path.exists():
        raise FileNotFoundError(f'Profile cache {path} not found')
    if path.suffix == '.npz':
        with np.load(path) as data:
            meta = json.loads(str(data['meta']))
            arrays = {k: np.array(data[k]) for k in ARRAY_FIELDS}
    else:
        data, comments = read_table(path)
        if not comments:
            raise ValueError(f'Profile cache {path} has no metadata header')
        meta = json.loads(comments[0])
        arrays = {'grid': data['r'].to_numpy(),
                  'f': data['f'].to_numpy(),
                  'f_prime': data['f_prime'].to_numpy()}
    return Profile(**{k: float(meta[k]) for k in META_FIELDS}, **arrays)


def cached_profile(d, cache_dir, r_max=30.0, tol=1e-10, fmt='csv'):
    """
    Load f_d from the cache directory, or build and store it.

    A cached profile computed at a different tolerance or shorter range is rebuilt.
    """
    path = profile_path(cache_dir, d, fmt)
    if path.exists():
        profile = load_profile(path)
        if profile.tol <= tol and profile.r_end >= r_max:
            log.info(f'd={d}: profile served from cache {path}')
            return profile
        log.info(f'd={d}: cached profile at tol={profile.tol} r_end={profile.r_end} does not match, rebuild')
    profile = build_profile(d, r_max=r_max, tol=tol)
    save_profile(profile, path)
    return profile
