import configparser
import json
import logging
import os
import pathlib
import platform
from concurrent.futures import ProcessPoolExecutor, as_completed

import numpy as np
import pandas as pd

# logger
log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

CACHE_ENV_VAR = 'GLVORTEX_CACHE_DIR'
FLOAT_FORMAT = '%.17g'


def get_configuration(config_path):
    """
    Read .ini config file from given path
    """
    if isinstance(config_path, dict):
        return config_path
    config_path = pathlib.Path(config_path)
    if not config_path.exists():
        raise FileNotFoundError(f'Config file {config_path} not found')
    ref_path_config = configparser.ConfigParser()
    ref_path_config.read(config_path)

    total_config = {}
    for name, section in ref_path_config.items():
        for k, v in section.items():
            total_config[k] = v
    return total_config


def parse_float_list(value):
    """Space separated floats, as used for sweep ranges in the config file."""
    if isinstance(value, str):
        return [float(v) for v in value.split()]
    return [float(v) for v in value]


def get_cache_dir(cache_dir=None):
    env_dir = os.environ.get(CACHE_ENV_VAR)
    if env_dir:
        cache_dir = env_dir
    if cache_dir is None:
        cache_dir = pathlib.Path.home() / '.cache' / 'glvortex'
    cache_dir = pathlib.Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    return cache_dir


def run_parallel(runner, jobs, workers=1, key=None):
    """
    Run runner(**job) for every job dict.

    Results come back in job order regardless of completion order. When key is
    given, a failing job does not stop the others: the failure is logged and
    {key: job[key], 'error': message} is returned in its place.
    """
    results = [None] * len(jobs)

    def _failed(job, e):
        label = f'{key}={job[key]}' if key is not None else 'job'
        log.error(f'{runner.__name__} failed for {label}: {e}')
        if key is None:
            raise e
        return {key: job[key], 'error': f'{type(e).__name__}: {e}'}

    if workers <= 1:
        for i, job in enumerate(jobs):
            try:
                results[i] = runner(**job)
            except Exception as e:
                results[i] = _failed(job, e)
    else:
        with ProcessPoolExecutor(workers) as pool:
            futures = {}
            for i, job in enumerate(jobs):
                future = pool.submit(runner, **job)
                futures[future] = i

            for future in as_completed(futures):
                i = futures[future]
                try:
                    results[i] = future.result()
                except Exception as e:
                    results[i] = _failed(jobs[i], e)
    return results


def write_table(data, path, comments=None):
    """Write a DataFrame as CSV with 17 significant digits, optional '#' header lines."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as f:
        if comments is not None:
            for line in comments:
                f.write(f'# {line}\n')
        data.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    log.info(f'Write {path}')
    return path


def read_table(path):
    path = pathlib.Path(path)
    if not path.exists():
        raise FileNotFoundError(f'{path} not found')
    comments = []
    with open(path) as f:
        for line in f:
            if not line.startswith('#'):
                break
            comments.append(line[1:].strip())
    data = pd.read_csv(path, comment=None, skiprows=len(comments), float_precision='round_trip')
    return data, comments


def _to_builtin(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, pathlib.Path):
        return str(obj)
    raise TypeError(f'Object of type {type(obj).__name__} is not JSON serializable')


def write_json(obj, path):
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(obj, f, indent=2, sort_keys=True, default=_to_builtin)
        f.write('\n')
    log.info(f'Write {path}')
    return path


def package_versions():
    import scipy
    from . import __version__
    return {
        'glvortex': __version__,
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
    }


def write_manifest(output_dir, command, config, **extra):
    """Reproducibility manifest: command, full config echo, versions and seed."""
    manifest = {
        'command': command,
        'config': config.to_dict(),
        'seed': config.seed,
        'versions': package_versions(),
    }
    manifest.update(extra)
    return write_json(manifest, pathlib.Path(output_dir) / 'manifest.json')


def write_error_report(output_dir, command, error):
    report = {
        'command': command,
        'error': type(error).__name__,
        'message': str(error),
    }
    return write_json(report, pathlib.Path(output_dir) / 'error.json')
