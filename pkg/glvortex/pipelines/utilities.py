import logging
import pathlib

from ..basis import ModeParams
from ..config import RunConfig
from ..profile import cached_profile
from ..profile.cache import profile_key
from ..utilities import write_manifest

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())


def prepare_run(config=None, **overrides):
    """RunConfig from package defaults, the optional user ini and the CLI flags, plus its output dir."""
    config = RunConfig.from_sources(config, **overrides)
    output_dir = pathlib.Path(config.output_dir).absolute()
    output_dir.mkdir(parents=True, exist_ok=True)
    log.debug(f'Output directory {output_dir}')
    return config, output_dir


def get_profile(d, config):
    return cached_profile(d, config.resolved_cache_dir(), r_max=config.r_max, tol=config.profile_tol,
                          fmt=config.cache_format)


def d_list(d, config):
    """Degrees given on the command line, or the configured sweep degrees."""
    if d is None:
        return [float(x) for x in config.d_values]
    if isinstance(d, (list, tuple)):
        return [float(x) for x in d]
    return [float(d)]


def d_label(d):
    return profile_key(d)


def connection_settings(config):
    return dict(tol=config.ode_tol, picard_tol=config.picard_tol, far_r_max=config.far_r_max,
                far_step=config.far_step, ratio=config.zero_grid_ratio, floor=config.zero_grid_floor)


def eigen_settings(config):
    return dict(mesh_size=config.mesh_size, grading=config.mesh_grading, tol=config.eigen_tol, seed=config.seed)


def scan_range(d, config, n_min=None, n_max=None, clip=False):
    """
    (n_lo, n_hi, steps) of a C3 scan.

    With clip the upper end is limited to 2d - 0.1, the last n well inside D.
    """
    n_lo = config.n_min if n_min is None else float(n_min)
    n_hi = config.n_max if n_max is None else float(n_max)
    if clip:
        n_hi = min(n_hi, 2 * d - 0.1)
    if n_hi <= n_lo:
        raise ValueError(f'd={d}: empty n range [{n_lo}, {n_hi}]')
    steps = int(round((n_hi - n_lo) / config.n_step)) + 1
    return n_lo, n_hi, max(steps, 2)


def finish_run(output_dir, command, config, **extra):
    write_manifest(output_dir, command, config, **extra)
    log.info(f'{command} finished, results in {output_dir}')
    return output_dir


def mode_params(d, n=None, gamma1=None, gamma2=None, mu=1.0):
    """ModeParams from the mode n, or from an explicit (gamma1, gamma2) pair."""
    if gamma1 is not None or gamma2 is not None:
        if gamma1 is None or gamma2 is None:
            raise ValueError('Give both gamma1 and gamma2, or n')
        params = ModeParams(d=float(d), gamma1=float(gamma1), gamma2=float(gamma2), mu=float(mu))
    elif n is not None:
        params = ModeParams.from_mode(d, float(n), mu=float(mu))
    else:
        raise ValueError('Give n, or gamma1 and gamma2')
    if not params.in_D:
        raise ValueError(f'Parameters {params.info()} are outside the domain D')
    return params
