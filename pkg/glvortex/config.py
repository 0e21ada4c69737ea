import dataclasses
import logging
import pathlib

import glvortex
from .utilities import get_configuration, parse_float_list, get_cache_dir

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

# Load defaults
PACKAGE_DIR = pathlib.Path(glvortex.__path__[0])
DEFAULT_CONFIG_PATH = PACKAGE_DIR / 'files/default_config/glvortex_config.ini'

CACHE_FORMATS = ('csv', 'npz')


def _to_bool(value):
    if isinstance(value, bool):
        return value
    value = str(value).strip().lower()
    if value in ('true', 'yes', '1', 'on'):
        return True
    if value in ('false', 'no', '0', 'off', ''):
        return False
    raise ValueError(f'Can not interpret {value!r} as a boolean')


@dataclasses.dataclass(frozen=True)
class RunConfig:
    profile_tol: float = 1e-10
    picard_tol: float = 1e-10
    ode_tol: float = 1e-10
    eigen_tol: float = 1e-10
    r_max: float = 30.0
    cache_format: str = 'csv'
    zero_grid_ratio: float = 1.05
    zero_grid_floor: float = 1e-6
    far_r_max: float = 40.0
    far_step: float = 0.02
    mesh_size: int = 400
    mesh_grading: float = 0.0
    d_values: tuple = (1.0, 2.0, 3.0)
    n_min: float = 0.9
    n_max: float = 1.1
    n_step: float = 0.02
    epsilons: tuple = (0.1, 0.05, 0.025)
    output_dir: str = 'glvortex_output'
    cache_dir: str = ''
    workers: int = 1
    seed: int = 0
    plot: bool = False

    @classmethod
    def from_sources(cls, config_path=None, **overrides):
        """
        Defaults from the package ini, then the user ini, then explicit overrides.
        None valued overrides are ignored so CLI flags that were not given fall through.
        """
        values = dict(get_configuration(DEFAULT_CONFIG_PATH))
        if config_path is not None:
            user_values = get_configuration(config_path)
            unknown = set(user_values) - set(values)
            if unknown:
                raise ValueError(f'Unknown config keys {sorted(unknown)} in {config_path}')
            values.update(user_values)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(values)

    @classmethod
    def from_dict(cls, values):
        kwargs = {}
        for field in dataclasses.fields(cls):
            if field.name not in values:
                continue
            value = values[field.name]
            if field.type == 'float' or field.type is float:
                value = float(value)
            elif field.type == 'int' or field.type is int:
                value = int(float(value))
            elif field.type == 'bool' or field.type is bool:
                value = _to_bool(value)
            elif field.type == 'tuple' or field.type is tuple:
                value = tuple(parse_float_list(value))
            else:
                value = '' if value is None else str(value)
            kwargs[field.name] = value
        config = cls(**kwargs)
        config.validate()
        return config

    def validate(self):
        for name in ['profile_tol', 'picard_tol', 'ode_tol', 'eigen_tol']:
            if getattr(self, name) <= 0:
                raise ValueError(f'{name} must be > 0, got {getattr(self, name)}')
        if self.r_max <= 1:
            raise ValueError(f'r_max must be > 1, got {self.r_max}')
        if self.far_r_max <= 1 or self.far_step <= 0:
            raise ValueError(f'Invalid far field grid: far_r_max={self.far_r_max}, far_step={self.far_step}')
        if self.zero_grid_ratio <= 1 or not 0 < self.zero_grid_floor < 1:
            raise ValueError(f'Invalid zero grid: ratio={self.zero_grid_ratio}, floor={self.zero_grid_floor}')
        if self.mesh_size < 4:
            raise ValueError(f'mesh_size must be >= 4, got {self.mesh_size}')
        if self.mesh_grading < 0:
            raise ValueError(f'mesh_grading must be >= 0, got {self.mesh_grading}')
        if len(self.d_values) == 0 or any(d <= 0 for d in self.d_values):
            raise ValueError(f'd_values must be a nonempty list of positive degrees, got {self.d_values}')
        if self.n_max < self.n_min or self.n_step <= 0:
            raise ValueError(f'Empty n range [{self.n_min}, {self.n_max}] with step {self.n_step}')
        if len(self.epsilons) == 0 or any(e <= 0 for e in self.epsilons):
            raise ValueError(f'epsilons must be a nonempty list of positive values, got {self.epsilons}')
        if self.workers < 1:
            raise ValueError(f'workers must be >= 1, got {self.workers}')
        if self.cache_format not in CACHE_FORMATS:
            raise ValueError(f'Unknown cache_format {self.cache_format}, choose from {CACHE_FORMATS}')
        return

    def to_dict(self):
        return dataclasses.asdict(self)

    def resolved_cache_dir(self):
        return get_cache_dir(self.cache_dir or None)

    def n_values(self, n_min=None, n_max=None):
        """Uniform n grid, endpoints included."""
        n_min = self.n_min if n_min is None else n_min
        n_max = self.n_max if n_max is None else n_max
        steps = int(round((n_max - n_min) / self.n_step))
        return [n_min + i * self.n_step for i in range(steps + 1)]


def print_default_config():
    with open(DEFAULT_CONFIG_PATH) as f:
        config_content = f.read()
    print(config_content)
    return
