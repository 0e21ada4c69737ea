from .shooting import shoot_profile, find_critical_amplitude, ShootResult, OVERSHOOT, UNDERSHOOT, INDETERMINATE
from .profile import (Profile, build_profile, profile_residual, pointwise_residual,
                      profiles_cross_once, critical_amplitudes, tail_value, tail_derivative)
from .cache import cached_profile, save_profile, load_profile, profile_path
