from .propagate import propagate, propagate_frame
from .connect import (ConnectionCoeffs, AmplitudeRelation, connect, lagrange_check, amplitude_relation,
                      default_match_radius, ZERO_THRESHOLD, MAX_CONDITION)
from .scan import scan_C3, scan_point, ScanResult, ScanRoot, SCAN_COLUMNS
from .scalar import (ScalarCheck, scalar_bounded_check, scalar_residual, exact_pair, exact_mode_residual,
                     SCALAR_EQUATIONS)
from .determinant import bounded_determinant, regular_seed
