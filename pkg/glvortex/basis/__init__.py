from .params import ModeParams
from .system import (system_matrix, integrate_system, wronskian, frame_determinant, pfaffian_determinant, OMEGA,
                     FrameFlow)
from .branch import (SolutionBranch, FarBranch, ZERO_TAGS, FAR_TAGS, dump_branch, branch_frame,
                     branch_residual, decoupled_residual)
from .local import special_weights, picard_branch, zero_basis, zero_frame_determinant, expected_zero_determinant
from .farfield import choose_R0, far_branch, infinity_basis, expected_far_determinant, RESOLVENT_ORDER
