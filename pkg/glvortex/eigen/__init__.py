from .assemble import Assembly, assemble, assemble_scalar, make_mesh, profile_weights
from .solver import EigenResult, smallest_eig, solve_mode, m0, eigenvector_distance, eigenvector_local_distance
from .bounds import (TestFunctionBound, CutoffPair, test_function_bound, trial_pair, syst_residual, cutoff_family,
                     lin_map, lin_trick_eval)
