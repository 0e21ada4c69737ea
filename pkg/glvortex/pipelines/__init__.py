from .profile import profile_pipeline
from .basis import basis_pipeline, basis_diagnostics
from .connect import connect_pipeline
from .scan import scan_pipeline, sweep_pipeline
from .eig import eig_pipeline
from .verify import verify_pipeline
