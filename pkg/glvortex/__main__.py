"""
When adding new function:
1. add a func_register_subparser function to register the subparser
2. add a condition in main func about this new func name, import the real func as func in main
"""

import argparse
import logging
import sys

import glvortex
from glvortex import __version__

log = logging.getLogger()

DESCRIPTION = """
glv computes Ginzburg-Landau vortex profiles, the canonical solution bases of the
linearized radial system at r = 0 and r = infinity, their connection coefficients
and the first eigenvalues of the associated quotients.

Every subcommand reads the package default config, then the file given with
--config, then its own flags, and writes CSV/JSON results with a manifest.json.
"""

EPILOG = """
Print the commented default config with "glv default-config".
"""


class NiceFormatter(logging.Formatter):
    """
    From Cutadapt https://github.com/marcelm/cutadapt
    Do not prefix "INFO:" to info-level log messages (but do it for all other
    levels).
    Based on http://stackoverflow.com/a/9218261/715090 .
    """

    def format(self, record):
        if record.levelno != logging.INFO:
            record.msg = '{}: {}'.format(record.levelname, record.msg)
        return super().format(record)


def setup_logging(stdout=False, quiet=False, debug=False):
    """
    From Cutadapt https://github.com/marcelm/cutadapt
    Attach handler to the global logger object
    """
    stream_handler = logging.StreamHandler(sys.stdout if stdout else sys.stderr)
    stream_handler.setFormatter(NiceFormatter())
    # debug overrides quiet
    if debug:
        level = logging.DEBUG
    elif quiet:
        level = logging.ERROR
    else:
        level = logging.INFO
    stream_handler.setLevel(level)
    log.setLevel(level)
    log.addHandler(stream_handler)


def _run_options(parser_opt):
    parser_opt.add_argument(
        "--config",
        type=str,
        default=None,
        help="Path of a user config file, print the template with glv default-config."
    )
    parser_opt.add_argument(
        "--output_dir", "--output-dir",
        dest="output_dir",
        type=str,
        default=None,
        help="Directory of the results, overrides output_dir of the config."
    )
    parser_opt.add_argument(
        "--cache_dir", "--cache-dir",
        dest="cache_dir",
        type=str,
        default=None,
        help="Profile cache directory, the GLVORTEX_CACHE_DIR environment variable wins."
    )


def _mode_options(parser_req, parser_opt, d_required=True):
    parser_req.add_argument(
        "--d",
        type=float,
        required=d_required,
        help="Vortex degree d >= 1."
    )
    parser_opt.add_argument(
        "--n",
        type=float,
        default=None,
        help="Fourier mode, sets gamma1 = |n - d| and gamma2 = n + d."
    )
    parser_opt.add_argument(
        "--gamma1",
        type=float,
        default=None,
        help="Explicit gamma1, use together with --gamma2 instead of --n."
    )
    parser_opt.add_argument(
        "--gamma2",
        type=float,
        default=None,
        help="Explicit gamma2."
    )
    parser_opt.add_argument(
        "--mu",
        type=float,
        default=1.0,
        help="Spectral parameter multiplying (1 - f^2); 1 is the linearized system."
    )


def _basis_options(parser_opt):
    for name, help_text in [('picard_tol', 'Fixed point iteration tolerance.'),
                            ('ode_tol', 'Integrator relative tolerance.'),
                            ('far_r_max', 'Truncation radius of the far field problems.'),
                            ('far_step', 'Step of the far field grid.')]:
        parser_opt.add_argument(
            f"--{name}", f"--{name.replace('_', '-')}",
            dest=name,
            type=float,
            default=None,
            help=help_text
        )


def print_default_config_register_subparser(subparser):
    parser = subparser.add_parser('default-config',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="Print the commented default config.")
    return parser


def profile_register_subparser(subparser):
    parser = subparser.add_parser('profile',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="Build or load the vortex profiles f_d.")
    parser_opt = parser.add_argument_group("Optional inputs")
    parser_opt.add_argument(
        "--d",
        type=float,
        nargs='+',
        default=None,
        help="Space separated degrees, default the d_values of the config."
    )
    parser_opt.add_argument(
        "--r_max", "--r-max",
        dest="r_max",
        type=float,
        default=None,
        help="Outer radius of the stored profile."
    )
    parser_opt.add_argument(
        "--profile_tol", "--profile-tol",
        dest="profile_tol",
        type=float,
        default=None,
        help="Amplitude bisection tolerance."
    )
    parser_opt.add_argument(
        "--cache_format", "--cache-format",
        dest="cache_format",
        type=str,
        choices=['csv', 'npz'],
        default=None,
        help="Format of the profile cache files."
    )
    _run_options(parser_opt)


def basis_register_subparser(subparser):
    parser = subparser.add_parser('basis',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="Dump the zero side and far side bases of one parameter point.")
    parser_req = parser.add_argument_group("Required inputs")
    parser_opt = parser.add_argument_group("Optional inputs")
    _mode_options(parser_req, parser_opt)
    parser_opt.add_argument(
        "--zero_R", "--zero-R",
        dest="zero_R",
        type=float,
        default=None,
        help="End of the zero side Picard interval, chosen automatically when omitted."
    )
    parser_opt.add_argument(
        "--R0",
        type=float,
        default=None,
        help="Start of the far side interval, chosen automatically when omitted."
    )
    parser_opt.add_argument(
        "--r_out", "--r-out",
        dest="r_out",
        type=float,
        default=None,
        help="Continue the zero side branches outward to this radius in the dumps."
    )
    _basis_options(parser_opt)
    _run_options(parser_opt)


def connect_register_subparser(subparser):
    parser = subparser.add_parser('connect',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="Connection coefficients C1..C4 at one parameter point.")
    parser_req = parser.add_argument_group("Required inputs")
    parser_opt = parser.add_argument_group("Optional inputs")
    _mode_options(parser_req, parser_opt)
    parser_opt.add_argument(
        "--R_mid", "--R-mid",
        dest="R_mid",
        type=float,
        default=None,
        help="Center of the match radius search, default max(8, 2n + 2d)."
    )
    parser_opt.add_argument(
        "--amplitude",
        action='store_true',
        help="Also check the Lagrange identity and the amplitude relation."
    )
    _basis_options(parser_opt)
    _run_options(parser_opt)


def scan_register_subparser(subparser):
    parser = subparser.add_parser('scan',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="Scan C3 over an n range and report its roots.")
    parser_opt = parser.add_argument_group("Optional inputs")
    parser_opt.add_argument(
        "--d",
        type=float,
        nargs='+',
        default=None,
        help="Space separated degrees, default the d_values of the config."
    )
    for name in ['n_min', 'n_max', 'n_step']:
        parser_opt.add_argument(
            f"--{name}", f"--{name.replace('_', '-')}",
            dest=name,
            type=float,
            default=None,
            help=f"{name} of the uniform n grid."
        )
    parser_opt.add_argument(
        "--R_mid", "--R-mid",
        dest="R_mid",
        type=float,
        default=None,
        help="Center of the match radius search."
    )
    parser_opt.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Number of worker processes."
    )
    _basis_options(parser_opt)
    _run_options(parser_opt)


def eig_register_subparser(subparser):
    parser = subparser.add_parser('eig',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="First eigenvalue m(eps) of one mode, or m0(eps) with --scalar.")
    parser_req = parser.add_argument_group("Required inputs")
    parser_opt = parser.add_argument_group("Optional inputs")
    _mode_options(parser_req, parser_opt)
    parser_opt.add_argument(
        "--epsilon",
        type=float,
        nargs='+',
        default=None,
        help="Space separated core sizes, default the epsilons of the config."
    )
    parser_opt.add_argument(
        "--scalar",
        action='store_true',
        help="Solve the scalar quotient m0 instead of the system."
    )
    parser_opt.add_argument(
        "--eigvec",
        action='store_true',
        help="Write the eigenvectors as eigvec_*.csv."
    )
    parser_opt.add_argument(
        "--mesh_size", "--mesh-size",
        dest="mesh_size",
        type=int,
        default=None,
        help="Number of finite elements."
    )
    parser_opt.add_argument(
        "--mesh_grading", "--mesh-grading",
        dest="mesh_grading",
        type=float,
        default=None,
        help="Mesh grading exponent, 0 for automatic."
    )
    parser_opt.add_argument(
        "--eigen_tol", "--eigen-tol",
        dest="eigen_tol",
        type=float,
        default=None,
        help="Eigenvalue iteration tolerance."
    )
    parser_opt.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Seed of the random start vectors."
    )
    _run_options(parser_opt)


def sweep_register_subparser(subparser):
    parser = subparser.add_parser('sweep',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="Eigenvalue and C3 grids over the configured ranges.")
    parser_opt = parser.add_argument_group("Optional inputs")
    parser_opt.add_argument(
        "--d",
        type=float,
        nargs='+',
        default=None,
        help="Space separated degrees, default the d_values of the config."
    )
    parser_opt.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Number of worker processes."
    )
    parser_opt.add_argument(
        "--no_scan", "--no-scan",
        dest="scan",
        action='store_false',
        help="Skip the C3 scans."
    )
    parser_opt.add_argument(
        "--no_eig", "--no-eig",
        dest="eig",
        action='store_false',
        help="Skip the eigenvalue grid."
    )
    _run_options(parser_opt)


def verify_register_subparser(subparser):
    parser = subparser.add_parser('verify',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="Run the acceptance checks, exit status 1 when one fails.")
    parser_opt = parser.add_argument_group("Optional inputs")
    parser_opt.add_argument(
        "--only",
        type=int,
        nargs='+',
        default=None,
        help="Space separated criterion numbers to run, default all."
    )
    parser_opt.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Number of worker processes."
    )
    _run_options(parser_opt)


def plot_register_subparser(subparser):
    parser = subparser.add_parser('plot',
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                                  help="Plot series from scan, eig and profile results.")
    parser_req = parser.add_argument_group("Required inputs")
    parser_opt = parser.add_argument_group("Optional inputs")
    parser_req.add_argument(
        "--input_dir", "--input-dir",
        dest="input_dir",
        type=str,
        required=True,
        help="Directory holding scan_d*.csv, eig.csv or profile_d*.csv."
    )
    parser_opt.add_argument(
        "--output_dir", "--output-dir",
        dest="output_dir",
        type=str,
        default=None,
        help="Directory of the plot files, default the input dir."
    )
    parser_opt.add_argument(
        "--svg",
        action='store_true',
        help="Also write SVG line plots."
    )


def main():
    parser = argparse.ArgumentParser(description=DESCRIPTION,
                                     epilog=EPILOG,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", help="Show version number and exit",
                        version=__version__)
    parser.add_argument("--quiet", action="store_true", help="Only log errors.")
    parser.add_argument("--debug", action="store_true", help="Log iteration details.")
    subparsers = parser.add_subparsers(
        title="functions",
        dest="command",
        metavar=""
    )

    # add subparsers
    print_default_config_register_subparser(subparsers)
    profile_register_subparser(subparsers)
    basis_register_subparser(subparsers)
    connect_register_subparser(subparsers)
    scan_register_subparser(subparsers)
    eig_register_subparser(subparsers)
    sweep_register_subparser(subparsers)
    verify_register_subparser(subparsers)
    plot_register_subparser(subparsers)

    # initiate
    args = None
    if len(sys.argv) > 1:
        # print out version
        if sys.argv[1] in ['-v', '--version']:
            print(glvortex.__version__)
            exit()
        else:
            args = parser.parse_args()
    else:
        # print out help
        parser.parse_args(["-h"])
        exit()

    args_vars = vars(args)
    quiet = args_vars.pop('quiet')
    debug = args_vars.pop('debug')
    # set up logging
    if not logging.root.handlers:
        setup_logging(stdout=True, quiet=quiet, debug=debug)

    # execute command
    cur_command = args_vars.pop('command')
    # Do real import here:
    if cur_command == 'default-config':
        from .config import print_default_config as func
    elif cur_command == 'profile':
        from .pipelines import profile_pipeline as func
    elif cur_command == 'basis':
        from .pipelines import basis_pipeline as func
    elif cur_command == 'connect':
        from .pipelines import connect_pipeline as func
    elif cur_command == 'scan':
        from .pipelines import scan_pipeline as func
    elif cur_command == 'eig':
        from .pipelines import eig_pipeline as func
    elif cur_command == 'sweep':
        from .pipelines import sweep_pipeline as func
    elif cur_command == 'verify':
        from .pipelines import verify_pipeline as func
    elif cur_command == 'plot':
        from .plot import emit_plotdata as func
    else:
        log.debug(f'{cur_command} not Known, check the main function if else part')
        parser.parse_args(["-h"])
        return

    # run the command
    from .errors import GLVortexError
    try:
        func(**args_vars)
    except (GLVortexError, ValueError, FileNotFoundError) as e:
        log.error(f'{cur_command} failed with {type(e).__name__}: {e}')
        output_dir = args_vars.get('output_dir')
        if output_dir is not None:
            from .utilities import write_error_report
            write_error_report(output_dir, cur_command, e)
        sys.exit(1)
    return


if __name__ == '__main__':
    main()
