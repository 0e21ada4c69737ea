"""
Acceptance suite: every check runs at desk scale and reports pass or fail.

Each check returns a dict with the criterion number, a name, the measured
value against its threshold and free-form details. A check that raises is a
failure carrying the error text, the remaining checks still run.
"""

import dataclasses
import filecmp
import logging

import numpy as np
import pandas as pd

from ..basis import ModeParams, zero_basis, infinity_basis
from ..connection import (amplitude_relation, scalar_bounded_check, exact_mode_residual, bounded_determinant,
                          ZERO_THRESHOLD)
from ..eigen import test_function_bound, eigenvector_distance, eigenvector_local_distance
from ..errors import GLVortexError, VerificationError
from ..profile import profile_residual, tail_value
from ..utilities import write_table, write_json
from .basis import basis_diagnostics
from .eig import eig_point
from .scan import run_scans
from .utilities import prepare_run, get_profile, d_label, connection_settings, eigen_settings, finish_run

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

VERIFY_COLUMNS = ['criterion', 'name', 'passed', 'value', 'threshold', 'error']

PROFILE_DEGREES = (1.0, 1.5, 2.0, 3.0)
PROFILE_RESIDUAL = 1e-8
TAIL_RANGE = (10.0, 25.0)
TAIL_EXPONENT_WINDOW = 0.3
SERIES_RANGE = (0.02, 0.1)
SERIES_RTOL = 0.01
EXACT_MODE_DEGREES = (1.0, 2.0)
EXACT_MODE_LIMIT = 1e-7
WRONSKIAN_POINTS = ((1.0, 1.2), (2.0, 1.5))
WRONSKIAN_SPREAD = 1e-8
FAR_DETERMINANT_RTOL = 1e-6
LAGRANGE_POINT = (1.0, 1.2)
LAGRANGE_SPREAD = 1e-6
AMPLITUDE_RTOL = 1e-3
SCAN_DEGREES = (1.0, 2.0, 3.0)
SCAN_N_MIN = 0.9
SCAN_STEP = 0.02
ROOT_TOLERANCE = 1e-3
ROOT_FREE_FROM = 1.1
EVIDENCE_DROP = 0.1
SCALAR_DEGREES = (1.0, 2.0)
EIGEN_DEGREES = (1.0, 2.0)
M0_STABILITY = 2.0
M0_FLOOR = 0.5
NEGATIVE_POINTS = ((2.0, 1.5), (3.0, 1.5), (3.0, 2.5))
DECOUPLED_PARAMS = (1.0, 1.5, 1.5)
DECOUPLED_LIMIT = 1e-6
DETERMINISM_DEGREE = 1.0


def _result(criterion, name, passed, value, threshold, **details):
    return {'criterion': criterion, 'name': name, 'passed': bool(passed), 'value': float(value),
            'threshold': float(threshold), 'error': '', 'details': details}


def tail_exponent(profile, r_range=TAIL_RANGE, points=32):
    """Decay exponent of 1 - f, fitted in log-log over r_range."""
    r = np.geomspace(*r_range, points)
    slope = np.polyfit(np.log(r), np.log(1 - profile(r)), 1)[0]
    return float(-slope)


def series_coefficient(profile, r_range=SERIES_RANGE, points=16):
    """c in f / (A_d r^d) = 1 + c r^2 + O(r^4), by least squares on samples over r_range."""
    r = np.geomspace(*r_range, points)
    ratio = profile(r) / (profile.A_d * r ** profile.d) - 1
    design = np.column_stack([r ** 2, r ** 4])
    coeffs, *_ = np.linalg.lstsq(design, ratio, rcond=None)
    return float(coeffs[0])


def check_profiles(config, profiles):
    residuals, exponents, coefficient_errors, tail_defects = {}, {}, {}, {}
    for d in PROFILE_DEGREES:
        profile = profiles[d]
        key = d_label(d)
        residuals[key] = profile_residual(profile)
        exponents[key] = tail_exponent(profile)
        expected = -1 / (4 * (d + 1))
        coefficient_errors[key] = abs(series_coefficient(profile) / expected - 1)
        tail_defects[key] = abs(float(profile(20.0)) - float(tail_value(d, 20.0)))
    worst_exponent = max(abs(e - 2) for e in exponents.values())
    passed = (max(residuals.values()) < PROFILE_RESIDUAL and worst_exponent <= TAIL_EXPONENT_WINDOW
              and max(coefficient_errors.values()) < SERIES_RTOL)
    return _result(1, 'profile fidelity', passed, max(residuals.values()), PROFILE_RESIDUAL,
                   residual=residuals, tail_exponent=exponents, series_coefficient_error=coefficient_errors,
                   tail_defect_at_20=tail_defects)


def check_exact_mode(config, profiles):
    values = {d_label(d): exact_mode_residual(profiles[d]) for d in EXACT_MODE_DEGREES}
    worst = max(values.values())
    return _result(2, 'exact mode oracle', worst < EXACT_MODE_LIMIT, worst, EXACT_MODE_LIMIT, residual=values)


def check_wronskians(config, profiles):
    details = {}
    worst_spread, worst_far = 0.0, 0.0
    for d, n in WRONSKIAN_POINTS:
        params = ModeParams.from_mode(d, n)
        zero = zero_basis(params, profiles[d], tol=config.picard_tol, r_out=params.d + 4, ode_tol=config.ode_tol,
                          ratio=config.zero_grid_ratio, floor=config.zero_grid_floor)
        far = infinity_basis(params, profiles[d], r_max=config.far_r_max, tol=config.picard_tol,
                             step=config.far_step, ode_tol=config.ode_tol)
        diagnostics = basis_diagnostics(params, zero, far, r_out=params.d + 4)
        worst_spread = max(worst_spread, diagnostics['zero']['spread'], diagnostics['far']['spread'])
        worst_far = max(worst_far, diagnostics['far']['relative_error'])
        details[f'd={d},n={n}'] = {'zero_spread': diagnostics['zero']['spread'],
                                   'far_spread': diagnostics['far']['spread'],
                                   'far_relative_error': diagnostics['far']['relative_error'],
                                   'zero_relative_error': diagnostics['zero']['relative_error']}
    passed = worst_spread < WRONSKIAN_SPREAD and worst_far < FAR_DETERMINANT_RTOL
    return _result(3, 'wronskian suite', passed, worst_spread, WRONSKIAN_SPREAD, far_relative_error=worst_far,
                   points=details)


def check_lagrange(config, profiles):
    d, n = LAGRANGE_POINT
    relation = amplitude_relation(ModeParams.from_mode(d, n), profiles[d], **connection_settings(config))
    passed = relation.W_spread < LAGRANGE_SPREAD and relation.relative_error < AMPLITUDE_RTOL
    return _result(4, 'lagrange identity and amplitude relation', passed, relation.relative_error, AMPLITUDE_RTOL,
                   W_spread=relation.W_spread, C=relation.C, D=relation.D, D_expected=relation.D_expected)


def root_evidence(root, d, profile, config):
    """
    The bounded solution determinant at the ends of a root bracket, and at the root for a touch.

    A sign change root is confirmed when the determinant changes sign across
    the bracket, a touch when it drops below a tenth of its bracket values.
    """
    settings = dict(tol=config.ode_tol, picard_tol=config.picard_tol, far_r_max=config.far_r_max,
                    far_step=config.far_step)
    n_lo, n_hi = root.bracket
    ends = [bounded_determinant(ModeParams.from_mode(d, n), profile, **settings) for n in (n_lo, n_hi)]
    evidence = {'n': root.n, 'kind': root.kind, 'bracket': [n_lo, n_hi], 'determinant': ends}
    if root.kind == 'sign_change':
        confirmed = ends[0] * ends[1] < 0
    else:
        at_root = bounded_determinant(ModeParams.from_mode(d, root.n), profile, **settings)
        evidence['determinant_at_root'] = at_root
        confirmed = abs(at_root) < EVIDENCE_DROP * min(abs(x) for x in ends)
    evidence['confirmed'] = bool(confirmed)
    return evidence


def check_scans(config, profiles, output_dir):
    """
    One root of C3 at n = 1 per degree and |C3| above the threshold from n = 1.1 on.

    Roots away from n = 1 are reported with the bounded solution determinant
    at their bracket ends; any such root fails the check.
    """
    scan_config = dataclasses.replace(config, n_min=SCAN_N_MIN, n_step=SCAN_STEP,
                                      n_max=2 * max(SCAN_DEGREES) - 0.1)
    results = run_scans(SCAN_DEGREES, scan_config, output_dir, clip=True)
    details = {}
    passed = True
    worst = 0.0
    for label, result in results.items():
        table = result.table
        roots = [root.n for root in result.roots]
        root_at_one = any(abs(x - 1) < ROOT_TOLERANCE for x in roots)
        extra = [root_evidence(root, result.d, profiles[result.d], config)
                 for root in result.roots if abs(root.n - 1) >= ROOT_TOLERANCE]
        tail = table[(table['n'] >= ROOT_FREE_FROM) & (table['error'] == '')]
        smallest = float(tail['C3_normalized'].abs().min()) if len(tail) else float('nan')
        ok = root_at_one and not extra and result.failures == 0 and smallest > ZERO_THRESHOLD
        if roots:
            worst = max(worst, min(abs(x - 1) for x in roots))
        passed = passed and ok
        for evidence in extra:
            verdict = 'confirmed' if evidence['confirmed'] else 'not confirmed'
            log.warning(f"d={result.d}: root of C3 at n={evidence['n']:.6f} away from n = 1, {verdict} by the "
                        f"bounded solution determinant {evidence['determinant']}")
        details[label] = {'roots': roots, 'kinds': [root.kind for root in result.roots],
                          'root_at_one': root_at_one, 'extra_roots': extra,
                          'min_abs_C3_beyond': smallest, 'failures': result.failures}
    return _result(5, 'connection scan', passed, worst, ROOT_TOLERANCE, degrees=details)


def check_scalar(config, profiles):
    details = {}
    passed = True
    for d in SCALAR_DEGREES:
        gl0 = scalar_bounded_check(profiles[d], 'EqGL0', tol=config.ode_tol)
        glr = scalar_bounded_check(profiles[d], 'EqGLR', tol=config.ode_tol)
        passed = passed and gl0.bounded and not glr.bounded
        details[d_label(d)] = {'EqGL0': gl0.to_dict(), 'EqGLR': glr.to_dict()}
    return _result(6, 'scalar analogues', passed, float(passed), 1.0, degrees=details)


def log_decay_exponent(epsilons, m):
    """p in m - 1 ~ K log(1 / eps)^-p, fitted in log-log; NaN with fewer than two points."""
    epsilons = np.asarray(epsilons, dtype=float)
    excess = np.asarray(m, dtype=float) - 1
    if epsilons.size < 2 or np.any(excess <= 0):
        return float('nan')
    slope = np.polyfit(np.log(np.log(1 / epsilons)), np.log(excess), 1)[0]
    return float(-slope)


def check_eigen(config, profiles):
    settings = eigen_settings(config)
    epsilons = list(config.epsilons)
    details = {'m0': {}, 'limit_mode': {}, 'negative': {}}
    sign_ok = True
    passed = True

    for d in EIGEN_DEGREES:
        results = [eig_point(d, eps, profiles[d], scalar=True, **settings) for eps in epsilons]
        quotients = [(result.m - 1) / result.epsilon ** 2 for result in results]
        distances = [eigenvector_distance(result, profiles[d], 'profile') for result in results]
        local = [eigenvector_local_distance(result, profiles[d]) for result in results]
        # (m0 - 1) / eps^2 is bounded below, not constant
        ok = (all(q > 0 for q in quotients) and min(quotients) >= M0_FLOOR * quotients[0]
              and local[-1] < local[0])
        passed = passed and ok
        sign_ok = sign_ok and all(result.sign_structure for result in results)
        details['m0'][d_label(d)] = {'m': [r.m for r in results], 'quotient': quotients,
                                     'factor_two_stable': max(quotients) <= M0_STABILITY * min(quotients),
                                     'log_decay_exponent': log_decay_exponent(epsilons, [r.m for r in results]),
                                     'distance': distances, 'local_distance': local, 'passed': ok}

    for d in EIGEN_DEGREES:
        results = [eig_point(d, eps, profiles[d], gamma1=d - 1, gamma2=d + 1, **settings) for eps in epsilons]
        excess = [result.m - 1 for result in results]
        distances = [eigenvector_distance(result, profiles[d], 'exact_pair') for result in results]
        ok = all(x > 0 for x in excess) and all(np.diff(excess) < 0)
        passed = passed and ok
        sign_ok = sign_ok and all(result.sign_structure for result in results)
        details['limit_mode'][d_label(d)] = {'m': [r.m for r in results], 'distance': distances, 'passed': ok}

    for d, n in NEGATIVE_POINTS:
        bound = test_function_bound(d, n, profiles[d])
        results = [eig_point(d, eps, profiles[d], n=n, **settings) for eps in epsilons]
        limit = 1 - bound.C_n / 2
        ok = all(result.m <= limit for result in results)
        passed = passed and ok
        sign_ok = sign_ok and all(result.sign_structure for result in results)
        details['negative'][f'd={d},n={n}'] = {'C_n': bound.C_n, 'limit': limit, 'm': [r.m for r in results],
                                                'passed': ok}

    details['sign_structure'] = sign_ok
    return _result(7, 'eigenvalue shadows', passed and sign_ok, float(passed and sign_ok), 1.0, **details)


def check_decoupling(config, profiles):
    d, gamma1, gamma2 = DECOUPLED_PARAMS
    params = ModeParams(d=d, gamma1=gamma1, gamma2=gamma2)
    zero = zero_basis(params, profiles[d], tol=config.picard_tol, ode_tol=config.ode_tol,
                      ratio=config.zero_grid_ratio, floor=config.zero_grid_floor)
    far = infinity_basis(params, profiles[d], r_max=config.far_r_max, tol=config.picard_tol,
                         step=config.far_step, ode_tol=config.ode_tol)
    residuals = basis_diagnostics(params, zero, far)['decoupled_residual']
    worst = max(residuals.values())
    return _result(8, 'decoupling', worst < DECOUPLED_LIMIT, worst, DECOUPLED_LIMIT, residual=residuals)


def check_determinism(config, profiles, output_dir):
    """The same scan written twice gives byte identical CSV files."""
    paths = []
    for run in ('run_a', 'run_b'):
        run_dir = output_dir / 'determinism' / run
        run_dir.mkdir(parents=True, exist_ok=True)
        run_scans([DETERMINISM_DEGREE], config, run_dir, refine=False)
        paths.append(run_dir / f'scan_d{d_label(DETERMINISM_DEGREE)}.csv')
    identical = filecmp.cmp(*paths, shallow=False)
    return _result(9, 'determinism', identical, float(identical), 1.0, files=[str(p) for p in paths])


CHECKS = [
    (1, 'profile fidelity', check_profiles, False),
    (2, 'exact mode oracle', check_exact_mode, False),
    (3, 'wronskian suite', check_wronskians, False),
    (4, 'lagrange identity and amplitude relation', check_lagrange, False),
    (5, 'connection scan', check_scans, True),
    (6, 'scalar analogues', check_scalar, False),
    (7, 'eigenvalue shadows', check_eigen, False),
    (8, 'decoupling', check_decoupling, False),
    (9, 'determinism', check_determinism, True),
]


def verify_pipeline(config=None, output_dir=None, only=None, workers=None, cache_dir=None):
    """
    Run the acceptance checks and write verify.csv and verify_report.json.

    only restricts the run to the given criterion numbers. Returns the report when
    every selected check passed, raises VerificationError naming the failed
    criteria otherwise, after the report files are written.
    """
    config, output_dir = prepare_run(config, output_dir=output_dir, workers=workers, cache_dir=cache_dir)
    selected = [check for check in CHECKS if only is None or check[0] in set(only)]
    degrees = sorted(set(PROFILE_DEGREES) | set(SCAN_DEGREES) | {d for d, _ in NEGATIVE_POINTS})
    profiles = {d: get_profile(d, config) for d in degrees}

    results = []
    for criterion, name, check, needs_dir in selected:
        log.info(f'Criterion {criterion}: {name}')
        try:
            if needs_dir:
                result = check(config, profiles, output_dir)
            else:
                result = check(config, profiles)
        except (GLVortexError, ValueError) as e:
            log.error(f'Criterion {criterion} raised {type(e).__name__}: {e}')
            result = {'criterion': criterion, 'name': name, 'passed': False, 'value': float('nan'),
                      'threshold': float('nan'), 'error': f'{type(e).__name__}: {e}', 'details': {}}
        log.info(f"Criterion {criterion} {'passed' if result['passed'] else 'FAILED'}")
        results.append(result)

    table = pd.DataFrame([{k: v for k, v in result.items() if k != 'details'} for result in results])
    write_table(table.reindex(columns=VERIFY_COLUMNS), output_dir / 'verify.csv')
    report = {'passed': bool(all(result['passed'] for result in results)), 'criteria': results}
    write_json(report, output_dir / 'verify_report.json')
    finish_run(output_dir, 'verify', config, criteria=[check[0] for check in selected])
    failed = [result['criterion'] for result in results if not result['passed']]
    if failed:
        raise VerificationError(f'Acceptance criteria failed: {failed}, see {output_dir / "verify_report.json"}',
                                failed=failed)
    return report
