import json
import pathlib
import sys

import numpy as np
import pytest

from glvortex.__main__ import main
from glvortex.connection import ScanRoot
from glvortex.errors import VerificationError
from glvortex.pipelines import verify
from glvortex.pipelines.verify import verify_pipeline, log_decay_exponent, root_evidence
from glvortex.profile import save_profile, profile_path


@pytest.fixture(scope='module')
def verify_cache(tmp_path_factory, profile_d1, profile_d15, profile_d2, profile_d3):
    """Profile cache holding every degree the checks use."""
    path = tmp_path_factory.mktemp('verify_cache')
    for profile in (profile_d1, profile_d15, profile_d2, profile_d3):
        save_profile(profile, profile_path(path, profile.d))
    return path


def run_criterion(criterion, output_dir, cache):
    """Run one criterion; returns its result and the failed list (empty when it passed)."""
    failed = []
    try:
        verify_pipeline(output_dir=output_dir, only=[criterion], cache_dir=str(cache))
    except VerificationError as e:
        failed = e.failed
    report = json.loads((output_dir / 'verify_report.json').read_text())
    assert [result['criterion'] for result in report['criteria']] == [criterion]
    result = report['criteria'][0]
    assert report['passed'] == result['passed']
    assert (output_dir / 'verify.csv').exists()
    return result, failed


@pytest.mark.parametrize('criterion', [1, 2, 3, 4, 6, 8])
def test_criterion_passes(criterion, tmp_path, verify_cache):
    result, failed = run_criterion(criterion, tmp_path, verify_cache)
    assert result['error'] == ''
    assert result['passed'], result['details']
    assert failed == []


def test_profile_fidelity_details(tmp_path, verify_cache):
    result, _ = run_criterion(1, tmp_path, verify_cache)
    details = result['details']
    assert set(details['residual']) == {'1', '1.5', '2', '3'}
    assert max(details['residual'].values()) < 1e-8
    assert all(abs(p - 2) <= 0.3 for p in details['tail_exponent'].values())
    assert max(details['series_coefficient_error'].values()) < 0.01


def test_wronskian_details(tmp_path, verify_cache):
    result, _ = run_criterion(3, tmp_path, verify_cache)
    points = result['details']['points']
    assert set(points) == {'d=1.0,n=1.2', 'd=2.0,n=1.5'}
    for point in points.values():
        assert point['zero_spread'] < 1e-8
        assert point['far_spread'] < 1e-8


@pytest.mark.slow
def test_connection_scan_reports_extra_roots(tmp_path, verify_cache):
    result, failed = run_criterion(5, tmp_path, verify_cache)
    assert not result['passed']
    assert failed == [5]
    degrees = result['details']['degrees']
    assert all(degrees[label]['root_at_one'] for label in ('1', '2', '3'))
    assert degrees['1']['extra_roots'] == []
    # bounded solutions of the d = 2 and d = 3 systems below n = 2d - 1
    for label, expected in (('2', 2.731), ('3', 4.568)):
        extra = degrees[label]['extra_roots']
        near = [root for root in extra if abs(root['n'] - expected) < 0.01]
        assert len(near) == 1
        assert near[0]['confirmed']
        low, high = near[0]['determinant']
        assert low * high < 0


@pytest.mark.slow
def test_eigenvalue_shadows(tmp_path, verify_cache):
    result, failed = run_criterion(7, tmp_path, verify_cache)
    assert result['passed'], result['details']
    assert failed == []
    m0 = result['details']['m0']
    for label, (p_lo, p_hi) in (('1', (1.8, 2.4)), ('2', (2.4, 3.2))):
        entry = m0[label]
        quotient = entry['quotient']
        # (m0 - 1) / eps^2 grows as eps decreases while m0 - 1 decays like a power of log(1 / eps)
        assert quotient[0] < quotient[1] < quotient[2]
        assert not entry['factor_two_stable']
        assert p_lo < entry['log_decay_exponent'] < p_hi
        assert entry['local_distance'][-1] < entry['local_distance'][0]
    assert result['details']['sign_structure']


@pytest.mark.slow
def test_determinism(tmp_path, verify_cache):
    result, failed = run_criterion(9, tmp_path, verify_cache)
    assert result['passed']
    assert failed == []
    first, second = result['details']['files']
    assert pathlib.Path(first).read_bytes() == pathlib.Path(second).read_bytes()


def test_log_decay_exponent():
    epsilons = np.array([0.1, 0.05, 0.025])
    m = 1 + 3.0 * np.log(1 / epsilons) ** -2.5
    assert log_decay_exponent(epsilons, m) == pytest.approx(2.5)
    assert np.isnan(log_decay_exponent([0.1], [1.5]))
    assert np.isnan(log_decay_exponent(epsilons, [1.5, 1.2, 0.9]))


def test_root_evidence_across_a_sign_change(profile_d2, verify_cache):
    config = verify.prepare_run(output_dir=str(verify_cache / 'evidence'), cache_dir=str(verify_cache))[0]
    root = ScanRoot(n=2.731, kind='sign_change', C3_normalized=0.0, dC3_dn=float('nan'),
                    dC3_dn_left=float('nan'), dC3_dn_right=float('nan'), bracket=(2.6, 2.8))
    evidence = root_evidence(root, 2.0, profile_d2, config)
    assert evidence['bracket'] == [2.6, 2.8]
    assert evidence['confirmed']


def test_failed_criterion_exits_with_error_report(monkeypatch, tmp_path, verify_cache):
    def failing(config, profiles):
        return verify._result(1, 'profile fidelity', False, 1.0, 1e-8)

    monkeypatch.setattr(verify, 'CHECKS', [(1, 'profile fidelity', failing, False)])
    out = tmp_path / 'verify'
    monkeypatch.setattr(sys, 'argv', ['glv', 'verify', '--only', '1', '--output_dir', str(out),
                                      '--cache_dir', str(verify_cache)])
    with pytest.raises(SystemExit) as excinfo:
        main()
    assert excinfo.value.code == 1
    error = json.loads((out / 'error.json').read_text())
    assert error['command'] == 'verify'
    assert error['error'] == 'VerificationError'
    assert '[1]' in error['message']
    report = json.loads((out / 'verify_report.json').read_text())
    assert not report['passed']
