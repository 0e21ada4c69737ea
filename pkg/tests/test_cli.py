import json
import sys

import pandas as pd
import pytest

from glvortex.__main__ import main
from glvortex.connection import SCAN_COLUMNS
from glvortex.plot import emit_plotdata, PLOT_FILES
from glvortex.profile import save_profile
from glvortex.utilities import write_table, read_table


def run_glv(monkeypatch, *args):
    monkeypatch.setattr(sys, 'argv', ['glv', *args])
    return main()


def test_default_config(monkeypatch, capsys):
    run_glv(monkeypatch, 'default-config')
    out = capsys.readouterr().out
    assert '[tolerance]' in out
    assert 'picard_tol' in out


def test_profile_command(monkeypatch, tmp_path, cache_dir):
    out = tmp_path / 'profiles'
    run_glv(monkeypatch, 'profile', '--d', '1', '--output_dir', str(out))
    for name in ('profile_d1.csv', 'profile_summary.csv', 'profile_summary.json', 'manifest.json'):
        assert (out / name).exists()
    manifest = json.loads((out / 'manifest.json').read_text())
    assert manifest['command'] == 'profile'
    assert manifest['degrees'] == [1.0]
    assert manifest['config']['output_dir'] == str(out)
    assert 'numpy' in manifest['versions']
    summary, _ = read_table(out / 'profile_summary.csv')
    assert summary['residual'].iloc[0] < 1e-8


def test_failing_command_writes_error_report(monkeypatch, tmp_path, cache_dir):
    out = tmp_path / 'basis'
    with pytest.raises(SystemExit) as excinfo:
        run_glv(monkeypatch, 'basis', '--d', '1', '--gamma1', '0', '--gamma2', '5', '--output-dir', str(out))
    assert excinfo.value.code == 1
    report = json.loads((out / 'error.json').read_text())
    assert report == {'command': 'basis', 'error': 'ValueError', 'message': report['message']}
    assert 'domain D' in report['message']


def _fake_scan(path):
    data = pd.DataFrame({'d': 1.0, 'n': [0.9, 1.0, 1.1], 'C1': 1.0, 'C2': 1.0, 'C3': [0.2, 0.0, -0.2],
                         'C4': 1.0, 'C3_normalized': [0.1, 0.0, -0.1], 'condition': 10.0, 'residual': 1e-14,
                         'match_radius': 8.0, 'error': ['', '', 'IntegrationError: overflow']})
    return write_table(data.reindex(columns=SCAN_COLUMNS), path)


def test_emit_plotdata(tmp_path, profile_d1):
    _fake_scan(tmp_path / 'scan_d1.csv')
    save_profile(profile_d1, tmp_path / 'profile_d1.csv')
    written = emit_plotdata(tmp_path, svg=True)
    names = {path.name for path in written}
    assert names == {PLOT_FILES['C3'], PLOT_FILES['profile'], 'plot_C3.svg', 'plot_profile.svg'}
    c3, _ = read_table(tmp_path / PLOT_FILES['C3'])
    # the failed point is dropped
    assert c3['n'].tolist() == [0.9, 1.0]
    profile, _ = read_table(tmp_path / PLOT_FILES['profile'])
    assert profile['r'].max() <= 10
    assert set(profile['d']) == {1.0}


def test_plot_command(monkeypatch, tmp_path):
    _fake_scan(tmp_path / 'scan_d1.csv')
    out = tmp_path / 'plots'
    out.mkdir()
    run_glv(monkeypatch, 'plot', '--input_dir', str(tmp_path), '--output_dir', str(out))
    assert (out / PLOT_FILES['C3']).exists()
    assert not (out / 'plot_C3.svg').exists()


def test_plot_without_inputs(monkeypatch, tmp_path):
    with pytest.raises(FileNotFoundError):
        emit_plotdata(tmp_path)
    with pytest.raises(SystemExit):
        run_glv(monkeypatch, 'plot', '--input_dir', str(tmp_path))
