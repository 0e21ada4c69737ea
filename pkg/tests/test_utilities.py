import json

import numpy as np
import pandas as pd
import pytest

from glvortex.config import RunConfig
from glvortex.errors import GLVortexError, IntegrationError, IllConditionedError
from glvortex.utilities import (run_parallel, write_table, read_table, write_json, write_manifest,
                                write_error_report)


def _square(x):
    return {'x': x, 'y': x * x}


def _fragile(x):
    if x == 2:
        raise IntegrationError('step size underflow', radius=1.5)
    return {'x': x, 'y': -x}


def test_run_parallel_keeps_job_order():
    jobs = [dict(x=x) for x in range(6)]
    serial = run_parallel(_square, jobs, workers=1)
    pooled = run_parallel(_square, jobs, workers=2)
    assert serial == pooled
    assert [row['y'] for row in serial] == [0, 1, 4, 9, 16, 25]


def test_run_parallel_records_failures_with_key():
    rows = run_parallel(_fragile, [dict(x=x) for x in range(4)], workers=1, key='x')
    assert rows[2] == {'x': 2, 'error': 'IntegrationError: step size underflow (reached r=1.5)'}
    assert rows[3]['y'] == -3


def test_run_parallel_raises_without_key():
    with pytest.raises(IntegrationError):
        run_parallel(_fragile, [dict(x=2)], workers=1)


def test_errors_share_a_base_class():
    error = IllConditionedError('bad', condition=1e12)
    assert isinstance(error, GLVortexError)
    assert isinstance(error, RuntimeError)
    assert error.condition == 1e12
    assert IntegrationError('x', radius=3.0).radius == 3.0


def test_write_table_17_digits(tmp_path):
    value = 0.1 + 0.2
    data = pd.DataFrame({'a': [value, np.pi], 'b': ['x', '']})
    path = write_table(data, tmp_path / 'sub' / 't.csv', comments=['first', 'second'])
    text = path.read_text()
    assert text.startswith('# first\n# second\n')
    assert '0.30000000000000004' in text
    loaded, comments = read_table(path)
    assert comments == ['first', 'second']
    assert loaded['a'].tolist() == [value, np.pi]


def test_read_table_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_table(tmp_path / 'nothing.csv')


def test_write_json_sorted_and_numpy(tmp_path):
    path = write_json({'b': np.float64(1.5), 'a': np.arange(3)}, tmp_path / 'x.json')
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {'a': [0, 1, 2], 'b': 1.5}


def test_manifest_and_error_report(tmp_path):
    config = RunConfig.from_sources(seed=3)
    write_manifest(tmp_path, 'scan', config, degrees=[1.0])
    manifest = json.loads((tmp_path / 'manifest.json').read_text())
    assert manifest['command'] == 'scan'
    assert manifest['seed'] == 3
    assert manifest['config']['picard_tol'] == config.picard_tol
    assert manifest['degrees'] == [1.0]
    assert set(manifest['versions']) == {'glvortex', 'python', 'numpy', 'scipy', 'pandas'}

    write_error_report(tmp_path, 'connect', IllConditionedError('condition 1e9', condition=1e9))
    report = json.loads((tmp_path / 'error.json').read_text())
    assert report == {'command': 'connect', 'error': 'IllConditionedError', 'message': 'condition 1e9'}
