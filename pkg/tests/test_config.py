import pytest

from glvortex.config import RunConfig, print_default_config
from glvortex.utilities import get_configuration, parse_float_list


def test_defaults_from_package_ini():
    config = RunConfig.from_sources()
    assert config.d_values == (1.0, 2.0, 3.0)
    assert config.epsilons == (0.1, 0.05, 0.025)
    assert config.profile_tol == 1e-10
    assert config.workers == 1
    assert config.plot is False
    assert config.cache_format == 'csv'


def test_flags_win_over_file_over_defaults(tmp_path):
    user_ini = tmp_path / 'user.ini'
    user_ini.write_text('[run]\nworkers = 2\nseed = 7\n\n[sweep]\nd_values = 1 1.5\n')
    config = RunConfig.from_sources(user_ini, workers=4, seed=None)
    assert config.workers == 4
    assert config.seed == 7
    assert config.d_values == (1.0, 1.5)
    assert config.r_max == 30.0


def test_unknown_key_in_user_file(tmp_path):
    user_ini = tmp_path / 'user.ini'
    user_ini.write_text('[run]\nthreads = 2\n')
    with pytest.raises(ValueError, match='threads'):
        RunConfig.from_sources(user_ini)


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        RunConfig.from_sources(tmp_path / 'missing.ini')


@pytest.mark.parametrize('override', [{'workers': 0}, {'picard_tol': 0}, {'eigen_tol': -1e-10},
                                      {'n_min': 1.2, 'n_max': 1.1}, {'epsilons': ''}, {'cache_format': 'hdf'}])
def test_invalid_values(override):
    with pytest.raises(ValueError):
        RunConfig.from_sources(**override)


def test_cache_dir_environment_variable(tmp_path, monkeypatch):
    monkeypatch.setenv('GLVORTEX_CACHE_DIR', str(tmp_path / 'env_cache'))
    config = RunConfig.from_sources(cache_dir=str(tmp_path / 'flag_cache'))
    assert config.resolved_cache_dir() == tmp_path / 'env_cache'
    assert (tmp_path / 'env_cache').is_dir()


def test_n_values_include_both_ends():
    config = RunConfig.from_sources()
    values = config.n_values()
    assert len(values) == 11
    assert values[0] == pytest.approx(0.9)
    assert values[-1] == pytest.approx(1.1)


def test_to_dict_round_trip():
    config = RunConfig.from_sources(workers=3)
    assert RunConfig.from_dict(config.to_dict()) == config


def test_get_configuration_flattens_sections(tmp_path):
    path = tmp_path / 'x.ini'
    path.write_text('[a]\nk1 = 1\n\n[b]\nk2 = two\n')
    assert get_configuration(path) == {'k1': '1', 'k2': 'two'}


def test_parse_float_list():
    assert parse_float_list('0.1 0.05') == [0.1, 0.05]
    assert parse_float_list((1, 2)) == [1.0, 2.0]


def test_print_default_config(capsys):
    print_default_config()
    out = capsys.readouterr().out
    assert '[tolerance]' in out
    assert 'picard_tol' in out
