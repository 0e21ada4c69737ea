import pytest

from glvortex.profile import build_profile, save_profile, profile_path

PROFILE_R_MAX = 30.0
PROFILE_TOL = 1e-10


@pytest.fixture(scope='session')
def profile_d1():
    return build_profile(1.0, r_max=PROFILE_R_MAX, tol=PROFILE_TOL)


@pytest.fixture(scope='session')
def profile_d2():
    return build_profile(2.0, r_max=PROFILE_R_MAX, tol=PROFILE_TOL)


@pytest.fixture(scope='session')
def profile_d15():
    return build_profile(1.5, r_max=PROFILE_R_MAX, tol=PROFILE_TOL)


@pytest.fixture(scope='session')
def profile_d3():
    return build_profile(3.0, r_max=PROFILE_R_MAX, tol=PROFILE_TOL)


@pytest.fixture
def cache_dir(tmp_path, monkeypatch, profile_d1):
    """Profile cache holding f_1, also set through the environment variable."""
    path = tmp_path / 'cache'
    save_profile(profile_d1, profile_path(path, 1.0))
    monkeypatch.setenv('GLVORTEX_CACHE_DIR', str(path))
    return path
