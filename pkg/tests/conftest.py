"""
Shared fixtures. Every test gets its own logs directory, cache directory and
SQLite database under tmp_path; DF null tables use the minimum replication
count unless a test asks for more.
"""

import logging
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent

# Add src to path for imports
sys.path.insert(0, str(ROOT / 'src'))

import logger_config  # noqa: E402
from ar1_core import TimeSeries, simulate_ar1  # noqa: E402

UNITROOT_LOGGERS = ('unitroot', 'unitroot.experiment', 'unitroot.data', 'unitroot.error')


def _reset_logging():
    for name in UNITROOT_LOGGERS:
        lg = logging.getLogger(name)
        for handler in list(lg.handlers):
            handler.close()
            lg.removeHandler(handler)
        lg.propagate = True
    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, '_unitroot_console', False):
            root.removeHandler(handler)
    logger_config._unitroot_logger = None


@pytest.fixture(autouse=True)
def isolated_env(tmp_path, monkeypatch):
    monkeypatch.setenv('UNITROOT_LOGS_DIR', str(tmp_path / 'logs'))
    monkeypatch.setenv('UNITROOT_CACHE_DIR', str(tmp_path / 'cache'))
    monkeypatch.setenv('UNITROOT_DF_REPS', '10000')
    monkeypatch.setenv('UNITROOT_THREADS', '1')
    monkeypatch.delenv('UNITROOT_DATABASE_URL', raising=False)
    monkeypatch.delenv('UNITROOT_CONFIG', raising=False)
    _reset_logging()
    yield tmp_path
    _reset_logging()


@pytest.fixture
def database_url(tmp_path):
    return f"sqlite:///{tmp_path / 'cache' / 'unitroot.db'}"


@pytest.fixture
def rer_path():
    return ROOT / 'data' / 'rer_2010_2020.csv'


@pytest.fixture
def random_walk_path():
    return ROOT / 'data' / 'random_walk_T200.csv'


@pytest.fixture
def random_walk():
    return simulate_ar1(1.0, 200, seed=7)


@pytest.fixture
def stationary():
    return simulate_ar1(0.5, 200, seed=11)


@pytest.fixture
def white_noise():
    return simulate_ar1(0.0, 200, seed=5)


@pytest.fixture
def short_series():
    return TimeSeries(0.3, [1.0, 0.2, -0.4, 0.9, 0.1, -0.7, 0.5, 0.8, -0.2, 0.4])
