import pytest

from config import OPERATIONAL_FIELDS, Settings, load_settings, resolve_workers


def test_repository_defaults():
    settings = load_settings()
    assert settings.master_seed == 20240101
    assert settings.svd_alpha == 0.05
    assert settings.svd_a == -1.0
    assert settings.log_levels is False


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv('UNITROOT_SEED', '99')
    monkeypatch.setenv('UNITROOT_FETCH_TIMEOUT', '2.5')
    settings = load_settings()
    assert settings.master_seed == 99
    assert settings.fetch_timeout == 2.5
    # conftest pins these two
    assert settings.df_null_reps == 10000
    assert settings.threads == 1


def test_yaml_file_and_keyword_precedence(tmp_path, caplog):
    path = tmp_path / 'custom.yaml'
    path.write_text('svd_alpha: 0.1\nlog_levels: "yes"\nprior_odds: 2\nbogus_key: 1\n')
    settings = load_settings(str(path), prior_odds=4.0, svd_a=None)
    assert settings.svd_alpha == 0.1
    assert settings.log_levels is True
    assert settings.prior_odds == 4.0
    assert settings.svd_a == -1.0
    assert 'bogus_key' in caplog.text


def test_missing_explicit_file_falls_back(tmp_path, caplog):
    settings = load_settings(str(tmp_path / 'nope.yaml'))
    assert settings.master_seed == 20240101
    assert 'not found' in caplog.text


def test_broken_yaml_is_logged(tmp_path, caplog):
    path = tmp_path / 'broken.yaml'
    path.write_text('svd_alpha: [0.1\n')
    assert load_settings(str(path)).svd_alpha == 0.05
    assert 'Error parsing YAML' in caplog.text


class TestFingerprint:
    def test_stable_and_hex(self):
        assert Settings().fingerprint() == Settings().fingerprint()
        assert len(Settings().fingerprint()) == 64

    def test_tracks_result_fields(self):
        base = Settings()
        assert base.with_overrides(master_seed=1).fingerprint() != base.fingerprint()
        assert base.with_overrides(svd_alpha=0.1).fingerprint() != base.fingerprint()

    @pytest.mark.parametrize('name, value', [('threads', 8), ('logs_dir', '/tmp/x'), ('cache_dir', 'c'),
                                             ('fetch_timeout', 1.0), ('database_url', 'sqlite://')])
    def test_ignores_operational_fields(self, name, value):
        assert name in OPERATIONAL_FIELDS
        assert Settings().with_overrides(**{name: value}).fingerprint() == Settings().fingerprint()


def test_database_url_defaults_into_cache_dir():
    assert Settings(cache_dir='/data/c').resolved_database_url == 'sqlite:////data/c/unitroot.db'
    assert Settings(database_url='postgresql://db/x').resolved_database_url == 'postgresql://db/x'


def test_resolve_workers(monkeypatch):
    monkeypatch.setattr('config.os.cpu_count', lambda: 6)
    assert resolve_workers(0) == 6
    assert resolve_workers(3) == 3
    with pytest.raises(ValueError):
        resolve_workers(-1)
