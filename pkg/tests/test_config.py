from pathlib import Path

import pytest

from app.core.config import Settings, load_run_config, parse_run_config
from app.core.errors import ConfigError


def test_defaults():
    config = parse_run_config("")
    assert config.s_primes == [2]
    assert config.profile == "default"
    assert config.x_grid == [1_000, 10_000, 100_000, 1_000_000]


def test_full_file():
    text = """
    # sweep over S = {2, 3}
    s_primes = 3, 2
    hecke_m.3 = 1
    profile = narrow
    x_grid = 1000,2000,4000
    precision = 40
    out_dir = /tmp/reports
    workers = 3
    """
    config = parse_run_config(text)
    assert config.s_primes == [2, 3]
    assert config.hecke_m == {3: 1}
    assert config.profile == "narrow"
    assert config.x_grid == [1000, 2000, 4000]
    assert config.precision == 40
    assert config.out_dir == Path("/tmp/reports")
    assert config.workers == 3


def test_overrides_win():
    config = parse_run_config("precision = 40\n", precision=12, workers=None)
    assert config.precision == 12


@pytest.mark.parametrize(
    "text",
    [
        "s_primes = 3,5",
        "x_grid = 100, 50",
        "x_grid = 1",
        "unknown = 1",
        "no equals sign",
        "s_primes = 2\nhecke_m.3 = 1",
        "hecke_m.2 = -1",
        "precision = many",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_run_config(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(tmp_path / "absent.cfg")
    assert load_run_config(None).s_primes == [2]


def test_settings_env_override(monkeypatch):
    monkeypatch.setenv("SWEEP_WORKERS", "7")
    monkeypatch.setenv("ENV", "debug")
    monkeypatch.setenv("MAX_PRIME", "97")
    settings = Settings()
    assert settings.sweep_workers == 7
    assert settings.max_prime == 97
    assert settings.debug
