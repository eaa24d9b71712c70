import pytest

from idacf.config import ExperimentConfig, load_config, parse_grid, resolve_key
from idacf.errors import ConfigurationError


def test_grid_parsing():
    assert parse_grid("2^10..12") == (1024, 2048, 4096)
    assert parse_grid("5, 10,20") == (5, 10, 20)
    with pytest.raises(ConfigurationError):
        parse_grid("a,b")


def test_kind_defaults():
    assert ExperimentConfig.for_kind("limit-law").replicates == 2000
    assert ExperimentConfig.for_kind("acorr").H == 4
    assert ExperimentConfig.for_kind("rate").n_grid == tuple(2 ** k for k in range(10, 18))


def test_key_resolution():
    assert resolve_key("alpha") == "levy.alpha"
    assert resolve_key("tolerances.slope") == "tolerances.slope"
    with pytest.raises(ConfigurationError):
        resolve_key("nope")


def test_file_then_overrides(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nkind = rate\nreplicates = 60\n[levy]\nalpha = 1.0\n[tolerances]\nslope = 0.2\n")
    cfg = load_config(path, ["alpha=1.2", "series.i_max=2000"])
    assert cfg.kind == "rate" and cfg.replicates == 60
    assert cfg.alpha == 1.2 and cfg.i_max == 2000 and cfg.tolerances["slope"] == 0.2


def test_unknown_key_in_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[levy]\nbeta = 0.3\n")
    with pytest.raises(ConfigurationError):
        load_config(path)


@pytest.mark.parametrize("override", ["replicates=10", "n_grid=8,4", "alpha=2.5", "H=-1", "p0=1.0",
                                      "noequals", "i_max=100"])
def test_invalid_values(override):
    with pytest.raises(ConfigurationError):
        load_config(None, [override], kind="acorr")


def test_missing_file():
    with pytest.raises(ConfigurationError):
        load_config("/nonexistent.ini")


def test_kind_mismatch(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nkind = rate\n")
    with pytest.raises(ConfigurationError):
        load_config(path, kind="dk")


def test_ini_echo_round_trip(tmp_path):
    cfg = load_config(None, ["alpha=1.25", "n_grid=2^8..10", "p0=1.5", "tolerances.rho=0.07"], kind="acorr")
    path = tmp_path / "echo.ini"
    path.write_text(cfg.to_ini())
    assert load_config(path) == cfg


def test_worker_cap(monkeypatch):
    cfg = load_config(None, ["workers=8"], kind="rate")
    monkeypatch.setenv("IDACF_MAX_WORKERS", "2")
    assert cfg.effective_workers() == 2
    monkeypatch.setenv("IDACF_MAX_WORKERS", "x")
    with pytest.raises(ConfigurationError):
        cfg.effective_workers()
