import json
import subprocess
import sys

from idacf.cli import main


def test_selftest_exit_zero(tmp_path, capsys):
    assert main(["selftest", "--out", str(tmp_path)]) == 0
    assert "PASS selftest" in capsys.readouterr().out
    assert (tmp_path / "summary.json").exists() and (tmp_path / "effective_config.ini").exists()


def test_missing_config_exit_one(tmp_path, capsys):
    assert main(["rate", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error: config:")


def test_unknown_override_exit_one(tmp_path):
    assert main(["rate", "--override", "bogus=1", "--out", str(tmp_path)]) == 1


def test_usage_error_exit_one():
    proc = subprocess.run([sys.executable, "-m", "idacf", "no-such-command"], capture_output=True, text=True)
    assert proc.returncode == 1 and proc.stderr.startswith("error: usage:")


def test_acceptance_failure_exit_two(tmp_path):
    # an impossible tolerance turns a normal run into an acceptance failure
    code = main(["selftest", "--override", "tolerances.identity=1e-30", "--out", str(tmp_path)])
    assert code == 2


def test_rate_summary_target(tmp_path):
    code = main(["rate", "--override", "alpha=1.5", "--override", "n_grid=2^6..9", "--override", "replicates=50",
                 "--override", "i_max=1000", "--out", str(tmp_path)])
    summary = json.loads((tmp_path / "summary.json").read_text())
    targets = [c["target"] for c in summary["checks"]]
    assert 1.1667 in targets
    assert code in (0, 2)
    assert (tmp_path / "plotdata" / "rate.csv").exists()
