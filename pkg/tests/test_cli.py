import csv
import os
import subprocess
import sys

import pytest

from dilute_bose.cli import RunConfig, UsageError, config_from_args, main


def _rows(path):
    return list(csv.reader(open(path)))


def test_defaults_are_valid():
    cfg = RunConfig().validate()
    assert cfg.command == "verify" and cfg.alpha_source == "full"


def test_config_round_trip():
    cfg = RunConfig(command="free-energy", rho=(1e-5, 2e-5), temp_ratio=(0.0, 0.5), seed=3, c_eps=1.5,
                    out="x.csv")
    back = RunConfig.from_text(cfg.to_text())
    assert back == cfg


def test_config_errors():
    with pytest.raises(UsageError, match="unknown key"):
        RunConfig.from_text("bogus = 1")
    with pytest.raises(UsageError, match="key = value"):
        RunConfig.from_text("rho 1e-4")
    with pytest.raises(UsageError):
        RunConfig.from_text("seed = 1.5")
    with pytest.raises(UsageError):
        RunConfig.from_text("rho = a,b")


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nrho = 1e-5\ntemp-ratio = 0.5\nseed = 7\n")
    cfg = config_from_args(["free-energy", "--config", str(path), "--seed", "2"])
    assert cfg.rho == (1e-5,) and cfg.temp_ratio == (0.5,) and cfg.seed == 2
    assert cfg.command == "free-energy"


@pytest.mark.parametrize("argv", [
    ["free-energy", "--rho", "-1"],
    ["free-energy", "--potential", "hard-core:R=1"],
    ["scattering", "--cap-factor", "0.5"],
    ["verify", "--config", "/nonexistent/run.cfg"],
    ["nonsense"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_free_energy_csv(tmp_path, capsys):
    out = tmp_path / "f.csv"
    code = main(["free-energy", "--rho", "1e-6,1e-5", "--temp-ratio", "0,1", "--out", str(out)])
    assert code == 0
    rows = _rows(out)
    assert rows[0] == ["rho", "T", "leading", "lhy", "thermal", "total"]
    assert len(rows) == 5
    assert float(rows[1][4]) == 0.0 and float(rows[2][4]) < 0


def test_scattering_command(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert main(["scattering", "--gamma", "1.2857142857142858", "--epsilon", "0.05", "--N", "50,150,450", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0][:3] == ["N", "kappa", "a_N"]
    assert len(rows) == 4
    errs = [float(r[4]) for r in rows[1:]]
    assert errs[0] > errs[1] > errs[2]
    assert "slope" in capsys.readouterr().out


def test_localize_command(tmp_path, capsys):
    out = tmp_path / "l.csv"
    assert main(["localize", "--out", str(out)]) == 0
    assert all(r[3] == "1" for r in _rows(out)[1:])


def test_fock_demo_dumps(tmp_path, capsys):
    d = tmp_path / "ops"
    assert main(["fock-demo", "--dump-ops", str(d)]) == 0
    assert (d / "T_c.txt").exists()
    assert "PASS" in capsys.readouterr().out


def test_verify_subprocess(tmp_path):
    out = tmp_path / "v.csv"
    r = subprocess.run([sys.executable, "-m", "dilute_bose", "verify", "--out", str(out)],
                       capture_output=True, text=True, timeout=300)
    assert r.returncode == 0, r.stdout + r.stderr
    rows = _rows(out)
    assert rows[0] == ["check", "value", "tol", "passed"]
    assert all(row[3] == "1" for row in rows[1:])
    assert "FAIL" not in r.stdout


def test_unwritable_output(capsys):
    assert main(["localize", "--out", "/nonexistent/dir/x.csv"]) == 2
