import json
import os
import subprocess
import sys

import pytest

from tiltdiode.cli import main

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def test_ness_json(capsys):
    assert main(["ness", "--n-sites", "4", "--tilt", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["current"] == pytest.approx(2 / 17, abs=1e-10)


def test_sweep_and_fit(tmp_path, capsys):
    out = str(tmp_path / "s.csv")
    cfg = os.path.join(CONFIGS, "insulator_scaling.ini")
    assert main(["sweep", "--config", cfg, "--out", out]) == 0
    capsys.readouterr()
    assert main(["fit", out, "--x", "n_sites", "--y", "current"]) == 0
    res = json.loads(capsys.readouterr().out)
    assert -float(res["slope"]) == pytest.approx(0.231, abs=0.01)


def test_subcommand_fixes_solver(tmp_path):
    out = str(tmp_path / "sp.csv")
    assert main(["spectrum", "--n-sites", "4", "--interaction", "5", "--tilt", "1", "2", "--out", out]) == 0
    with open(out, encoding="utf-8") as fh:
        assert fh.readline().startswith("point,n_sites,interaction,tilt,rescaled_tilt,e_1")


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--solver", "bogus", "--n-sites", "4", "--tilt", "1", "--out", "x.csv"],
        ["noninteracting", "--n-sites", "4", "--tilt", "2", "1", "--out", "x.csv"],
        ["noninteracting", "--n-sites", "4", "--tilt", "1"],
        ["sweep", "--config", "/nonexistent.ini", "--out", "x.csv"],
        ["ness", "--n-sites", "4", "--driving", "3"],
    ],
)
def test_config_errors_exit_1(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == 1


def test_solver_failure_exits_2(tmp_path):
    argv = ["noninteracting", "--n-sites", "60", "--tilt", "0.5", "--out", str(tmp_path / "f.csv")]
    assert main(argv) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "tiltdiode", "ness", "--n-sites", "3", "--interaction", "1", "--tilt", "1"],
        capture_output=True, text=True, check=False,
    )
    assert r.returncode == 0 and "osee" in r.stdout
