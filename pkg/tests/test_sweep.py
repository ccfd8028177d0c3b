import csv
import json
import math
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiltdiode.sweep import (
    ConfigError,
    SweepConfig,
    detect_resonances,
    fit_exponential,
    format_float,
    load_config,
    normalize_current,
    parse_grid,
    refine_maximum,
    run_sweep,
)

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def test_parse_grid():
    assert parse_grid("0.01:0.21:0.05") == (0.01, 0.06, 0.11, 0.16, 0.21)
    assert parse_grid("1, 2.5,4") == (1.0, 2.5, 4.0)
    assert parse_grid("") == ()
    with pytest.raises(ConfigError):
        parse_grid("1:2")
    with pytest.raises(ConfigError):
        parse_grid("0:1:-0.1")


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(format_float(x)) == x


@pytest.mark.parametrize(
    "kw",
    [
        dict(solver="magic", n_sites=(4,), tilt=(1.0,)),
        dict(solver="lindblad", n_sites=(), tilt=(1.0,)),
        dict(solver="lindblad", n_sites=(4,)),
        dict(solver="lindblad", n_sites=(4,), tilt=(1.0,), rescaled_tilt=(4.0,)),
        dict(solver="lindblad", n_sites=(4,), tilt=(2.0, 1.0)),
        dict(solver="lindblad", n_sites=(4,), tilt=(1.0,), driving=2.0),
        dict(solver="ansatz", n_sites=(4,), tilt=(1.0,), digits=20),
        dict(solver="lindblad", n_sites=(4,), tilt=(1.0,), fit="cubic"),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        SweepConfig(**kw)


def test_points_are_in_grid_order_and_rescaled():
    cfg = SweepConfig("noninteracting", n_sites=(50, 100), rescaled_tilt=(5.0, 6.0))
    pts = cfg.points()
    assert [p[0] for p in pts] == [0, 1, 2, 3]
    assert pts[1] == (1, 50, 0.0, 6.0 / 50, 6.0)
    assert pts[2][1] == 100


def test_load_config_and_overrides(tmp_path):
    cfg = load_config(os.path.join(CONFIGS, "resonances_n4.ini"))
    assert cfg.solver == "lindblad" and cfg.n_sites == (4,) and len(cfg.tilt) == 320
    cfg = load_config(os.path.join(CONFIGS, "resonances_n4.ini"), tilt=(1.0, 2.0), digits=40)
    assert cfg.tilt == (1.0, 2.0) and cfg.digits == 40
    bad = tmp_path / "bad.ini"
    bad.write_text("[sweep]\nsolver = lindblad\n[model]\nn_sites = 4\n[grid]\ntilt = a,b\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.ini"))


def test_fit_exponential_exact_and_errors():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    res = fit_exponential(x, 3.0 * np.exp(-0.7 * x))
    assert res.slope == pytest.approx(-0.7) and res.intercept == pytest.approx(math.log(3.0))
    assert res.stderr == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError, match="at least 3"):
        fit_exponential([1, 2], [1, 2])
    with pytest.raises(ValueError, match="x=3"):
        fit_exponential([1, 2, 3], [1, 2, 0])


@given(st.floats(-3, 3), st.floats(-5, 5))
def test_fit_recovers_slope(slope, icpt):
    x = np.linspace(0, 4, 9)
    assert fit_exponential(x, np.exp(icpt + slope * x)).slope == pytest.approx(slope, abs=1e-9)


def test_normalize_current():
    assert normalize_current(2 / 17) == pytest.approx(1)
    assert normalize_current(2 * 2 * 0.5 / 20, 2.0, 0.5) == pytest.approx(1)
    with pytest.raises(ValueError):
        normalize_current(0.1, 1.0, 0.0)


def test_detect_resonances():
    x = np.linspace(0, 10, 201)
    y = 1e-3 * np.exp(-x) + 1e-2 * np.exp(-((x - 3) ** 2) / 0.01) + 1e-9
    y[100] *= 1.05  # a 0.02-decade wiggle is not a resonance
    idx, prom = detect_resonances(x, y)
    assert list(x[idx]) == [3.0]
    assert prom[0] > 1


def test_refine_maximum():
    x, v = refine_maximum(lambda t: -((t - 0.3) ** 2), 0.0, 1.0, 1e-8)
    assert x == pytest.approx(0.3, abs=1e-6)
    x, v = refine_maximum(lambda t: t, 0.0, 1.0)
    assert x == 1.0


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def test_sweep_is_deterministic_and_parallel_safe(tmp_path):
    cfg = SweepConfig("lindblad", n_sites=(3, 4), interaction=(0.0, 5.0), tilt=(0.5, 1.0, 2.15, 3.0),
                      check_oracle=True, populations=True)
    run_sweep(cfg, str(tmp_path / "a.csv"))
    run_sweep(cfg, str(tmp_path / "b.csv"), threads=2)
    assert _read(tmp_path / "a.csv") == _read(tmp_path / "b.csv")
    rows = list(csv.DictReader(open(tmp_path / "a.csv", encoding="utf-8")))
    assert len(rows) == 16
    for r in rows:
        assert r["error"] == ""
        if float(r["interaction"]) == 0:
            assert float(r["oracle_diff"]) < 1e-10
        else:
            assert r["oracle_diff"] == ""
    assert rows[0]["n_4"] == ""  # N=3 rows leave the fourth population empty
    summary = json.load(open(tmp_path / "a.csv.json"))
    assert summary["points"] == 16 and summary["errors"] == 0
    assert not os.path.exists(tmp_path / "a.csv.partial")


def test_sweep_resumes_missing_rows(tmp_path, monkeypatch):
    import tiltdiode.sweep as sw

    cfg = SweepConfig("noninteracting", n_sites=(6,), tilt=(0.1, 0.2, 0.3, 0.4))
    out = str(tmp_path / "r.csv")
    calls = []
    real = sw.evaluate_point

    class Crash(Exception):
        pass

    def flaky(c, p):
        calls.append(p[0])
        if p[0] == 2 and calls.count(2) == 1:
            raise Crash
        return real(c, p)

    monkeypatch.setattr(sw, "evaluate_point", flaky)
    with pytest.raises(Crash):
        run_sweep(cfg, out)
    assert os.path.exists(out + ".partial") and not os.path.exists(out)
    run_sweep(cfg, out)
    assert calls == [0, 1, 2, 2, 3]
    monkeypatch.undo()
    run_sweep(cfg, str(tmp_path / "fresh.csv"))
    assert _read(out) == _read(tmp_path / "fresh.csv")


def test_failures_land_in_error_column(tmp_path):
    cfg = SweepConfig("noninteracting", n_sites=(4, 60), tilt=(0.5,))
    summary = run_sweep(cfg, str(tmp_path / "e.csv"))
    rows = list(csv.DictReader(open(tmp_path / "e.csv", encoding="utf-8")))
    assert rows[0]["error"] == "" and "LinAlgError" in rows[1]["error"]
    assert summary["errors"] == 1


def test_summary_resonances_and_fits(tmp_path):
    cfg = SweepConfig("noninteracting", n_sites=(50, 75, 100), rescaled_tilt=(6.0,), fit="size")
    summary = run_sweep(cfg, str(tmp_path / "f.csv"))
    (fit,) = summary["fits"]
    assert -fit["slope"] == pytest.approx(0.23, abs=0.01)
    cfg = SweepConfig("ansatz", n_sites=(8,), interaction=(5.0,), tilt=(1.0, 2.0), driving=-1, digits=40)
    run_sweep(cfg, str(tmp_path / "g.csv"))
    row = next(csv.DictReader(open(tmp_path / "g.csv", encoding="utf-8")))
    assert len(row["current"].lstrip("-").replace("0.", "", 1)) > 30
