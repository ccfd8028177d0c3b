"""Parameter sweeps over the solvers, with deterministic CSV and JSON output.

A sweep is described by a :class:`SweepConfig`, usually read from an INI
file (see ``configs/`` for annotated examples).  Rows are streamed to
``<out>.partial`` in grid order so an interrupted run can resume; the final
CSV is written once every point is done, together with ``<out>.json``
holding the summary (resonances, maximal rectification, fits, timings).
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import find_peaks
from scipy.stats import linregress

log = logging.getLogger(__name__)

__all__ = [
    "SOLVERS",
    "ConfigError",
    "LeadsConfig",
    "SweepConfig",
    "parse_grid",
    "load_config",
    "format_float",
    "fit_exponential",
    "FitResult",
    "normalize_current",
    "detect_resonances",
    "refine_maximum",
    "evaluate_point",
    "run_sweep",
]

SOLVERS = ("lindblad", "noninteracting", "ansatz", "mesoleads", "spectrum")
FIT_MODES = ("none", "size", "tilt")


class ConfigError(ValueError):
    """Invalid sweep configuration."""


def format_float(x) -> str:
    """17 significant digits, the CSV float format."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (stop included when hit) or a comma-separated list."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError(f"range step must be positive, got {step}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ConfigError(f"empty range {text!r}")
        return tuple(round(start + i * step, 12) for i in range(count))
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}: {exc}") from exc


@dataclass(frozen=True)
class LeadsConfig:
    energies: tuple = (-0.5, 0.5)
    damping: float = 1.0
    coupling: float = 0.25
    temperature: float = 10.0
    bias: float = 100.0


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: a solver and the grid of (N, Delta, E or V) points.

    Exactly one of ``tilt`` and ``rescaled_tilt`` (V = E N) is non-empty.
    """

    solver: str
    n_sites: tuple
    interaction: tuple = (0.0,)
    tilt: tuple = ()
    rescaled_tilt: tuple = ()
    driving: float = 1.0
    coupling: float = 1.0
    hopping: float = 1.0
    chem_potential: Optional[float] = None
    method: str = "auto"
    digits: int = 50
    populations: bool = False
    check_oracle: bool = False
    resonance_prominence: float = 0.1
    fit: str = "none"
    sector: str = "2e"
    leads: LeadsConfig = field(default_factory=LeadsConfig)

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not self.n_sites or any(int(n) != n or n < 2 for n in self.n_sites):
            raise ConfigError(f"n_sites must be a non-empty list of integers >= 2, got {self.n_sites}")
        if not self.interaction:
            raise ConfigError("interaction list is empty")
        if bool(self.tilt) == bool(self.rescaled_tilt):
            raise ConfigError("give exactly one non-empty grid: tilt or rescaled_tilt")
        grid = self.tilt or self.rescaled_tilt
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("tilt grid must be strictly ascending")
        if any(g < 0 for g in grid):
            raise ConfigError("tilt must be non-negative")
        if abs(self.driving) > 1:
            raise ConfigError(f"driving must lie in [-1, 1], got {self.driving}")
        if self.coupling <= 0:
            raise ConfigError(f"coupling must be positive, got {self.coupling}")
        if self.fit not in FIT_MODES:
            raise ConfigError(f"fit must be one of {FIT_MODES}, got {self.fit!r}")
        if self.digits < 32:
            raise ConfigError(f"digits must be at least 32, got {self.digits}")
        if self.resonance_prominence <= 0:
            raise ConfigError("resonance_prominence must be positive")

    def points(self) -> list[tuple]:
        """``(index, N, Delta, E, V)`` in deterministic order: N, then Delta, then grid."""
        out = []
        for n in self.n_sites:
            for d in self.interaction:
                if self.tilt:
                    for e in self.tilt:
                        out.append((n, d, e, None))
                else:
                    for v in self.rescaled_tilt:
                        out.append((n, d, v / n, v))
        return [(i, *p) for i, p in enumerate(out)]

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def _floats(text: str) -> tuple:
    return parse_grid(text) if text.strip() else ()


def load_config(path: str, **overrides) -> SweepConfig:
    """Read an INI sweep configuration; ``overrides`` replace parsed fields."""
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        s = cp["sweep"] if cp.has_section("sweep") else {}
        m = cp["model"] if cp.has_section("model") else {}
        g = cp["grid"] if cp.has_section("grid") else {}
        kw = {}
        if "solver" in s:
            kw["solver"] = s["solver"].strip()
        if "method" in s:
            kw["method"] = s["method"].strip()
        if "digits" in s:
            kw["digits"] = int(s["digits"])
        if "populations" in s:
            kw["populations"] = cp.getboolean("sweep", "populations")
        if "check_oracle" in s:
            kw["check_oracle"] = cp.getboolean("sweep", "check_oracle")
        if "resonance_prominence" in s:
            kw["resonance_prominence"] = float(s["resonance_prominence"])
        if "fit" in s:
            kw["fit"] = s["fit"].strip()
        if "sector" in s:
            kw["sector"] = s["sector"].strip()
        if "n_sites" in m:
            kw["n_sites"] = tuple(int(round(x)) for x in _floats(m["n_sites"]))
        if "interaction" in m:
            kw["interaction"] = _floats(m["interaction"])
        for key in ("driving", "coupling", "hopping"):
            if key in m:
                kw[key] = float(m[key])
        if "chem_potential" in m and m["chem_potential"].strip():
            kw["chem_potential"] = float(m["chem_potential"])
        if "tilt" in g:
            kw["tilt"] = _floats(g["tilt"])
        if "rescaled_tilt" in g:
            kw["rescaled_tilt"] = _floats(g["rescaled_tilt"])
        if cp.has_section("leads"):
            ld = cp["leads"]
            base = LeadsConfig()
            kw["leads"] = LeadsConfig(
                energies=_floats(ld.get("energies", "")) or base.energies,
                damping=float(ld.get("damping", base.damping)),
                coupling=float(ld.get("coupling", base.coupling)),
                temperature=float(ld.get("temperature", base.temperature)),
                bias=float(ld.get("bias", base.bias)),
            )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value in {path}: {exc}") from exc
    kw.update({k: v for k, v in overrides.items() if v is not None})
    if "solver" not in kw or "n_sites" not in kw:
        raise ConfigError("config needs [sweep] solver and [model] n_sites")
    return SweepConfig(**kw)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    stderr: float
    n_points: int


def fit_exponential(x: Sequence[float], y: Sequence[float]) -> FitResult:
    """Least squares of ``ln y`` against ``x``; ``y ~ exp(intercept + slope x)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y):
        raise ValueError("x and y differ in length")
    if len(x) < 3:
        raise ValueError(f"need at least 3 points, got {len(x)}")
    bad = np.nonzero(~(y > 0))[0]
    if len(bad):
        raise ValueError(f"non-positive value {y[bad[0]]} at x={x[bad[0]]}")
    ly = np.log(y)
    if np.ptp(ly) == 0:
        return FitResult(0.0, float(ly[0]), 0.0, len(x))
    res = linregress(x, ly)
    return FitResult(float(res.slope), float(res.intercept), float(res.stderr), len(x))


def normalize_current(current: float, coupling: float = 1.0, driving: float = 1.0) -> float:
    """Current in units of the untilted noninteracting value ``2 Gamma f / (Gamma^2 + 16)``."""
    if driving == 0:
        raise ValueError("normalisation undefined for zero driving")
    if coupling <= 0:
        raise ValueError("coupling must be positive")
    return current / (2 * coupling * driving / (coupling**2 + 16))


def detect_resonances(grid: Sequence[float], current: Sequence[float], prominence: float = 0.1):
    """Interior local maxima of ``log10 |J|`` whose prominence exceeds
    ``prominence`` decades; returns (indices, prominences)."""
    j = np.abs(np.asarray(current, dtype=float))
    ok = np.isfinite(j) & (j > 0)
    if ok.sum() < 3:
        return np.array([], dtype=int), np.array([])
    idx_ok = np.nonzero(ok)[0]
    peaks, props = find_peaks(np.log10(j[ok]), prominence=prominence)
    return idx_ok[peaks], props["prominences"]


def refine_maximum(fn, lo: float, hi: float, xtol: float = 1e-4) -> tuple[float, float]:
    """Bounded scalar maximisation of ``fn`` on ``[lo, hi]``; returns ``(x, fn(x))``.

    The bracket endpoints are evaluated as well, so a maximum sitting on the
    boundary is not missed.
    """
    res = minimize_scalar(lambda x: -fn(x), bounds=(lo, hi), method="bounded", options={"xatol": xtol})
    best = (float(res.x), float(-res.fun))
    for x in (lo, hi):
        v = float(fn(x))
        if v > best[1]:
            best = (float(x), v)
    return best


# ---------------------------------------------------------------- per point


def _model(cfg: SweepConfig, n, d, e):
    from .model import ModelParams

    return ModelParams(
        int(n), cfg.hopping, float(d), float(e), cfg.chem_potential, cfg.coupling, cfg.driving
    )


def _columns(cfg: SweepConfig) -> list[str]:
    base = ["point", "n_sites", "interaction", "tilt", "rescaled_tilt"]
    nmax = max(cfg.n_sites)
    pops = [f"n_{j}" for j in range(1, nmax + 1)] if cfg.populations else []
    if cfg.solver == "lindblad":
        cols = ["current_forward", "current_reverse", "rectification", "overflow",
                "current_normalized", "current_from_n1", "homogeneity", "impurity", "osee"]
        if cfg.check_oracle:
            cols.append("oracle_diff")
    elif cfg.solver == "noninteracting":
        cols = ["current", "current_normalized"]
    elif cfg.solver == "ansatz":
        cols = ["current", "log10_abs_current", "n_1"]
    elif cfg.solver == "mesoleads":
        cols = ["current_forward", "current_reverse", "rectification", "overflow"]
    else:
        from .symmetry import cp_sectors

        dims = []
        for n in cfg.n_sites:
            secs = {s.label: s for s in cp_sectors(_model(cfg, n, 0.0, 0.0))}
            if cfg.sector not in secs:
                raise ConfigError(f"unknown sector {cfg.sector!r} for N={n}; have {sorted(secs)}")
            dims.append(secs[cfg.sector].dim)
        return base + [f"e_{b}" for b in range(1, max(dims) + 1)] + ["error"]
    return base + cols + pops + ["resonance", "error"]


def evaluate_point(cfg: SweepConfig, point: tuple) -> tuple[dict, float]:
    """One grid point; solver failures land in the ``error`` column."""
    idx, n, d, e, v = point
    row = {"point": idx, "n_sites": n, "interaction": d, "tilt": e, "rescaled_tilt": v}
    t0 = time.perf_counter()
    try:
        row.update(_SOLVE[cfg.solver](cfg, n, d, e))
    except Exception as exc:  # noqa: BLE001 - recorded per row, the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row, time.perf_counter() - t0


def _solve_lindblad(cfg, n, d, e):
    from .lindblad import ness
    from .observables import observables, rectification_ratio

    p = _model(cfg, n, d, e)
    f = abs(cfg.driving) or 1.0
    pf, pr = p.replace(driving=f), p.replace(driving=-f)
    of = observables(ness(pf, cfg.method), pf)
    orv = observables(ness(pr, cfg.method), pr)
    r, flag = rectification_ratio(of.current, orv.current)
    out = {
        "current_forward": of.current,
        "current_reverse": orv.current,
        "rectification": r,
        "overflow": flag,
        "current_normalized": normalize_current(of.current, p.coupling, f),
        "current_from_n1": of.current_from_n1,
        "homogeneity": of.homogeneity,
        "impurity": of.impurity,
        "osee": of.osee,
    }
    if cfg.check_oracle and d == 0:
        from .noninteracting import solve_chain

        ref = solve_chain(int(n), float(e), p.coupling, f, p.hopping)
        out["oracle_diff"] = max(
            abs(ref.current - of.current), float(np.max(np.abs(ref.populations - of.populations)))
        )
    if cfg.populations:
        out.update({f"n_{j + 1}": x for j, x in enumerate(of.populations)})
    return out


def _solve_noninteracting(cfg, n, d, e):
    from .noninteracting import solve_chain

    if d != 0:
        raise ValueError("the noninteracting solver needs interaction = 0")
    c = solve_chain(int(n), float(e), cfg.coupling, cfg.driving, cfg.hopping)
    out = {"current": c.current}
    out["current_normalized"] = normalize_current(c.current, cfg.coupling, cfg.driving) if cfg.driving else 0.0
    if cfg.populations:
        out.update({f"n_{j + 1}": x for j, x in enumerate(c.populations)})
    return out


def _solve_ansatz(cfg, n, d, e):
    import mpmath as mp

    from .ansatz import ansatz_populations

    f = -1 if cfg.driving < 0 or d != 0 else 1
    pops = ansatz_populations(int(n), cfg.hopping, float(d), float(e), None, f, cfg.digits)
    with mp.workdps(cfg.digits):
        cur = mp.mpf(cfg.coupling) / 8 * (f + 1 - 2 * pops[0])
        out = {
            "current": mp.nstr(cur, cfg.digits),
            "log10_abs_current": float(mp.log10(abs(cur))) if cur != 0 else -math.inf,
            "n_1": mp.nstr(pops[0], cfg.digits),
        }
        if cfg.populations:
            out.update({f"n_{j + 1}": mp.nstr(x, cfg.digits) for j, x in enumerate(pops)})
    return out


def _solve_mesoleads(cfg, n, d, e):
    from .mesoleads import mesoleads_rectification, symmetric_leads

    lc = cfg.leads
    leads = symmetric_leads(lc.energies, lc.damping, lc.coupling, lc.temperature, lc.bias)
    method = "direct" if cfg.method == "auto" else cfg.method
    res = mesoleads_rectification(_model(cfg, n, d, 0.0), leads, [e], method)[0]
    return {
        "current_forward": res.forward,
        "current_reverse": res.reverse,
        "rectification": res.ratio,
        "overflow": res.overflow,
    }


def _solve_spectrum(cfg, n, d, e):
    from .symmetry import cp_sectors, sector_hamiltonian

    p = _model(cfg, n, d, e).replace(chem_potential=None)
    sec = {s.label: s for s in cp_sectors(p)}[cfg.sector]
    vals = np.linalg.eigvalsh(sector_hamiltonian(p, sec))
    return {f"e_{b + 1}": x for b, x in enumerate(vals)}


_SOLVE = {
    "lindblad": _solve_lindblad,
    "noninteracting": _solve_noninteracting,
    "ansatz": _solve_ansatz,
    "mesoleads": _solve_mesoleads,
    "spectrum": _solve_spectrum,
}


def _evaluate_star(args):
    return evaluate_point(*args)


# ---------------------------------------------------------------- output


def _format_row(row: dict, columns: list[str]) -> list[str]:
    return [format_float(row.get(c)) for c in columns]


def _series_key(row: dict):
    return (int(float(row["n_sites"])), float(row["interaction"]))


def _to_float(x) -> float:
    try:
        return float(x)
    except (TypeError, ValueError):
        return math.nan


def _summarize(cfg: SweepConfig, rows: list[dict], timings: dict) -> dict:
    series: dict = {}
    for row in rows:
        series.setdefault(_series_key(row), []).append(row)
    out_series = []
    grid_col = "tilt" if cfg.tilt else "rescaled_tilt"
    main = {
        "lindblad": "current_forward",
        "mesoleads": "current_forward",
        "noninteracting": "current",
        "ansatz": "current",
    }.get(cfg.solver)
    for (n, d), rs in sorted(series.items()):
        entry = {"n_sites": n, "interaction": d, "points": len(rs)}
        if main is not None:
            x = np.array([_to_float(r[grid_col]) for r in rs])
            y = np.array([_to_float(r.get(main)) for r in rs])
            idx, prom = detect_resonances(x, y, cfg.resonance_prominence)
            for r in rs:
                r["resonance"] = "" if r.get("error") else 0
            for i in idx:
                rs[i]["resonance"] = 1
            entry["resonances"] = [float(x[i]) for i in idx]
            entry["resonance_prominence_decades"] = [float(p) for p in prom]
            if "rectification" in rs[0] or cfg.solver in ("lindblad", "mesoleads"):
                rr = np.array([_to_float(r.get("rectification")) for r in rs])
                if np.any(np.isfinite(rr)):
                    k = int(np.nanargmax(rr))
                    entry["max_rectification"] = float(rr[k])
                    entry["max_rectification_tilt"] = float(_to_float(rs[k]["tilt"]))
                    entry["rectification_overflow"] = bool(
                        any(str(r.get("overflow")) in ("1", "True") for r in rs)
                    )
        out_series.append(entry)
    summary = {
        "solver": cfg.solver,
        "config": cfg.to_dict(),
        "config_digest": cfg.digest(),
        "points": len(rows),
        "errors": sum(1 for r in rows if r.get("error")),
        "series": out_series,
        "wall_time": timings,
    }
    if cfg.fit != "none" and main is not None:
        summary["fits"] = _fits(cfg, rows, main)
    return summary


def _fits(cfg, rows, main):
    fits = []
    if cfg.fit == "size":
        groups: dict = {}
        for r in rows:
            key = (float(r["interaction"]), _to_float(r["rescaled_tilt"] or r["tilt"]))
            groups.setdefault(key, []).append(r)
        for (d, g), rs in sorted(groups.items()):
            xs = [float(r["n_sites"]) for r in rs]
            ys = [abs(_to_float(r.get(main))) for r in rs]
            fits.append(_fit_entry({"interaction": d, "grid_value": g, "x": "n_sites"}, xs, ys))
    else:
        col = "rescaled_tilt" if cfg.rescaled_tilt else "tilt"
        groups = {}
        for r in rows:
            groups.setdefault(_series_key(r), []).append(r)
        for (n, d), rs in sorted(groups.items()):
            xs = [_to_float(r[col]) for r in rs]
            ys = [abs(_to_float(r.get(main))) for r in rs]
            fits.append(_fit_entry({"n_sites": n, "interaction": d, "x": col}, xs, ys))
    return fits


def _fit_entry(meta, xs, ys):
    try:
        res = fit_exponential(xs, ys)
        meta.update(slope=res.slope, intercept=res.intercept, stderr=res.stderr, n_points=res.n_points)
    except ValueError as exc:
        meta["error"] = str(exc)
    return meta


def _read_partial(path: str, columns: list[str], digest: str) -> dict:
    """Completed rows of an interrupted run keyed by point index."""
    if not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline().strip()
        if first != f"# config {digest}":
            log.warning("ignoring %s: written by a different configuration", path)
            return {}
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != columns:
            return {}
        done = {}
        for rec in reader:
            if len(rec) == len(columns):
                done[int(rec[0])] = dict(zip(columns, rec))
        return done


def run_sweep(cfg: SweepConfig, out: str, threads: int = 1) -> dict:
    """Evaluate every grid point, write ``out`` (CSV) and ``out``.json (summary)."""
    columns = _columns(cfg)
    points = cfg.points()
    partial = out + ".partial"
    digest = cfg.digest()
    done = _read_partial(partial, columns, digest)
    todo = [p for p in points if p[0] not in done]
    if done:
        log.info("resuming: %d of %d points already done", len(done), len(points))
    timings = {}
    mode = "a" if done else "w"
    with open(partial, mode, encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not done:
            fh.write(f"# config {digest}\n")
            writer.writerow(columns)
        if threads > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = pool.map(_evaluate_star, [(cfg, p) for p in todo])
                for p, (row, dt) in zip(todo, results):
                    _emit(writer, fh, row, columns, done, timings, dt)
        else:
            for p in todo:
                row, dt = evaluate_point(cfg, p)
                _emit(writer, fh, row, columns, done, timings, dt)
    rows = [done[p[0]] for p in points]
    summary = _summarize(cfg, rows, {str(k): v for k, v in sorted(timings.items())})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(_format_row(row, columns))
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    with open(out + ".json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    os.remove(partial)
    return summary


def _emit(writer, fh, row, columns, done, timings, dt):
    writer.writerow(_format_row(row, columns))
    fh.flush()
    done[row["point"]] = {c: format_float(row.get(c)) for c in columns}
    timings[row["point"]] = dt


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")
