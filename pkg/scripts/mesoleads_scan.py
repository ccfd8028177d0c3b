"""Forward/reverse currents of the N=4, Delta=5 chain driven through two-mode leads.

Sweeps the forward current on a tilt grid, detects its resonances, and
maximises the rectification ratio around each one.  Writes a CSV of the
forward sweep and a JSON summary.

    python scripts/mesoleads_scan.py --out runs/mesoleads.csv
"""

import argparse
import csv
import json
import logging
import time

import numpy as np

from tiltdiode.mesoleads import (
    build_extended_model,
    mesoleads_ness,
    mesoleads_rectification,
    reference_current,
    symmetric_leads,
)
from tiltdiode.model import ModelParams
from tiltdiode.sweep import detect_resonances, format_float, refine_maximum

log = logging.getLogger("mesoleads_scan")


def forward_current(system, leads, tilt):
    p = system.replace(tilt=float(tilt), chem_potential=None)
    return float(np.mean(mesoleads_ness(build_extended_model(p, leads))[1]))


def scan(n_sites=4, interaction=5.0, grid=None, coupling=0.25, window=0.1, xtol=1e-3):
    grid = np.round(np.arange(0.1, 12.0 + 1e-9, 0.1), 10) if grid is None else np.asarray(grid)
    leads = symmetric_leads(coupling=coupling)
    system = ModelParams(n_sites, interaction=interaction)
    forward = []
    for e in grid:
        t0 = time.perf_counter()
        forward.append(forward_current(system, leads, e))
        log.info("E=%.3f J_F=%.6e (%.1fs)", e, forward[-1], time.perf_counter() - t0)
    forward = np.array(forward)
    idx, prom = detect_resonances(grid, forward)
    peaks = []
    for i in idx:
        lo, hi = max(grid[0], grid[i] - window), min(grid[-1], grid[i] + window)

        def ratio(e):
            return mesoleads_rectification(system, leads, [e])[0].ratio

        e_star, r_star = refine_maximum(ratio, lo, hi, xtol)
        res = mesoleads_rectification(system, leads, [e_star])[0]
        peaks.append(
            dict(grid_tilt=float(grid[i]), forward=float(forward[i]), tilt=e_star,
                 ratio=r_star, reverse=res.reverse)
        )
        log.info("peak near %.2f: max R=%.3f at E=%.4f", grid[i], r_star, e_star)
    return dict(
        grid=grid.tolist(),
        forward=forward.tolist(),
        resonances=[float(grid[i]) for i in idx],
        prominence_decades=[float(p) for p in prom],
        peaks=peaks,
        peak_ratio=max((p["ratio"] for p in peaks), default=float("nan")),
        reference_current=reference_current(leads),
        coupling=coupling,
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--step", type=float, default=0.1)
    ap.add_argument("--emax", type=float, default=12.0)
    ap.add_argument("--coupling", type=float, default=0.25)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    grid = np.round(np.arange(args.step, args.emax + 1e-9, args.step), 10)
    res = scan(grid=grid, coupling=args.coupling)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tilt", "current_forward", "current_forward_normalized"])
        for e, j in zip(res["grid"], res["forward"]):
            w.writerow([format_float(e), format_float(j), format_float(j / res["reference_current"])])
    with open(args.out + ".json", "w", encoding="utf-8") as fh:
        json.dump({k: v for k, v in res.items() if k not in ("grid", "forward")}, fh, indent=2)
    print(json.dumps({k: res[k] for k in ("resonances", "peak_ratio")}))


if __name__ == "__main__":
    main()
