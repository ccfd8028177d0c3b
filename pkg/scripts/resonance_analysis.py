"""Forward resonances of the N=4 chain next to the avoided crossings of its spectrum.

    python scripts/resonance_analysis.py --interaction 5 --out runs/n4
"""

import argparse
import json
import os

import numpy as np

from tiltdiode.model import ModelParams
from tiltdiode.spectrum import domain_crossing_tilt, find_avoided_crossings, sweep_spectrum
from tiltdiode.sweep import SweepConfig, run_sweep
from tiltdiode.symmetry import cp_sectors


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--interaction", type=float, default=5.0)
    ap.add_argument("--step", type=float, default=0.05)
    ap.add_argument("--emax", type=float, default=16.0)
    ap.add_argument("--out", default="runs/n4")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    grid = tuple(np.round(np.arange(0.01, args.emax + 1e-9, args.step), 10))
    cfg = SweepConfig("lindblad", n_sites=(4,), interaction=(args.interaction,), tilt=grid)
    summary = run_sweep(cfg, os.path.join(args.out, "currents.csv"))
    (series,) = summary["series"]
    p = ModelParams(4, interaction=args.interaction)
    crossings = []
    for sec in cp_sectors(p):
        if sec.dim < 2:
            continue
        for c in find_avoided_crossings(sweep_spectrum(p, sec, grid)):
            crossings.append({"sector": sec.label, "bands": c.bands, "tilt": c.tilt, "gap": c.gap})
    report = {
        "resonances": series["resonances"],
        "max_rectification": series["max_rectification"],
        "max_rectification_tilt": series["max_rectification_tilt"],
        "avoided_crossings": crossings,
    }
    try:
        report["perturbative_crossing"] = domain_crossing_tilt(p)
    except ValueError as exc:
        report["perturbative_crossing"] = str(exc)
    with open(os.path.join(args.out, "resonances.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
