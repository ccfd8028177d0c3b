"""Dark-state ansatz against exact reverse-bias currents (Lindblad, N <= 8)
and its extended-precision continuation to longer chains.

    python scripts/ansatz_vs_exact.py --interaction 5 --exact-sites 8 --out runs/ansatz.csv
"""

import argparse
import csv

import mpmath as mp
import numpy as np

from tiltdiode.ansatz import ansatz_current
from tiltdiode.lindblad import ness
from tiltdiode.model import ModelParams
from tiltdiode.observables import observables
from tiltdiode.sweep import format_float


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--interaction", type=float, default=5.0)
    ap.add_argument("--exact-sites", type=int, default=6, help="largest N solved exactly")
    ap.add_argument("--max-sites", type=int, default=16)
    ap.add_argument("--digits", type=int, default=50)
    ap.add_argument("--out", default="ansatz.csv")
    args = ap.parse_args()
    tilts = np.arange(1.0, 10.5, 1.0)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_sites", "tilt", "ansatz_current", "exact_current", "log10_ratio"])
        for n in range(4, args.max_sites + 1, 2):
            for e in tilts:
                j = ansatz_current(n, 1.0, args.interaction, float(e), digits=args.digits)
                exact, ratio = None, None
                if n <= args.exact_sites:
                    p = ModelParams(n, interaction=args.interaction, tilt=float(e), driving=-1)
                    exact = observables(ness(p), p).current
                    ratio = float(mp.log10(j / exact))
                w.writerow([n, format_float(e), mp.nstr(j, args.digits), format_float(exact), format_float(ratio)])
                fh.flush()
                print(n, e, mp.nstr(j, 8), exact, ratio)


if __name__ == "__main__":
    main()
