"""Evolve the grayscale gamma = 3 model to stationarity and print the checkpoint table.

    python scripts/stationary_slope.py out/stationary [--threads 8]

Also prints local slopes over octave-wide windows of the final spectrum, which shows
where along the frequency axis the log-log curve is steepest.
"""

import argparse
from pathlib import Path

import numpy as np

from scaleinv import csvio, spectral
from scaleinv.cli import main

CONFIG = Path(__file__).parent / "configs" / "stationary_gamma3.txt"


def run(args):
    out = Path(args.out)
    if main(["simulate", "--config", str(CONFIG), "--threads", str(args.threads), "--out", str(out)]):
        raise SystemExit(1)
    header, rows = csvio.read_rows(out / "convergence.csv")
    print(" ".join(f"{h:>12}" for h in header))
    for r in rows:
        print(" ".join(f"{float(v):>12.5g}" for v in r))
    _, summary = csvio.read_rows(out / "summary.csv")
    print("converged:", summary[0][2])
    spec = csvio.read_spectrum1d(out / "spectrum1d.csv", 128)
    print("local slopes:")
    for lo in (2, 4, 8, 16, 32):
        fit = spectral.fit_slope(spec, lo, 2 * lo)
        print(f"  rings [{lo:>2}, {2 * lo:>2}]: {fit.slope:.3f}")
    fit = csvio.read_slopefit(out / "slopefit.csv")
    print(f"reported slope over [{fit.f_lo:g}, {fit.f_hi:g}]: {fit.slope:.3f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out")
    p.add_argument("--threads", type=int, default=1)
    run(p.parse_args())
