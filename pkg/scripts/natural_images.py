"""Pixel, gradient and spectrum statistics of a directory of raw 16-bit images.

    python scripts/natural_images.py /data/vanhateren/iml out/natural [--threads 8]

Writes ``pixstats/``, ``gradstats/`` and ``spectrum/`` under the output directory and
prints the tail masses, the pairwise KS distances between scales and the spectral slope.
"""

import argparse
import itertools
from pathlib import Path

from scipy import stats

from scaleinv import csvio
from scaleinv.cli import main


def ks(a, b):
    return float(abs(a.cumsum() - b.cumsum()).max())


def run(args):
    out = Path(args.out)
    common = ["--input", args.input, "--threads", str(args.threads), "--seed", str(args.seed)]
    for cmd in ("pixstats", "gradstats"):
        if main([cmd, *common, "--out", str(out / cmd)]):
            raise SystemExit(1)
    if main(["spectrum", *common, "--patch-size", "128", "--f-lo", "4", "--f-hi", "40",
             "--out", str(out / "spectrum")]):
        raise SystemExit(1)

    scales = [1, 2, 4, 8, 16, 32]
    masses = {n: csvio.read_histogram(out / "pixstats" / f"pixels_N{n}.csv")[1] for n in scales}
    print("pairwise KS between standardized pixel histograms")
    for a, b in itertools.combinations(scales, 2):
        print(f"  N={a:2d} vs N={b:2d}: {ks(masses[a], masses[b]):.4f}")
    _, rows = csvio.read_rows(out / "pixstats" / "pixstats_summary.csv")
    print(f"pixel tail mass beyond 3 sigma (gaussian {2 * stats.norm.sf(3):.5f}):")
    for r in rows:
        print(f"  N={r[0]:>2}: {float(r[4]):.5f}")
    _, rows = csvio.read_rows(out / "gradstats" / "gradstats_summary.csv")
    print(f"gradient tail mass beyond 3 (rayleigh {stats.rayleigh.sf(3):.5f}):")
    for r in rows:
        print(f"  N={r[0]:>2}: {float(r[3]):.5f}")
    fit = csvio.read_slopefit(out / "spectrum" / "slopefit.csv")
    print(f"spectrum slope over rings [{fit.f_lo:g}, {fit.f_hi:g}]: {fit.slope:.3f} (r2 {fit.r_squared:.4f})")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    run(p.parse_args())
