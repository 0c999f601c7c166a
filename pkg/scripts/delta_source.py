"""Fixed-size (delta) sources: periodic spectral peaks and high-frequency slopes.

    python scripts/delta_source.py out/delta [--threads 8]
"""

import argparse
from pathlib import Path

from scaleinv import csvio
from scaleinv.cli import main

CONFIGS = Path(__file__).parent / "configs"


def run(args):
    out = Path(args.out)
    threads = ["--threads", str(args.threads)]
    if main(["simulate", "--config", str(CONFIGS / "delta_32_peaks.txt"), *threads, "--out", str(out / "peaks")]):
        raise SystemExit(1)
    _, rows = csvio.read_rows(out / "peaks" / "peak_spacing.csv")
    print("modal peak spacing (size 32, probe 256):", dict(rows))
    for n in (16, 32, 64):
        d = out / f"size{n}"
        if main(["simulate", "--config", str(CONFIGS / f"delta_{n}.txt"), *threads, "--out", str(d)]):
            raise SystemExit(1)
        fit = csvio.read_slopefit(d / "slopefit.csv")
        print(f"size {n:>2}: slope {fit.slope:.3f} over rings [{fit.f_lo:g}, {fit.f_hi:g}]")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out")
    p.add_argument("--threads", type=int, default=1)
    run(p.parse_args())
