"""Compare the radix-2 FFT with the direct DFT and time both.

    python scripts/fft_check.py
"""

import time

import numpy as np

from scaleinv import spectral


def main():
    rng = np.random.default_rng(0)
    spectral.fft2(rng.standard_normal((2, 2)))  # compile
    print(f"{'M':>4} {'max rel err':>12} {'fft ms':>8} {'naive ms':>9}")
    for m in (2, 4, 8, 16, 32, 64):
        f = rng.standard_normal((200, m, m))
        t0 = time.perf_counter()
        fast = spectral.fft2(f)
        t1 = time.perf_counter()
        ref = spectral.dft2_naive(f)
        t2 = time.perf_counter()
        err = float((np.abs(fast - ref) / np.abs(ref)).max())
        print(f"{m:>4} {err:>12.2e} {1e3 * (t1 - t0):>8.2f} {1e3 * (t2 - t1):>9.2f}")


if __name__ == "__main__":
    main()
