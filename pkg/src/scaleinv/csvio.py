"""CSV readers and writers for every toolkit output.

Floats are written with ``repr`` (shortest round-trip form), so re-reading a file
gives back the exact doubles and identical runs give identical bytes.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .multiscale import Histogram
from .spectral import PowerSpectrum2D, SlopeFit, Spectrum1D


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def read_columns(path) -> dict[str, np.ndarray]:
    """Numeric columns keyed by header name."""
    header, rows = read_rows(path)
    data = np.array([[float(v) for v in r] for r in rows]) if rows else np.empty((0, len(header)))
    return {h: data[:, i] for i, h in enumerate(header)}


def write_histogram(path, hist: Histogram) -> None:
    write_rows(path, ["bin_center", "mass"], zip(hist.centers, hist.masses))


def read_histogram(path) -> tuple[np.ndarray, np.ndarray]:
    cols = read_columns(path)
    return cols["bin_center"], cols["mass"]


def write_spectrum2d(path, spec: PowerSpectrum2D) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in spec.power:
            w.writerow([_fmt(v) for v in row])


def read_spectrum2d(path) -> PowerSpectrum2D:
    with open(path, newline="") as fh:
        grid = np.array([[float(v) for v in row] for row in csv.reader(fh)])
    return PowerSpectrum2D(grid, 1)


def write_spectrum1d(path, spec: Spectrum1D) -> None:
    write_rows(path, ["freq", "power", "count"], zip(spec.freqs, spec.power, spec.counts))


def read_spectrum1d(path, size: int | None = None) -> Spectrum1D:
    cols = read_columns(path)
    return Spectrum1D(cols["freq"], cols["power"], cols["count"].astype(np.int64), size)


def write_slopefit(path, fit: SlopeFit) -> None:
    write_rows(path, ["slope", "intercept", "r2", "f_lo", "f_hi"],
               [(fit.slope, fit.intercept, fit.r_squared, fit.f_lo, fit.f_hi)])


def read_slopefit(path) -> SlopeFit:
    cols = read_columns(path)
    return SlopeFit(*(float(cols[k][0]) for k in ("slope", "intercept", "r2", "f_lo", "f_hi")))


def write_convergence(path, report) -> None:
    write_rows(path, ["steps", "slope", "intercept", "r2", "amp_ref"],
               [(c.steps, c.fit.slope, c.fit.intercept, c.fit.r_squared, c.amp_ref)
                for c in report.checkpoints])


def write_sweep_summary(path, results) -> None:
    write_rows(
        path,
        ["gamma", "slope_raw", "slope_rescaled", "intercept", "r2", "converged", "steps"],
        [(r.gamma, r.slope_raw.slope, r.slope_rescaled.slope, r.slope_raw.intercept,
          r.slope_raw.r_squared, r.converged, r.steps) for r in results],
    )


def write_collapse(path, report) -> None:
    rows = [(g, s, d, d <= report.tol) for g, s, d in zip(report.gammas, report.slopes, report.deviations)]
    write_rows(path, ["gamma", "slope_rescaled", "deviation", "pass"], rows)


def gamma_tag(gamma: float) -> str:
    """Filename form of an exponent: ``3.0`` -> ``3``, ``2.5`` -> ``2.5``."""
    return f"{gamma:g}"


def spectrum_files(directory) -> dict[float, Path]:
    """``spectrum_gamma{g}.csv`` files of a sweep directory keyed by exponent."""
    out = {}
    for p in sorted(Path(directory).glob("spectrum_gamma*.csv")):
        tag = p.stem[len("spectrum_gamma"):]
        try:
            out[float(tag)] = p
        except ValueError:
            continue
    return dict(sorted(out.items()))
