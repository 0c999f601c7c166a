"""Patch power spectra: FFT, ensemble averaging, azimuthal averaging and log-log slope fits."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import GeometryError, InsufficientDataError


@dataclass
class PowerSpectrum2D:
    """Ensemble-averaged ``|F|^2 / M^2`` with DC at ``(M//2, M//2)``."""

    power: np.ndarray
    count: int

    @property
    def size(self) -> int:
        return self.power.shape[0]


@dataclass
class Spectrum1D:
    """Ring-averaged power; ``freqs`` are integer ring indices in cycles per patch."""

    freqs: np.ndarray
    power: np.ndarray
    counts: np.ndarray
    size: int | None = None  # side of the patches the spectrum came from


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r_squared: float
    f_lo: float
    f_hi: float
    n_points: int = 0


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _square_last2(arr: np.ndarray) -> int:
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise GeometryError(f"expected square fields in the last two axes, got shape {arr.shape}")
    return arr.shape[-1]


def dft2_naive(field) -> np.ndarray:
    """Direct 2D DFT, ``X[u, v] = sum_{x, y} F[x, y] exp(-2 pi i (u x + v y) / M)``.

    Every coefficient is an explicit M^2-term sum (O(M^4) total).  Leading axes are
    treated as a batch.  Meant as a reference for :func:`fft2`, not for production use.
    """
    arr = np.asarray(field)
    m = _square_last2(arr)
    k = np.arange(m)
    # flattened (u, v) x (x, y) phase indices, reduced mod M before exponentiation
    uv = (k[:, None, None, None] * k[None, None, :, None]
          + k[None, :, None, None] * k[None, None, None, :]) % m
    roots = np.exp(-2j * np.pi * np.arange(m) / m)
    kernel = roots[uv.reshape(m * m, m * m)]
    flat = arr.reshape(-1, m * m).astype(np.complex128)
    out = flat @ kernel.T
    return out.reshape(arr.shape[:-2] + (m, m))


def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


@numba.njit(cache=True, nogil=True)
def _butterflies(rows, twiddle):
    """In-place radix-2 DIT passes over each row of bit-reversed input.

    ``twiddle[k] = exp(-2 pi i k / n)`` for ``k < n/2``; a stage of span ``size`` uses
    every ``n/size``-th entry.
    """
    n = rows.shape[1]
    for r in range(rows.shape[0]):
        row = rows[r]
        size = 2
        while size <= n:
            half = size // 2
            stride = n // size
            for start in range(0, n, size):
                for k in range(half):
                    a = row[start + k]
                    b = row[start + k + half] * twiddle[k * stride]
                    row[start + k] = a + b
                    row[start + k + half] = a - b
            size *= 2


def _fft_last_axis(x: np.ndarray) -> np.ndarray:
    """Iterative radix-2 decimation-in-time FFT along the last axis."""
    n = x.shape[-1]
    rows = np.ascontiguousarray(x[..., _bit_reverse(n)], dtype=np.complex128).reshape(-1, n)
    twiddle = np.exp(-2j * np.pi * np.arange(n // 2) / n)
    _butterflies(rows, twiddle)
    return rows.reshape(x.shape)


def fft2(field, allow_naive: bool = False) -> np.ndarray:
    """2D FFT of square power-of-two fields (same convention as :func:`dft2_naive`).

    Non-power-of-two sizes raise :class:`GeometryError` unless ``allow_naive`` is set,
    in which case the direct sum is used.
    """
    arr = np.asarray(field)
    m = _square_last2(arr)
    if not _is_pow2(m):
        if allow_naive:
            return dft2_naive(arr)
        raise GeometryError(f"fft2 needs a power-of-two side, got {m}")
    out = _fft_last_axis(arr.astype(np.complex128))
    out = _fft_last_axis(np.swapaxes(out, -1, -2))
    return np.swapaxes(out, -1, -2)


def _hann2(m: int) -> np.ndarray:
    w = np.hanning(m)
    return np.outer(w, w)


class SpectrumAccumulator:
    """Running sum of patch power spectra.

    Patches must be added in a fixed order for bit-identical results; callers that
    work in parallel accumulate per task and :meth:`merge` in task order.
    """

    def __init__(self, size: int, demean: bool = True, window: str | None = None):
        if window not in (None, "hann"):
            raise ValueError(f"unknown window {window!r}")
        self.size = size
        self.demean = demean
        self.window = window
        self.total = np.zeros((size, size))
        self.count = 0

    def add(self, patches) -> "SpectrumAccumulator":
        arr = np.asarray(patches, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None]
        if arr.shape[1:] != (self.size, self.size):
            raise GeometryError(f"patch shape {arr.shape[1:]} != ({self.size}, {self.size})")
        if self.demean:
            arr = arr - arr.mean(axis=(-2, -1), keepdims=True)
        norm = float(self.size * self.size)
        if self.window == "hann":
            w = _hann2(self.size)
            arr = arr * w
            norm = float((w * w).sum())
        spec = fft2(arr, allow_naive=True)
        power = (spec.real ** 2 + spec.imag ** 2) / norm
        for p in power:
            self.total += p
        self.count += arr.shape[0]
        return self

    def merge(self, other: "SpectrumAccumulator") -> "SpectrumAccumulator":
        if other.size != self.size:
            raise GeometryError("cannot merge spectra of different sizes")
        self.total += other.total
        self.count += other.count
        return self

    def result(self) -> PowerSpectrum2D:
        if self.count == 0:
            raise InsufficientDataError("no patches accumulated")
        return PowerSpectrum2D(np.fft.fftshift(self.total / self.count), self.count)


def power_spectrum_2d(patches, demean: bool = True, window: str | None = None) -> PowerSpectrum2D:
    """Average ``|fft2(patch)|^2 / M^2`` over patches, DC shifted to the centre."""
    patches = [np.asarray(p, dtype=np.float64) for p in patches]
    if not patches:
        raise InsufficientDataError("need at least one patch")
    m = _square_last2(patches[0])
    acc = SpectrumAccumulator(m, demean=demean, window=window)
    for p in patches:
        acc.add(p)
    return acc.result()


def ring_index(m: int) -> np.ndarray:
    """Rounded radial distance of every cell from the centre of a shifted M x M grid."""
    off = np.arange(m) - m // 2
    return np.rint(np.hypot(off[:, None], off[None, :])).astype(np.intp)


def azimuthal_average(spec: PowerSpectrum2D, exclude_axes: bool = False) -> Spectrum1D:
    """Average the centred 2D spectrum over rings of constant rounded radius.

    Rings 1..M//2 are kept (DC and the corner cells beyond M/2 are dropped).  With
    ``exclude_axes`` the row and column through DC are ignored.
    """
    m = spec.size
    if m < 4:
        raise GeometryError(f"azimuthal average needs M >= 4, got {m}")
    rings = ring_index(m)
    mask = (rings >= 1) & (rings <= m // 2)
    if exclude_axes:
        c = m // 2
        mask[c, :] = False
        mask[:, c] = False
    r = rings[mask]
    counts = np.bincount(r, minlength=m // 2 + 1)[1:]
    sums = np.bincount(r, weights=spec.power[mask], minlength=m // 2 + 1)[1:]
    freqs = np.arange(1, m // 2 + 1)
    keep = counts > 0
    return Spectrum1D(
        freqs=freqs[keep].astype(np.float64),
        power=sums[keep] / counts[keep],
        counts=counts[keep],
        size=m,
    )


def default_fit_range(size: int) -> tuple[float, float]:
    return 4.0, size / 4.0


def fit_slope(spec: Spectrum1D, f_lo: float | None = None, f_hi: float | None = None) -> SlopeFit:
    """Least-squares line through ``log10(power)`` vs ``log10(freq)`` on ``f_lo <= f <= f_hi``."""
    if f_lo is None or f_hi is None:
        if spec.size is None:
            raise ValueError("fit range required when the spectrum carries no patch size")
        d_lo, d_hi = default_fit_range(spec.size)
        f_lo = d_lo if f_lo is None else f_lo
        f_hi = d_hi if f_hi is None else f_hi
    f = np.asarray(spec.freqs, dtype=np.float64)
    p = np.asarray(spec.power, dtype=np.float64)
    sel = (f >= f_lo) & (f <= f_hi) & (p > 0)
    n = int(sel.sum())
    if n < 3:
        raise InsufficientDataError(f"only {n} usable rings in [{f_lo}, {f_hi}]")
    x = np.log10(f[sel])
    y = np.log10(p[sel])
    xm, ym = x.mean(), y.mean()
    sxx = ((x - xm) ** 2).sum()
    slope = ((x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    ss_res = ((y - (intercept + slope * x)) ** 2).sum()
    ss_tot = ((y - ym) ** 2).sum()
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return SlopeFit(float(slope), float(intercept), float(r2), float(f_lo), float(f_hi), n)


def rescale_spectrum(spec: Spectrum1D, gamma: float) -> Spectrum1D:
    """Divide the power by ``f**gamma``."""
    f = np.asarray(spec.freqs, dtype=np.float64)
    return Spectrum1D(f.copy(), np.asarray(spec.power) / f ** gamma, np.asarray(spec.counts).copy(), spec.size)
