"""Coarse-grained pixel and gradient distributions across length scales.

A pixel at scale ``N`` is the mean contrast of an ``N x N`` patch.  Gradients use the
four non-overlapping neighbour patches offset by ``N`` and half central differences,
so derivatives are in coarse-pixel units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import DegenerateInputError, GeometryError

PIXEL_RANGE = (-6.0, 6.0, 121)
GRADIENT_RANGE = (0.0, 6.0, 121)
PATCHES_PER_IMAGE = 32


@dataclass(frozen=True)
class PatchSpec:
    origin_x: int
    origin_y: int
    size: int

    def inside(self, width: int, height: int) -> bool:
        return (self.size >= 1 and self.origin_x >= 0 and self.origin_y >= 0
                and self.origin_x + self.size <= width and self.origin_y + self.size <= height)


@dataclass
class ScaleSample:
    values: np.ndarray
    scale: int | None = None
    standardized: bool = False
    sigma: float = 1.0
    mean: float = 0.0


@dataclass
class GradientSample:
    scale: int
    dx: np.ndarray
    dy: np.ndarray
    magnitudes: np.ndarray


@dataclass
class Histogram:
    """Masses over half-open bins ``[edge_i, edge_i+1)``, normalized by the in-range count."""

    bin_edges: np.ndarray
    masses: np.ndarray
    counts: np.ndarray
    n_below: int = 0
    n_above: int = 0

    @property
    def n_in_range(self) -> int:
        return int(self.counts.sum())

    @property
    def empty(self) -> bool:
        return self.n_in_range == 0

    @property
    def n_out_of_range(self) -> int:
        return self.n_below + self.n_above

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])


def _field(img) -> np.ndarray:
    return np.asarray(getattr(img, "data", img), dtype=np.float64)


def sample_patches(image_dims, size: int, count: int, margin: int, rng: np.random.Generator) -> list[PatchSpec]:
    """``count`` uniformly placed ``size x size`` patches at least ``margin`` pixels from every edge.

    ``image_dims`` is ``(width, height)``.
    """
    width, height = image_dims
    if size < 1:
        raise GeometryError(f"patch size must be >= 1, got {size}")
    if width - 2 * margin < size or height - 2 * margin < size:
        raise GeometryError(
            f"no room for a {size}x{size} patch with margin {margin} in a {width}x{height} image"
        )
    xs = rng.integers(margin, width - margin - size, size=count, endpoint=True)
    ys = rng.integers(margin, height - margin - size, size=count, endpoint=True)
    return [PatchSpec(int(x), int(y), size) for x, y in zip(xs, ys)]


def coarse_pixel(img, patch: PatchSpec) -> float:
    """Mean of the field over ``patch``."""
    data = _field(img)
    height, width = data.shape
    if not patch.inside(width, height):
        raise GeometryError(f"{patch} lies outside the {width}x{height} image")
    y, x, n = patch.origin_y, patch.origin_x, patch.size
    return float(data[y:y + n, x:x + n].mean())


def integral_image(data: np.ndarray) -> np.ndarray:
    out = np.zeros((data.shape[0] + 1, data.shape[1] + 1))
    out[1:, 1:] = data.cumsum(0).cumsum(1)
    return out


def block_means(data: np.ndarray, xs, ys, size: int, integral: np.ndarray | None = None) -> np.ndarray:
    """Vectorized :func:`coarse_pixel` for many origins of one size via a summed-area table."""
    s = integral_image(data) if integral is None else integral
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    total = s[ys + size, xs + size] - s[ys, xs + size] - s[ys + size, xs] + s[ys, xs]
    return total / (size * size)


def standardize(values, scale: int | None = None) -> ScaleSample:
    """Shift to zero mean and divide by the population standard deviation."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise DegenerateInputError("standardization needs at least 2 values")
    mean = v.mean()
    centered = v - mean
    sigma = float(np.sqrt((centered ** 2).mean()))
    if sigma == 0 or sigma < 1e-14 * max(abs(mean), 1.0):
        raise DegenerateInputError("sample has zero variance")
    return ScaleSample(centered / sigma, scale=scale, standardized=True, sigma=sigma, mean=float(mean))


def neighbours(center: PatchSpec) -> dict[str, PatchSpec]:
    n = center.size
    x, y = center.origin_x, center.origin_y
    return {
        "left": PatchSpec(x - n, y, n),
        "right": PatchSpec(x + n, y, n),
        "top": PatchSpec(x, y - n, n),
        "bottom": PatchSpec(x, y + n, n),
    }


def gradient_at(img, center_patch: PatchSpec) -> tuple[float, float, float]:
    """Half central differences of the neighbour coarse pixels: ``(dx, dy, |grad|)``."""
    nb = {k: coarse_pixel(img, p) for k, p in neighbours(center_patch).items()}
    dx = (nb["right"] - nb["left"]) / 2
    dy = (nb["bottom"] - nb["top"]) / 2
    return dx, dy, float(np.hypot(dx, dy))


def pixel_values(img, patches: list[PatchSpec], integral=None) -> np.ndarray:
    data = _field(img)
    if not patches:
        return np.empty(0)
    height, width = data.shape
    for p in patches:
        if not p.inside(width, height):
            raise GeometryError(f"{p} lies outside the {width}x{height} image")
    size = patches[0].size
    xs = np.array([p.origin_x for p in patches])
    ys = np.array([p.origin_y for p in patches])
    return block_means(data, xs, ys, size, integral)


def gradient_values(img, centers: list[PatchSpec], integral=None) -> GradientSample:
    """Vectorized :func:`gradient_at` over patches of one size."""
    data = _field(img)
    height, width = data.shape
    n = centers[0].size if centers else 1
    xs = np.array([p.origin_x for p in centers], dtype=np.intp)
    ys = np.array([p.origin_y for p in centers], dtype=np.intp)
    if centers and (xs.min() < n or ys.min() < n or xs.max() + 2 * n > width or ys.max() + 2 * n > height):
        raise GeometryError("a gradient neighbour patch falls outside the image")
    s = integral_image(data) if integral is None else integral
    dx = (block_means(data, xs + n, ys, n, s) - block_means(data, xs - n, ys, n, s)) / 2
    dy = (block_means(data, xs, ys + n, n, s) - block_means(data, xs, ys - n, n, s)) / 2
    return GradientSample(n, dx, dy, np.hypot(dx, dy))


def histogram(values, lo: float, hi: float, bins: int) -> Histogram:
    if bins < 1 or not lo < hi:
        raise ValueError(f"need bins >= 1 and lo < hi, got {bins}, [{lo}, {hi}]")
    v = np.asarray(values, dtype=np.float64).ravel()
    edges = np.linspace(lo, hi, bins + 1)
    below = int((v < lo).sum())
    above = int((v >= hi).sum())
    inside = v[(v >= lo) & (v < hi)]
    idx = np.searchsorted(edges, inside, side="right") - 1
    counts = np.bincount(idx, minlength=bins)[:bins]
    total = counts.sum()
    masses = counts / total if total else np.zeros(bins)
    return Histogram(edges, masses, counts, below, above)


def reference_pdf(kind: str, x):
    """Standard Gaussian or Rayleigh (unit scale) density."""
    x = np.asarray(x, dtype=np.float64)
    if kind == "standard_gaussian":
        out = np.exp(-0.5 * x * x) / np.sqrt(2 * np.pi)
    elif kind == "rayleigh":
        if np.any(x < 0):
            raise ValueError("rayleigh density is defined for x >= 0 only")
        out = x * np.exp(-0.5 * x * x)
    else:
        raise ValueError(f"unknown reference distribution {kind!r}")
    return out[()] if out.ndim == 0 else out


def reference_histogram(kind: str, lo: float, hi: float, bins: int) -> Histogram:
    """Bin masses of a reference law over ``[lo, hi)``, renormalized to the range."""
    edges = np.linspace(lo, hi, bins + 1)
    dist = {"standard_gaussian": stats.norm(), "rayleigh": stats.rayleigh()}[kind]
    mass = np.diff(dist.cdf(edges))
    return Histogram(edges, mass / mass.sum(), np.zeros(bins, dtype=np.int64))


def tail_mass(values, threshold: float, two_sided: bool = True) -> float:
    v = np.asarray(values, dtype=np.float64)
    return float(np.mean(np.abs(v) > threshold if two_sided else v > threshold))


def ks_distance(a: Histogram, b: Histogram) -> float:
    """Largest gap between the binned CDFs of two histograms on identical edges."""
    if not np.array_equal(a.bin_edges, b.bin_edges):
        raise ValueError("histograms must share bin edges")
    return float(np.max(np.abs(np.cumsum(a.masses) - np.cumsum(b.masses))))
