"""Dataset-level pipelines: multi-scale pixel/gradient statistics and ensemble spectra.

Inputs are sequences of zero-argument callables returning 2D float fields, so large
datasets are read one image at a time.  Image ``i`` always draws its patches from a
stream derived from ``(seed, i, ...)``; results are identical for any thread count.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import multiscale as ms
from . import spectral
from .errors import InputError, InsufficientDataError
from .imageio import DEFAULT_HEIGHT, DEFAULT_WIDTH, IntensityImage, read_image, to_contrast
from .runtime import derive_rng, parallel_map

RAW_SUFFIXES = (".iml", ".imc", ".raw", ".u16")


def find_images(spec) -> list[Path]:
    """Expand a file, directory or glob into a sorted list of image paths."""
    spec = os.fspath(spec)
    p = Path(spec)
    if p.is_dir():
        files = [q for q in p.iterdir() if q.suffix.lower() in RAW_SUFFIXES + (".pgm",)]
    elif p.is_file():
        files = [p]
    else:
        files = [Path(q) for q in glob.glob(spec)]
    return sorted(files)


def field_loader(path, transform="log", width=DEFAULT_WIDTH, height=DEFAULT_HEIGHT,
                 byte_order="big", zero_policy="clamp_to_min_positive"):
    """Callable reading one image and applying ``transform`` (``log`` contrast or ``none``)."""
    if transform not in ("log", "none"):
        raise InputError(f"transform must be 'log' or 'none', got {transform!r}")

    def load():
        img = read_image(path, width, height, byte_order)
        if transform == "log":
            return to_contrast(img, zero_policy).data
        return img.data

    return load


def array_loader(arr, transform="none", zero_policy="clamp_to_min_positive"):
    arr = np.asarray(arr, dtype=np.float64)
    if transform == "log":
        return lambda: to_contrast(IntensityImage(arr), zero_policy).data
    return lambda: arr


@dataclass
class ScaleStats:
    sample: ms.ScaleSample
    hist: ms.Histogram


def _pixel_task(args, scales, patches, seed):
    i, load = args
    field = load()
    h, w = field.shape
    integral = ms.integral_image(field)
    out = {}
    for n in scales:
        pts = ms.sample_patches((w, h), n, patches, 0, derive_rng(seed, i, n))
        out[n] = ms.pixel_values(field, pts, integral)
    return out


def pixel_stats(loaders, scales, patches_per_image=ms.PATCHES_PER_IMAGE, seed=0, threads=1,
                bins_range=ms.PIXEL_RANGE) -> dict[int, ScaleStats]:
    """Standardized coarse-pixel histograms per scale, pooled over all images."""
    if not loaders:
        raise InputError("empty dataset")
    per_image = parallel_map(lambda a: _pixel_task(a, scales, patches_per_image, seed),
                             list(enumerate(loaders)), threads)
    lo, hi, bins = bins_range
    out = {}
    for n in scales:
        values = np.concatenate([r[n] for r in per_image])
        sample = ms.standardize(values, scale=n)
        out[n] = ScaleStats(sample, ms.histogram(sample.values, lo, hi, bins))
    return out


@dataclass
class GradientStats:
    sample: ms.GradientSample
    hist: ms.Histogram
    magnitudes: np.ndarray  # values that were binned (standardized when requested)


def _gradient_task(args, scales, patches, seed):
    i, load = args
    field = load()
    h, w = field.shape
    integral = ms.integral_image(field)
    out = {}
    for n in scales:
        pts = ms.sample_patches((w, h), n, patches, n, derive_rng(seed, i, n, 1))
        out[n] = ms.gradient_values(field, pts, integral)
    return out


def gradient_stats(loaders, scales, patches_per_image=ms.PATCHES_PER_IMAGE, seed=0, threads=1,
                   bins_range=ms.GRADIENT_RANGE, standardize_components=False) -> dict[int, GradientStats]:
    """Gradient-magnitude histograms per scale.

    Raw magnitudes are binned by default.  ``standardize_components`` divides ``dx`` and
    ``dy`` by their own population standard deviation first, which makes independent
    Gaussian pixels land on the unit Rayleigh law.
    """
    if not loaders:
        raise InputError("empty dataset")
    per_image = parallel_map(lambda a: _gradient_task(a, scales, patches_per_image, seed),
                             list(enumerate(loaders)), threads)
    lo, hi, bins = bins_range
    out = {}
    for n in scales:
        dx = np.concatenate([r[n].dx for r in per_image])
        dy = np.concatenate([r[n].dy for r in per_image])
        sample = ms.GradientSample(n, dx, dy, np.hypot(dx, dy))
        mags = sample.magnitudes
        if standardize_components:
            sx, sy = dx.std(), dy.std()
            mags = np.hypot(dx / sx if sx > 0 else dx, dy / sy if sy > 0 else dy)
        out[n] = GradientStats(sample, ms.histogram(mags, lo, hi, bins), mags)
    return out


@dataclass
class SpectrumResult:
    spec2d: spectral.PowerSpectrum2D
    spec1d: spectral.Spectrum1D
    fit: spectral.SlopeFit | None


def _spectrum_task(args, size, patches, seed, demean, window):
    i, load = args
    field = load()
    h, w = field.shape
    pts = ms.sample_patches((w, h), size, patches, 0, derive_rng(seed, i, size, 2))
    stack = np.stack([field[p.origin_y:p.origin_y + size, p.origin_x:p.origin_x + size] for p in pts])
    return spectral.SpectrumAccumulator(size, demean=demean, window=window).add(stack)


def ensemble_spectrum(loaders, patch_size=128, patches_per_image=ms.PATCHES_PER_IMAGE, seed=0,
                      threads=1, demean=True, window=None, exclude_axes=True,
                      f_lo=None, f_hi=None) -> SpectrumResult:
    """Average patch spectrum over a dataset, its ring average and log-log slope."""
    if not loaders:
        raise InputError("empty dataset")
    accs = parallel_map(lambda a: _spectrum_task(a, patch_size, patches_per_image, seed, demean, window),
                        list(enumerate(loaders)), threads)
    total = accs[0]
    for acc in accs[1:]:
        total.merge(acc)
    spec2d = total.result()
    spec1d = spectral.azimuthal_average(spec2d, exclude_axes=exclude_axes)
    lo, hi = spectral.default_fit_range(patch_size)
    try:
        fit = spectral.fit_slope(spec1d, lo if f_lo is None else f_lo, hi if f_hi is None else f_hi)
    except InsufficientDataError:
        fit = None
    return SpectrumResult(spec2d, spec1d, fit)
