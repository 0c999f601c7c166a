"""Sweeps over the source exponent, the f**gamma collapse and periodic-peak detection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from . import spectral
from .errors import InsufficientDataError
from .deadleaves import Palette, ProbeSettings, SourceSpec, generate_ensemble, size_table
from .runtime import derive_seed_sequence

DEFAULT_PROMINENCE = 1.1
COLLAPSE_TARGET = -5.0


@dataclass(frozen=True)
class ScalingContext:
    """System size L, probe size l, mean patch side M and pixel size s (lattice units)."""

    system_size: int
    probe_size: int
    mean_patch_size: float
    pixel_size: int = 1

    def __post_init__(self):
        if self.pixel_size != 1:
            raise ValueError("pixel size is the lattice unit and must be 1")
        if not 1 <= self.probe_size <= self.system_size:
            raise ValueError("need 1 <= probe_size <= system_size")
        if not 1 <= self.mean_patch_size <= self.system_size / 2:
            raise ValueError("need 1 <= mean_patch_size <= system_size / 2")


@dataclass
class SweepResult:
    gamma: float
    spectrum: spectral.Spectrum1D
    slope_raw: spectral.SlopeFit
    slope_rescaled: spectral.SlopeFit
    context: ScalingContext
    converged: bool = True
    steps: int = 0

    @property
    def amplitude(self) -> float:
        """Fitted log10 intercept of the raw spectrum; no functional form is implied."""
        return self.slope_raw.intercept


@dataclass
class SweepConfig:
    side: int = 1024
    n_images: int = 8
    palette: Palette = field(default_factory=lambda: Palette("binary"))
    probe: ProbeSettings = field(default_factory=lambda: ProbeSettings(size=256, count=16))
    n_min: int = 1
    n_max: int | None = None  # defaults to side // 2
    tol: float = 0.05
    amp_tol: float = 0.05
    min_coverage: float = 0.999
    first_checkpoint: int = 10_000
    step_cap: int = 10**8
    threads: int = 1


def mean_patch_size(source: SourceSpec) -> float:
    """Expected patch side under the source law."""
    sizes, pmf = size_table(source)
    return float((sizes * pmf).sum())


def _fit_or_nan(spec, lo, hi):
    try:
        return spectral.fit_slope(spec, lo, hi)
    except InsufficientDataError:
        return spectral.SlopeFit(float("nan"), float("nan"), float("nan"), lo, hi, 0)


def analyse_spectrum(spec: spectral.Spectrum1D, gamma: float, f_lo: float, f_hi: float):
    """Raw and ``f**gamma``-rescaled fits over the same rings."""
    raw = _fit_or_nan(spec, f_lo, f_hi)
    rescaled = _fit_or_nan(spectral.rescale_spectrum(spec, gamma), f_lo, f_hi)
    return raw, rescaled


def sweep_point(gamma: float, config: SweepConfig, seed) -> SweepResult:
    n_max = config.n_max or config.side // 2
    source = SourceSpec.power_law(gamma, n_max=n_max, n_min=config.n_min)
    _, report = generate_ensemble(
        config.n_images, config.side, source, config.palette,
        master_seed=seed, probe=config.probe, threads=config.threads,
        tol=config.tol, amp_tol=config.amp_tol, min_coverage=config.min_coverage,
        first_checkpoint=config.first_checkpoint, step_cap=config.step_cap,
    )
    lo, hi = config.probe.fit_range()
    raw, rescaled = analyse_spectrum(report.spectrum, gamma, lo, hi)
    ctx = ScalingContext(config.side, config.probe.size, mean_patch_size(source))
    return SweepResult(gamma, report.spectrum, raw, rescaled, ctx, report.converged, report.steps)


def gamma_sweep(gammas, config: SweepConfig | None = None, master_seed=0) -> list[SweepResult]:
    """One stationary ensemble per exponent; point ``i`` is seeded from ``(master_seed, i)``."""
    config = config or SweepConfig()
    for g in gammas:
        if not g > 1:
            raise ValueError(f"source exponent must exceed 1, got {g}")
    return [sweep_point(float(g), config, derive_seed_sequence(master_seed, i))
            for i, g in enumerate(gammas)]


@dataclass
class CollapseReport:
    target: float
    tol: float
    gammas: list[float]
    slopes: list[float]
    deviations: list[float]
    passed: bool

    @property
    def max_deviation(self) -> float:
        return max(self.deviations)

    @property
    def spread(self) -> float:
        """Largest pairwise difference between rescaled slopes."""
        return max(self.slopes) - min(self.slopes)

    def summary(self) -> str:
        lines = [f"collapse check: target slope {self.target:g}, tolerance {self.tol:g}"]
        for g, s, d in zip(self.gammas, self.slopes, self.deviations):
            lines.append(f"  gamma={g:g}  rescaled slope={s:.4f}  deviation={d:.4f}  "
                         f"{'ok' if d <= self.tol else 'FAIL'}")
        lines.append(f"max deviation {self.max_deviation:.4f}, spread {self.spread:.4f}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def collapse_check(results: list[SweepResult], target: float = COLLAPSE_TARGET, tol: float = 0.5) -> CollapseReport:
    """Every rescaled slope must lie within ``tol`` of ``target``."""
    if not results:
        raise ValueError("collapse check needs at least one sweep result")
    slopes = [r.slope_rescaled.slope for r in results]
    devs = [abs(s - target) if np.isfinite(s) else float("inf") for s in slopes]
    return CollapseReport(
        target=target, tol=tol, gammas=[r.gamma for r in results], slopes=slopes,
        deviations=devs, passed=all(d <= tol for d in devs),
    )


@dataclass
class PeakReport:
    peaks: np.ndarray
    spacing: int | None

    @property
    def empty(self) -> bool:
        return self.peaks.size == 0


def peak_profile(spec) -> tuple[np.ndarray, np.ndarray]:
    """1D profile used for peak search.

    A :class:`Spectrum1D` is used as is.  For a centred 2D spectrum the profile at index
    ``k`` is the mean power over columns ``u = +-k`` (all rows except the DC row),
    averaged with the transposed counterpart; the axis lines are skipped because
    patch-edge leakage concentrates there.
    """
    if isinstance(spec, spectral.Spectrum1D):
        return np.asarray(spec.freqs, dtype=np.float64), np.asarray(spec.power, dtype=np.float64)
    power = spec.power
    m = power.shape[0]
    c = m // 2
    cols = np.delete(power, c, axis=0).mean(axis=0)
    rows = np.delete(power, c, axis=1).mean(axis=1)
    both = 0.5 * (cols + rows)
    k = np.arange(1, m - c)
    prof = 0.5 * (both[c + k] + both[c - k])
    return k.astype(np.float64), prof


def detect_periodic_peaks(spec, min_prominence: float = DEFAULT_PROMINENCE) -> PeakReport:
    """Local maxima whose topographic prominence in power is at least a factor ``min_prominence``.

    Returns the peak frequencies and the most common spacing between neighbouring peaks
    (``None`` with fewer than two peaks; ties go to the smaller spacing).
    """
    freqs, power = peak_profile(spec)
    if power.size == 0:
        raise ValueError("empty spectrum")
    logp = np.log(np.where(power > 0, power, np.nan))
    finite = np.isfinite(logp)
    if not finite.all():
        logp = np.where(finite, logp, np.nanmin(logp) if finite.any() else 0.0)
    idx, _ = find_peaks(logp, prominence=np.log(min_prominence))
    peaks = freqs[idx]
    spacing = None
    if peaks.size >= 2:
        gaps = np.rint(np.diff(peaks)).astype(int)
        spacing = int(np.bincount(gaps).argmax())
    return PeakReport(peaks, spacing)
