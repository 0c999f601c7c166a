"""Square dead-leaves model on a torus.

Each step draws a patch side ``N`` from the source, a level from the palette and a
uniform top-left origin, then overwrites the ``N x N`` block (wrapping at the edges).
Random draws come from one row of four uniforms per step, so a trajectory does not
depend on how steps are batched.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numba
import numpy as np

from . import spectral
from .errors import GeometryError, InsufficientDataError
from .multiscale import sample_patches
from .runtime import derive_seed_sequence, parallel_map

# steps drawn per batch in advance(); keeps the uniform buffer at 4 * 2**16 doubles
_CHUNK = 1 << 16


@dataclass(frozen=True)
class SourceSpec:
    """Patch-side law: ``p(N) ~ N**-gamma`` on ``[n_min, n_max]`` or a fixed side."""

    kind: str
    gamma: float | None = None
    fixed_size: int | None = None
    n_min: int = 1
    n_max: int = 1

    def __post_init__(self):
        if self.kind == "power_law":
            if self.gamma is None or not self.gamma > 1:
                raise ValueError(f"power-law source needs gamma > 1, got {self.gamma}")
            if not 1 <= self.n_min <= self.n_max:
                raise ValueError(f"need 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")
        elif self.kind == "delta":
            if self.fixed_size is None or self.fixed_size < 1:
                raise ValueError(f"delta source needs fixed_size >= 1, got {self.fixed_size}")
            object.__setattr__(self, "n_min", self.fixed_size)
            object.__setattr__(self, "n_max", self.fixed_size)
        else:
            raise ValueError(f"unknown source kind {self.kind!r}")

    @classmethod
    def power_law(cls, gamma: float, n_max: int, n_min: int = 1) -> "SourceSpec":
        return cls("power_law", gamma=float(gamma), n_min=int(n_min), n_max=int(n_max))

    @classmethod
    def delta(cls, size: int) -> "SourceSpec":
        return cls("delta", fixed_size=int(size))

    def check_side(self, side: int) -> None:
        if self.n_max > side // 2:
            raise GeometryError(f"n_max {self.n_max} exceeds half the lattice side {side}")


@dataclass(frozen=True)
class Palette:
    kind: str = "grayscale"
    i_max: int = 255

    def __post_init__(self):
        if self.kind == "binary":
            object.__setattr__(self, "i_max", 1)
        elif self.kind != "grayscale":
            raise ValueError(f"unknown palette kind {self.kind!r}")
        if self.i_max < 1:
            raise ValueError("i_max must be >= 1")

    @property
    def n_levels(self) -> int:
        return self.i_max + 1


def size_table(source: SourceSpec) -> tuple[np.ndarray, np.ndarray]:
    """Support and exact normalized pmf of the patch-side law."""
    sizes = np.arange(source.n_min, source.n_max + 1)
    if source.kind == "delta":
        return sizes, np.ones(1)
    weights = sizes.astype(np.float64) ** -source.gamma
    return sizes, weights / weights.sum()


def _size_cdf(source: SourceSpec) -> tuple[np.ndarray, np.ndarray]:
    sizes, pmf = size_table(source)
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    return sizes, cdf


def sizes_from_uniforms(source: SourceSpec, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF map of uniforms in [0, 1) onto patch sides."""
    sizes, cdf = _size_cdf(source)
    idx = np.searchsorted(cdf, u, side="right")
    return sizes[np.minimum(idx, sizes.size - 1)]


def sample_size(source: SourceSpec, rng: np.random.Generator) -> int:
    return int(sizes_from_uniforms(source, rng.random())[()])


def sample_sizes(source: SourceSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    return sizes_from_uniforms(source, rng.random(n))


@dataclass
class ModelState:
    """Lattice of levels indexed ``lattice[y, x]`` plus a coverage mask and its own stream."""

    side: int
    lattice: np.ndarray
    covered: np.ndarray
    rng: np.random.Generator
    steps_taken: int = 0

    @classmethod
    def new(cls, side: int, seed=None) -> "ModelState":
        if side < 2:
            raise GeometryError(f"lattice side must be >= 2, got {side}")
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return cls(
            side=side,
            lattice=np.zeros((side, side), dtype=np.int32),
            covered=np.zeros((side, side), dtype=np.bool_),
            rng=rng,
        )

    @property
    def rng_state(self) -> dict:
        return self.rng.bit_generator.state

    def coverage(self) -> float:
        return float(self.covered.mean())

    def copy(self) -> "ModelState":
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = self.rng.bit_generator.state
        return replace(self, lattice=self.lattice.copy(), covered=self.covered.copy(), rng=rng)


@numba.njit(cache=True, nogil=True)
def _stamp_many(lattice, covered, sizes, levels, xs, ys):
    side = lattice.shape[0]
    for k in range(sizes.shape[0]):
        n = sizes[k]
        x0 = xs[k]
        lev = levels[k]
        first = min(n, side - x0)
        for j in range(n):
            row = ys[k] + j
            if row >= side:
                row -= side
            for i in range(first):
                lattice[row, x0 + i] = lev
                covered[row, x0 + i] = True
            for i in range(n - first):
                lattice[row, i] = lev
                covered[row, i] = True


def stamp(state: ModelState, size: int, level: int, origin: tuple[int, int]) -> ModelState:
    """Overwrite the wrapped ``size x size`` block at ``origin = (x, y)``; returns ``state``."""
    side = state.side
    if not 1 <= size <= side // 2:
        raise GeometryError(f"patch side {size} outside [1, {side // 2}]")
    x, y = origin
    if not (0 <= x < side and 0 <= y < side):
        raise GeometryError(f"origin {origin} outside the {side}x{side} lattice")
    _stamp_many(
        state.lattice, state.covered,
        np.array([size], dtype=np.int64), np.array([level], dtype=np.int32),
        np.array([x], dtype=np.int64), np.array([y], dtype=np.int64),
    )
    state.steps_taken += 1
    return state


def advance(state: ModelState, n_steps: int, source: SourceSpec, palette: Palette) -> ModelState:
    """Apply ``n_steps`` random stamps drawn from ``state.rng``; mutates and returns ``state``."""
    source.check_side(state.side)
    side = state.side
    remaining = int(n_steps)
    while remaining > 0:
        n = min(remaining, _CHUNK)
        u = state.rng.random((n, 4))
        sizes = sizes_from_uniforms(source, u[:, 0]).astype(np.int64)
        levels = (u[:, 1] * palette.n_levels).astype(np.int32)
        xs = (u[:, 2] * side).astype(np.int64)
        ys = (u[:, 3] * side).astype(np.int64)
        _stamp_many(state.lattice, state.covered, sizes, levels, xs, ys)
        state.steps_taken += n
        remaining -= n
    return state


def step(state: ModelState, source: SourceSpec, palette: Palette) -> ModelState:
    return advance(state, 1, source, palette)


@dataclass
class ProbeSettings:
    """How spectra are measured on the lattice: ``count`` interior ``size x size`` patches."""

    size: int = 128
    count: int = 30
    f_lo: float | None = None
    f_hi: float | None = None
    exclude_axes: bool = False
    demean: bool = True
    window: str | None = None
    f_ref: float | None = None  # reference ring for the amplitude check

    def fit_range(self) -> tuple[float, float]:
        lo, hi = spectral.default_fit_range(self.size)
        return (lo if self.f_lo is None else self.f_lo, hi if self.f_hi is None else self.f_hi)

    def reference_freq(self) -> float:
        if self.f_ref is not None:
            return self.f_ref
        lo, hi = self.fit_range()
        return float(np.sqrt(lo * hi))


@dataclass
class Checkpoint:
    steps: int
    fit: spectral.SlopeFit
    amp_ref: float
    coverage: float


@dataclass
class ConvergenceReport:
    checkpoints: list[Checkpoint] = field(default_factory=list)
    converged: bool = False
    spectrum: spectral.Spectrum1D | None = None
    spectrum2d: spectral.PowerSpectrum2D | None = None

    @property
    def final_slope(self) -> float:
        return self.checkpoints[-1].fit.slope if self.checkpoints else float("nan")

    @property
    def steps(self) -> int:
        return self.checkpoints[-1].steps if self.checkpoints else 0


def probe_accumulator(state: ModelState, probe: ProbeSettings, rng: np.random.Generator):
    """Spectrum accumulator over ``probe.count`` random interior patches of the lattice."""
    acc = spectral.SpectrumAccumulator(probe.size, demean=probe.demean, window=probe.window)
    patches = sample_patches((state.side, state.side), probe.size, probe.count, 0, rng)
    lat = state.lattice
    stack = np.stack([lat[p.origin_y:p.origin_y + p.size, p.origin_x:p.origin_x + p.size]
                      for p in patches]).astype(np.float64)
    return acc.add(stack)


def _nan_fit(probe: ProbeSettings) -> spectral.SlopeFit:
    lo, hi = probe.fit_range()
    return spectral.SlopeFit(float("nan"), float("nan"), float("nan"), lo, hi, 0)


def measure(states, probe: ProbeSettings, probe_rngs, threads: int = 1):
    """Pooled probe spectrum over ``states``: returns ``(spec2d, spec1d, fit, amp_ref)``."""
    accs = parallel_map(lambda args: probe_accumulator(args[0], probe, args[1]),
                        list(zip(states, probe_rngs)), threads)
    total = accs[0]
    for acc in accs[1:]:
        total.merge(acc)
    spec2d = total.result()
    spec1d = spectral.azimuthal_average(spec2d, exclude_axes=probe.exclude_axes)
    lo, hi = probe.fit_range()
    try:
        fit = spectral.fit_slope(spec1d, lo, hi)
        amp = 10 ** (fit.intercept + fit.slope * np.log10(probe.reference_freq()))
    except InsufficientDataError:
        fit, amp = _nan_fit(probe), float("nan")
    return spec2d, spec1d, fit, float(amp)


def _is_stationary(prev: Checkpoint, cur: Checkpoint, tol: float, amp_tol: float, min_coverage: float) -> bool:
    if np.isnan(cur.fit.slope) or np.isnan(prev.fit.slope):
        return False
    if cur.coverage < min_coverage:
        return False
    if not abs(cur.fit.slope - prev.fit.slope) < tol:
        return False
    rel = abs(cur.amp_ref - prev.amp_ref) / max(abs(prev.amp_ref), 1e-300)
    return rel < amp_tol


def checkpoint_schedule(first: int, cap: int) -> list[int]:
    """Doubling step counts ``first, 2 first, ...`` not exceeding ``cap``; ``[cap]`` if ``cap < first``."""
    if cap < first:
        return [max(cap, 0)]
    out = []
    t = first
    while t <= cap:
        out.append(t)
        t *= 2
    return out


def evolve_until_stationary(
    states: list[ModelState],
    source: SourceSpec,
    palette: Palette,
    probe: ProbeSettings,
    probe_rngs: list[np.random.Generator],
    tol: float = 0.05,
    amp_tol: float = 0.05,
    min_coverage: float = 0.999,
    first_checkpoint: int = 10_000,
    step_cap: int = 10**8,
    threads: int = 1,
) -> ConvergenceReport:
    """Advance all ``states`` together through doubling checkpoints until the pooled
    probe spectrum stops changing or ``step_cap`` steps per image are reached.

    Stationary means: slope within ``tol`` of the previous checkpoint, fitted amplitude
    at the reference ring within ``amp_tol`` (relative), and at least ``min_coverage``
    of the cells written since the start.
    """
    for s in states:
        source.check_side(s.side)
        if probe.size > s.side:
            raise GeometryError(f"probe size {probe.size} exceeds lattice side {s.side}")
    report = ConvergenceReport()
    for target in checkpoint_schedule(first_checkpoint, step_cap):
        parallel_map(lambda s: advance(s, target - s.steps_taken, source, palette), states, threads)
        spec2d, spec1d, fit, amp = measure(states, probe, probe_rngs, threads)
        cp = Checkpoint(target, fit, amp, float(np.mean([s.coverage() for s in states])))
        report.checkpoints.append(cp)
        report.spectrum, report.spectrum2d = spec1d, spec2d
        if len(report.checkpoints) >= 2 and _is_stationary(report.checkpoints[-2], cp, tol, amp_tol, min_coverage):
            report.converged = True
            break
    return report


def member_streams(seed, index: int = 0) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent lattice and probe streams for member ``index`` of a run seeded by ``seed``."""
    ss = derive_seed_sequence(seed, index)
    lattice_ss, probe_ss = ss.spawn(2)
    return np.random.default_rng(lattice_ss), np.random.default_rng(probe_ss)


def run_until_stationary(side, source, palette, probe, tol=0.05, seed=0, **kwargs):
    """Single-lattice run; returns ``(state, report)``."""
    lat_rng, probe_rng = member_streams(seed, 0)
    state = ModelState.new(side, lat_rng)
    report = evolve_until_stationary([state], source, palette, probe, [probe_rng], tol=tol, **kwargs)
    return state, report


def generate_ensemble(
    count: int,
    side: int,
    source: SourceSpec,
    palette: Palette,
    steps_per_image: int | None = None,
    master_seed=0,
    probe: ProbeSettings | None = None,
    threads: int = 1,
    **kwargs,
):
    """``count`` independent lattices, member ``i`` seeded from ``(master_seed, i)``.

    With ``steps_per_image=None`` the ensemble is evolved in lockstep until its pooled
    probe spectrum is stationary.  Returns ``(states, report)``; ``report`` is ``None``
    for a fixed step count.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    streams = [member_streams(master_seed, i) for i in range(count)]
    states = [ModelState.new(side, lat) for lat, _ in streams]
    if steps_per_image is not None:
        parallel_map(lambda s: advance(s, steps_per_image, source, palette), states, threads)
        return states, None
    probe = probe or ProbeSettings()
    report = evolve_until_stationary(states, source, palette, probe, [p for _, p in streams],
                                     threads=threads, **kwargs)
    return states, report
