"""Command-line entry point: ``scaleinv <command> [options]``.

Every command resolves its parameters as defaults < ``--config`` file < flags, writes
the resolved set to ``config.txt`` in the output directory and emits CSV only.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import csvio, multiscale as ms, pipeline, scaling, spectral
from .config import ConfigError, coerce, dump_kv, load_kv
from .deadleaves import Palette, ProbeSettings, SourceSpec, generate_ensemble, measure, member_streams
from .errors import ScaleInvError
from .imageio import write_pgm

log = logging.getLogger("scaleinv")

_OPT_INT = (int, True)
_OPT_FLOAT = (float, True)

COMMON = {
    "out": (str, "out", "output directory"),
    "seed": (int, 0, "master seed"),
    "threads": (int, 1, "worker threads"),
}

DATASET = {
    "input": (str, None, "image file, directory or glob"),
    "width": (int, 1536, "raw image width"),
    "height": (int, 1024, "raw image height"),
    "byte_order": (str, "big", "raw byte order: big or little"),
    "zero_policy": (str, "clamp_to_min_positive", "zero handling: clamp_to_min_positive or add_one"),
    "transform": (str, "log", "log (contrast) or none (values as stored)"),
}

SIM = {
    "side": (int, 256, "lattice side L"),
    "source.kind": (str, "power_law", "power_law or delta"),
    "gamma": (float, 3.0, "source exponent"),
    "fixed_size": (_OPT_INT, None, "delta source patch side"),
    "n_min": (int, 1, "smallest patch side"),
    "n_max": (_OPT_INT, None, "largest patch side (default side/2)"),
    "palette.kind": (str, "grayscale", "grayscale or binary"),
    "i_max": (int, 255, "largest grayscale level"),
    "images": (int, 1, "ensemble size"),
    "steps": (_OPT_INT, None, "fixed steps per image (default: run to stationarity)"),
    "probe.l": (int, 128, "probe patch side l"),
    "probe.count": (int, 30, "probe patches per image"),
    "tol": (float, 0.05, "slope tolerance between checkpoints"),
    "amp_tol": (float, 0.05, "relative amplitude tolerance between checkpoints"),
    "min_coverage": (float, 0.999, "covered fraction required for stationarity"),
    "first_checkpoint": (int, 10_000, "steps at the first checkpoint"),
    "step_cap": (int, 10**8, "maximum steps per image"),
    "exclude_axes": (bool, False, "drop spectrum axis lines from ring averages"),
    "f_lo": (_OPT_FLOAT, None, "fit range lower ring"),
    "f_hi": (_OPT_FLOAT, None, "fit range upper ring"),
    "snapshots": (int, 1, "number of lattices exported as graymaps"),
    "prominence": (float, scaling.DEFAULT_PROMINENCE, "peak prominence factor"),
}

SWEEP = {
    "gammas": ([float], [2.5, 3.0, 3.5, 4.0, 4.5], "source exponents"),
    "side": (int, 1024, "lattice side L"),
    "n_min": (int, 1, "smallest patch side"),
    "n_max": (_OPT_INT, None, "largest patch side (default side/2)"),
    "palette.kind": (str, "binary", "grayscale or binary"),
    "i_max": (int, 255, "largest grayscale level"),
    "images": (int, 8, "ensemble size per exponent"),
    "probe.l": (int, 256, "probe patch side l"),
    "probe.count": (int, 16, "probe patches per image"),
    "tol": (float, 0.05, "slope tolerance between checkpoints"),
    "amp_tol": (float, 0.05, "relative amplitude tolerance"),
    "min_coverage": (float, 0.999, "covered fraction required for stationarity"),
    "first_checkpoint": (int, 10_000, "steps at the first checkpoint"),
    "step_cap": (int, 10**8, "maximum steps per image"),
    "exclude_axes": (bool, False, "drop spectrum axis lines from ring averages"),
    "f_lo": (_OPT_FLOAT, None, "fit range lower ring"),
    "f_hi": (_OPT_FLOAT, None, "fit range upper ring"),
}

COMMANDS = {
    "pixstats": {**COMMON, **DATASET,
                 "scales": ([int], [1, 2, 4, 8, 16, 32], "pixel sizes N"),
                 "patches": (int, ms.PATCHES_PER_IMAGE, "patches per image and scale"),
                 "lo": (float, -6.0, "histogram lower edge"),
                 "hi": (float, 6.0, "histogram upper edge"),
                 "bins": (int, 121, "histogram bins")},
    "gradstats": {**COMMON, **DATASET,
                  "scales": ([int], [1, 2, 4, 8, 16, 32], "pixel sizes N"),
                  "patches": (int, ms.PATCHES_PER_IMAGE, "patches per image and scale"),
                  "lo": (float, 0.0, "histogram lower edge"),
                  "hi": (float, 6.0, "histogram upper edge"),
                  "bins": (int, 121, "histogram bins"),
                  "standardize_components": (bool, False, "scale dx, dy to unit variance first")},
    "spectrum": {**COMMON, **DATASET,
                 "patch_size": (int, 128, "patch side M"),
                 "patches": (int, ms.PATCHES_PER_IMAGE, "patches per image"),
                 "demean": (bool, True, "subtract each patch mean"),
                 "window": (str, "none", "none or hann"),
                 "exclude_axes": (bool, True, "drop spectrum axis lines from ring averages"),
                 "f_lo": (_OPT_FLOAT, None, "fit range lower ring"),
                 "f_hi": (_OPT_FLOAT, None, "fit range upper ring")},
    "simulate": {**COMMON, **SIM},
    "sweep": {**COMMON, **SWEEP},
    "collapse": {**COMMON, **SWEEP,
                 "input": (str, None, "sweep output directory (runs a sweep when absent); only --gammas are checked"),
                 "target": (float, scaling.COLLAPSE_TARGET, "expected rescaled slope"),
                 "collapse_tol": (float, 0.5, "allowed deviation from the target")},
}


def _kind(spec):
    kind = spec[0]
    if isinstance(kind, tuple):
        return kind[0], True
    return kind, False


def _flag(key: str) -> str:
    return "--" + key.replace(".", "-").replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaleinv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value config file")
        for key, spec in opts.items():
            kind, _ = _kind(spec)
            if kind is bool:
                p.add_argument(_flag(key), dest=key, default=None,
                               action=argparse.BooleanOptionalAction, help=spec[2])
            else:
                p.add_argument(_flag(key), dest=key, default=None, help=spec[2])
    return parser


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags."""
    opts = COMMANDS[command]
    values = {k: spec[1] for k, spec in opts.items()}
    if getattr(args, "config", None):
        for key, text in load_kv(args.config).items():
            if key not in opts:
                raise ConfigError(f"unknown key {key!r} for {command}")
            kind, optional = _kind(opts[key])
            values[key] = coerce(text, kind, optional)
    for key, spec in opts.items():
        given = getattr(args, key, None)
        if given is None:
            continue
        kind, optional = _kind(spec)
        values[key] = given if isinstance(given, bool) else coerce(given, kind, optional)
    return values


def _outdir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(dump_kv(cfg))
    return out


def _loaders(cfg):
    if not cfg.get("input"):
        raise ScaleInvError("--input is required")
    files = pipeline.find_images(cfg["input"])
    if not files:
        raise ScaleInvError(f"no images found at {cfg['input']}")
    return [pipeline.field_loader(f, cfg["transform"], cfg["width"], cfg["height"],
                                  cfg["byte_order"], cfg["zero_policy"]) for f in files]


def cmd_pixstats(cfg) -> int:
    loaders = _loaders(cfg)
    out = _outdir(cfg)
    rng = (cfg["lo"], cfg["hi"], cfg["bins"])
    stats = pipeline.pixel_stats(loaders, cfg["scales"], cfg["patches"], cfg["seed"], cfg["threads"], rng)
    rows = []
    for n, st in stats.items():
        csvio.write_histogram(out / f"pixels_N{n}.csv", st.hist)
        v = st.sample.values
        rows.append((n, v.size, st.sample.sigma, st.sample.mean, ms.tail_mass(v, 3.0),
                     st.hist.n_below, st.hist.n_above))
    csvio.write_histogram(out / "reference_gaussian.csv", ms.reference_histogram("standard_gaussian", *rng))
    csvio.write_rows(out / "pixstats_summary.csv",
                     ["scale", "n", "sigma", "mean", "tail_mass_3", "n_below", "n_above"], rows)
    return 0


def cmd_gradstats(cfg) -> int:
    loaders = _loaders(cfg)
    out = _outdir(cfg)
    rng = (cfg["lo"], cfg["hi"], cfg["bins"])
    stats = pipeline.gradient_stats(loaders, cfg["scales"], cfg["patches"], cfg["seed"], cfg["threads"],
                                    rng, cfg["standardize_components"])
    rows = []
    for n, st in stats.items():
        csvio.write_histogram(out / f"gradients_N{n}.csv", st.hist)
        rows.append((n, st.magnitudes.size, float(st.magnitudes.mean()),
                     ms.tail_mass(st.magnitudes, 3.0, two_sided=False), st.hist.n_above))
    csvio.write_histogram(out / "reference_rayleigh.csv", ms.reference_histogram("rayleigh", *rng))
    csvio.write_rows(out / "gradstats_summary.csv",
                     ["scale", "n", "mean_magnitude", "tail_mass_3", "n_above"], rows)
    return 0


def cmd_spectrum(cfg) -> int:
    loaders = _loaders(cfg)
    out = _outdir(cfg)
    window = None if cfg["window"] == "none" else cfg["window"]
    res = pipeline.ensemble_spectrum(loaders, cfg["patch_size"], cfg["patches"], cfg["seed"], cfg["threads"],
                                     cfg["demean"], window, cfg["exclude_axes"], cfg["f_lo"], cfg["f_hi"])
    csvio.write_spectrum2d(out / "spectrum2d.csv", res.spec2d)
    csvio.write_spectrum1d(out / "spectrum1d.csv", res.spec1d)
    if res.fit is not None:
        csvio.write_slopefit(out / "slopefit.csv", res.fit)
    else:
        log.warning("too few positive rings for a slope fit; slopefit.csv not written")
    return 0


def _source(cfg) -> SourceSpec:
    if cfg["source.kind"] == "delta":
        if cfg["fixed_size"] is None:
            raise ConfigError("delta source needs fixed_size")
        return SourceSpec.delta(cfg["fixed_size"])
    return SourceSpec.power_law(cfg["gamma"], n_max=cfg["n_max"] or cfg["side"] // 2, n_min=cfg["n_min"])


def _probe(cfg) -> ProbeSettings:
    return ProbeSettings(size=min(cfg["probe.l"], cfg["side"]), count=cfg["probe.count"],
                         f_lo=cfg["f_lo"], f_hi=cfg["f_hi"], exclude_axes=cfg["exclude_axes"])


def _export_lattice(path, lattice, palette: Palette):
    if palette.kind == "binary":
        write_pgm(path, lattice * 255, maxval=255)
    else:
        write_pgm(path, lattice, maxval=palette.i_max)


def cmd_simulate(cfg) -> int:
    source = _source(cfg)
    palette = Palette(cfg["palette.kind"], cfg["i_max"])
    probe = _probe(cfg)
    out = _outdir(cfg)
    states, report = generate_ensemble(
        cfg["images"], cfg["side"], source, palette, steps_per_image=cfg["steps"],
        master_seed=cfg["seed"], probe=probe, threads=cfg["threads"],
        **({} if cfg["steps"] is not None else dict(
            tol=cfg["tol"], amp_tol=cfg["amp_tol"], min_coverage=cfg["min_coverage"],
            first_checkpoint=cfg["first_checkpoint"], step_cap=cfg["step_cap"])),
    )
    for i, s in enumerate(states[:cfg["snapshots"]]):
        _export_lattice(out / f"snapshot_{i:03d}.pgm", s.lattice, palette)
    if report is None:
        probe_rngs = [member_streams(cfg["seed"], i)[1] for i in range(len(states))]
        spec2d, spec1d, fit, _ = measure(states, probe, probe_rngs, cfg["threads"])
    else:
        csvio.write_convergence(out / "convergence.csv", report)
        spec2d, spec1d, fit = report.spectrum2d, report.spectrum, report.checkpoints[-1].fit
    csvio.write_spectrum2d(out / "spectrum2d.csv", spec2d)
    csvio.write_spectrum1d(out / "spectrum1d.csv", spec1d)
    csvio.write_slopefit(out / "slopefit.csv", fit)
    p1 = scaling.detect_periodic_peaks(spec1d, cfg["prominence"])
    p2 = scaling.detect_periodic_peaks(spec2d, cfg["prominence"])
    csvio.write_rows(out / "peaks.csv", ["profile", "freq"],
                     [("ring", f) for f in p1.peaks] + [("grid", f) for f in p2.peaks])
    csvio.write_rows(out / "peak_spacing.csv", ["profile", "spacing"],
                     [("ring", p1.spacing if p1.spacing is not None else "none"),
                      ("grid", p2.spacing if p2.spacing is not None else "none")])
    csvio.write_rows(out / "summary.csv", ["images", "steps", "converged", "coverage", "slope"],
                     [(len(states), states[0].steps_taken, report.converged if report else "none",
                       float(np.mean([s.coverage() for s in states])), fit.slope)])
    return 0


def _sweep_config(cfg) -> scaling.SweepConfig:
    probe = ProbeSettings(size=min(cfg["probe.l"], cfg["side"]), count=cfg["probe.count"],
                          f_lo=cfg["f_lo"], f_hi=cfg["f_hi"], exclude_axes=cfg["exclude_axes"])
    return scaling.SweepConfig(
        side=cfg["side"], n_images=cfg["images"], palette=Palette(cfg["palette.kind"], cfg["i_max"]),
        probe=probe, n_min=cfg["n_min"], n_max=cfg["n_max"], tol=cfg["tol"], amp_tol=cfg["amp_tol"],
        min_coverage=cfg["min_coverage"], first_checkpoint=cfg["first_checkpoint"],
        step_cap=cfg["step_cap"], threads=cfg["threads"],
    )


def _write_sweep(out: Path, results) -> None:
    for r in results:
        tag = csvio.gamma_tag(r.gamma)
        csvio.write_spectrum1d(out / f"spectrum_gamma{tag}.csv", r.spectrum)
        csvio.write_spectrum1d(out / f"rescaled_gamma{tag}.csv", spectral.rescale_spectrum(r.spectrum, r.gamma))
    csvio.write_sweep_summary(out / "summary.csv", results)


def cmd_sweep(cfg) -> int:
    out = _outdir(cfg)
    results = scaling.gamma_sweep(cfg["gammas"], _sweep_config(cfg), cfg["seed"])
    _write_sweep(out, results)
    return 0


def _results_from_dir(directory: Path, cfg) -> list[scaling.SweepResult]:
    files = {g: p for g, p in csvio.spectrum_files(directory).items()
             if any(np.isclose(g, want) for want in cfg["gammas"])}
    if not files:
        raise ScaleInvError(f"no spectrum_gamma*.csv files in {directory}")
    saved = load_kv(directory / "config.txt") if (directory / "config.txt").exists() else {}
    probe_l = int(saved.get("probe.l", cfg["probe.l"]))
    f_lo = cfg["f_lo"] if cfg["f_lo"] is not None else coerce(saved.get("f_lo", "none"), float, True)
    f_hi = cfg["f_hi"] if cfg["f_hi"] is not None else coerce(saved.get("f_hi", "none"), float, True)
    d_lo, d_hi = spectral.default_fit_range(probe_l)
    f_lo = d_lo if f_lo is None else f_lo
    f_hi = d_hi if f_hi is None else f_hi
    results = []
    for gamma, path in files.items():
        spec = csvio.read_spectrum1d(path, probe_l)
        raw, resc = scaling.analyse_spectrum(spec, gamma, f_lo, f_hi)
        side = int(saved.get("side", max(cfg["side"], probe_l)))
        ctx = scaling.ScalingContext(side, probe_l, 1.0)
        results.append(scaling.SweepResult(gamma, spec, raw, resc, ctx))
    return results


def cmd_collapse(cfg) -> int:
    if cfg["input"]:
        results = _results_from_dir(Path(cfg["input"]), cfg)
        out = _outdir(cfg)
    else:
        out = _outdir(cfg)
        results = scaling.gamma_sweep(cfg["gammas"], _sweep_config(cfg), cfg["seed"])
        _write_sweep(out, results)
    report = scaling.collapse_check(results, cfg["target"], cfg["collapse_tol"])
    (out / "collapse.txt").write_text(report.summary() + "\n")
    csvio.write_collapse(out / "collapse.csv", report)
    print(report.summary())
    return 0


HANDLERS = {
    "pixstats": cmd_pixstats,
    "gradstats": cmd_gradstats,
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "collapse": cmd_collapse,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(args.command, args)
        return HANDLERS[args.command](cfg)
    except (ScaleInvError, ConfigError, ValueError, OSError) as exc:
        print(f"scaleinv {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
