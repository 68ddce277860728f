"""Command-line entry point: ``revar {fit,synth,tpsd,compare,info,kolmo,demo}``.

Exit codes: 0 success, 2 I/O or file format, 3 validation, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .config import RunConfig, build_config, load_config_file
from .demo import PlantedConfig, planted_series
from .diagnostics import aggregate_tpsd, compare_tpsd, export_plotdata, read_plotdata
from .errors import FormatError, RevarError, ValidationError
from .io_model import describe, load_model, load_series, save_model, save_series
from .kolmogorov import TurbulenceParams, frozen_flow_series, generate_screen
from .pipeline import FitConfig, fit_revar
from .preprocess import deflection_x
from .series import FlowConditions, WavefrontSeries
from .synthesis import SynthesisRequest, synthesize
from .var_model import is_stable

EXIT_IO = 2
EXIT_VALIDATION = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config(args, keys: list[str]) -> RunConfig:
    file_values = load_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {k: getattr(args, k, None) for k in keys}
    return build_config(file_values, overrides)


def _flow(cfg: RunConfig) -> FlowConditions | None:
    if cfg.u_inf is None:
        return None
    return FlowConditions(cfg.u_inf, cfg.delta)


# --- subcommands ---------------------------------------------------------------


def cmd_fit(args) -> int:
    cfg = _config(
        args,
        ["energy_threshold", "order", "max_order", "k_modes", "remove_ttp", "transpose",
         "segment_len", "overlap", "seed"],
    )
    series = load_series(args.train)
    fit_cfg = FitConfig(
        energy_threshold=cfg.energy_threshold,
        order=cfg.parsed_order(),
        max_order=cfg.max_order,
        k_modes=cfg.k_modes,
        remove_ttp=cfg.remove_ttp,
        transpose=cfg.transpose,
        segment_len=cfg.segment_len,
        overlap=cfg.overlap,
        seed=cfg.seed,
    )
    model = fit_revar(series, fit_cfg)
    model.metadata["run_config"] = cfg.as_dict()
    model.metadata["training_sha256"] = _sha256(args.train)
    save_model(model, args.out)

    stable, rho = is_stable(model.var)
    w = model.metadata["whiteness"]
    k = model.longrange.k_modes if model.longrange is not None else 0
    print(f"fitted ReVAR model -> {args.out}")
    print(f"  training frames T={series.n_frames}, valid pixels P={model.geometry.n_pixels}")
    print(f"  PCA rank r={model.r} (energy threshold {cfg.energy_threshold})")
    print(f"  VAR order p={model.p}, spectral radius {rho:.6g} ({'stable' if stable else 'UNSTABLE'})")
    print(
        f"  residual whiteness: max|cov-I|={w['max_cov_error']:.3g}, "
        f"max|lag-1 corr|={w['max_lag1_corr']:.3g}, max|mean|={w['max_row_mean']:.3g} "
        f"(tolerance {5 / math.sqrt(w['n_samples']):.3g})"
    )
    print(f"  long-range bank: {k} mode(s)")
    return 0


def cmd_synth(args) -> int:
    cfg = _config(args, ["seed", "longrange", "shrink", "steps"])
    if cfg.steps is None:
        raise ValidationError("--steps is required")
    model = load_model(args.model)
    req = SynthesisRequest(n_steps=cfg.steps, seed=cfg.seed, apply_longrange=cfg.longrange, allow_shrink=cfg.shrink)
    out = synthesize(model, req)
    out.meta["run_config"] = {k: cfg.as_dict()[k] for k in ("seed", "longrange", "shrink", "steps")}
    out.meta["model_sha256"] = _sha256(args.model)
    save_series(out, args.out)
    print(f"synthesized {out.n_frames} frame(s) -> {args.out}")
    return 0


def _tpsd_series(series: WavefrontSeries, quantity: str) -> WavefrontSeries:
    if quantity == "theta_x":
        return deflection_x(series)
    return series


def cmd_tpsd(args) -> int:
    cfg = _config(args, ["u_inf", "delta", "segment_len", "overlap"])
    series = _tpsd_series(load_series(args.series), args.quantity)
    curve = aggregate_tpsd(series, cfg.segment_len, cfg.overlap)
    label = args.label or args.quantity
    meta = {
        "quantity": args.quantity,
        "source_label": series.label,
        "source_sha256": _sha256(args.series),
        "run_config": {k: cfg.as_dict()[k] for k in ("u_inf", "delta", "segment_len", "overlap")},
    }
    export_plotdata({label: curve}, args.out, flow=_flow(cfg), meta=meta)
    print(f"TPSD of {args.quantity} ({curve.freqs.size} bins, df={curve.df:.6g} Hz) -> {args.out}")
    return 0


def _pick(curves: dict, label: str | None, path):
    if label is None:
        return next(iter(curves.values()))
    if label not in curves:
        raise ValidationError(f"{path}: no curve labelled {label!r} (have {', '.join(curves)})")
    return curves[label]


def cmd_compare(args) -> int:
    ref_curves, _ = read_plotdata(args.ref)
    test_curves, _ = read_plotdata(args.test)
    ref = _pick(ref_curves, args.ref_label, args.ref)
    test = _pick(test_curves, args.test_label, args.test)
    report = compare_tpsd(ref, test, args.f_min, args.f_max)
    print(report.summary())
    print("json: " + json.dumps(report.as_dict(), sort_keys=True))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
    return 0


def cmd_info(args) -> int:
    print(describe(args.path))
    return 0


def cmd_kolmo(args) -> int:
    cfg = _config(
        args,
        ["r0", "L0", "l0", "n", "dx", "velocity", "dt", "steps", "seed", "wavelength", "subharmonics"],
    )
    if cfg.r0 is None or cfg.dx is None:
        raise ValidationError("--r0 and --dx are required")
    params = TurbulenceParams(r0=cfg.r0, N=cfg.n, dx=cfg.dx, L0=cfg.L0, l0=cfg.l0)
    if cfg.velocity is not None:
        if cfg.dt is None or cfg.steps is None:
            raise ValidationError("--velocity needs --dt and --steps")
        series = frozen_flow_series(
            params, cfg.velocity, cfg.dt, cfg.steps, cfg.seed, cfg.wavelength, cfg.subharmonics
        )
    else:
        phase = generate_screen(params, cfg.seed, cfg.subharmonics)
        opd = phase * (cfg.wavelength / (2 * np.pi))
        series = WavefrontSeries(
            opd, np.ones(opd.shape, bool), cfg.dt or 1.0, cfg.dx, label="kolmogorov-screen"
        )
    series.meta["run_config"] = {
        k: cfg.as_dict()[k]
        for k in ("r0", "L0", "l0", "n", "dx", "velocity", "dt", "steps", "seed", "wavelength", "subharmonics")
    }
    save_series(series, args.out)
    print(f"Kolmogorov baseline: {series.n_frames} frame(s) of {cfg.n}x{cfg.n} -> {args.out}")
    return 0


def cmd_demo(args) -> int:
    config = PlantedConfig(n=args.n, n_frames=args.frames, seed=args.seed, noise_rms=args.noise_rms)
    series = planted_series(config)
    save_series(series, args.out)
    print(f"planted demo series: {series.n_frames} frames of {args.n}x{args.n} -> {args.out}")
    return 0


# --- parser --------------------------------------------------------------------


def _bool_flag(p, name: str, dest: str, help: str):
    p.add_argument(f"--{name}", dest=dest, action="store_true", default=None, help=help)
    p.add_argument(f"--no-{name}", dest=dest, action="store_false", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="revar", description="ReVAR wavefront time-series fitting and synthesis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a ReVAR model to a training series")
    p.add_argument("train", help="training series (.wfs)")
    p.add_argument("--out", required=True, help="model file to write (.rvm)")
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--energy-threshold", dest="energy_threshold", type=float, help="PCA energy kept (default 0.999)")
    p.add_argument("--order", help="VAR order or 'auto' for BIC (default 3)")
    p.add_argument("--max-order", dest="max_order", type=int, help="upper bound for --order auto (default 10)")
    p.add_argument("--k-modes", dest="k_modes", type=int, help="modes given long-range correction (default min(r, 10))")
    _bool_flag(p, "remove-ttp", "remove_ttp", "remove tip/tilt/piston before fitting (default on)")
    _bool_flag(p, "transpose", "transpose", "swap x/y so stream-wise runs along columns (default off)")
    p.add_argument("--segment-len", dest="segment_len", type=int, help="Welch segment for the long-range bank")
    p.add_argument("--overlap", type=float, help="Welch overlap fraction (default 0.5)")
    p.add_argument("--seed", type=int, help="recorded in model metadata")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="synthesize a series from a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--steps", type=int, help="number of frames N_s")
    p.add_argument("--seed", type=int, help="noise seed (default 0)")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--no-longrange", dest="longrange", action="store_false", default=None,
                   help="skip the long-range spectral correction")
    p.add_argument("--shrink", dest="shrink", action="store_true", default=None,
                   help="shrink an unstable VAR to radius 1-1e-6 instead of failing")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("tpsd", help="aperture-averaged TPSD of a series as plot data")
    p.add_argument("series")
    p.add_argument("--quantity", choices=["opd", "theta_x"], default="opd")
    p.add_argument("--out", required=True)
    p.add_argument("--label", help="curve label (default: quantity)")
    p.add_argument("--u-inf", dest="u_inf", type=float, help="free-stream velocity, m/s")
    p.add_argument("--delta", type=float, help="boundary-layer thickness, m")
    p.add_argument("--segment-len", dest="segment_len", type=int)
    p.add_argument("--overlap", type=float)
    p.add_argument("--config")
    p.set_defaults(func=cmd_tpsd)

    p = sub.add_parser("compare", help="compare two TPSD plot-data files")
    p.add_argument("ref")
    p.add_argument("test")
    p.add_argument("--ref-label")
    p.add_argument("--test-label")
    p.add_argument("--f-min", dest="f_min", type=float)
    p.add_argument("--f-max", dest="f_max", type=float)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("info", help="summarise a series or model file")
    p.add_argument("path")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("kolmo", help="Kolmogorov/von Karman baseline screen or frozen-flow series")
    p.add_argument("--r0", type=float)
    p.add_argument("--L0", type=float)
    p.add_argument("--l0", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--dx", type=float)
    p.add_argument("--velocity", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--wavelength", type=float)
    p.add_argument("--subharmonics", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_kolmo)

    p = sub.add_parser("demo", help="write the bundled planted training series")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--frames", type=int, default=8192)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-rms", dest="noise_rms", type=float, default=0.0)
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            return args.func(args)
    except RevarError as exc:
        print(f"revar {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"revar {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
