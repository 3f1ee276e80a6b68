"""Command-line entry point: ``vfshm <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import io
from .config import load_config
from .core import FrequencyGrid, FrequencyResponse, evaluate_model, poles_to_modal
from .damage import DamageReport, assess, render_report
from .errors import ConfigError, DataError, NumericError, VfshmError
from .lscf import lscf_fit, polynomial_poles
from .metrics import rmsd, windowed_metric, xcorr_metric
from .simulators import (
    PZT5A,
    apply_damage,
    emi_coupled_impedance,
    mdof_frf,
    mdof_mechanical_impedance,
    mdof_poles,
    benchmark_system,
)
from .stabilization import order_sweep, stable_modal_set
from .vectfit import vector_fit

logger = logging.getLogger("vfshm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")

    def exit(self, status=0, message=None):
        if status:
            raise UsageError(message or "")
        if message:
            sys.stderr.write(message)
        raise SystemExit(status)


def _range(text, n_parts, conv=float):
    parts = text.split(":")
    if len(parts) != n_parts:
        raise argparse.ArgumentTypeError(f"expected {n_parts} ':'-separated values, got {text!r}")
    try:
        return tuple(conv(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}") from None


def _band(text):
    return _range(text, 2)


def _orders(text):
    return _range(text, 3, int)


def _damage_edit(text):
    idx, kf, cf = _range(text, 3)
    if int(idx) != idx:
        raise argparse.ArgumentTypeError("element index must be an integer")
    return int(idx), kf, cf


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="seed for randomized restarts and noise")
    common.add_argument("--band", type=_band, metavar="LO:HI", help="analysis band in Hz")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="vfshm", description="Vector Fitting tools for impedance-based damage assessment.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="write synthetic measurement data")
    s.add_argument("--system", choices=("5dof", "emi"), default="5dof")
    s.add_argument("--damaged", action="store_true", help="apply the k2 x0.75, c2 x1.25 benchmark damage")
    s.add_argument("--damage", type=_damage_edit, action="append", metavar="IDX:KF:CF",
                   help="custom element edit (zero-based element index); repeatable")
    s.add_argument("--points", type=int, default=2001)
    s.add_argument("--snr-db", type=float, help="add complex Gaussian noise at this SNR")
    s.add_argument("--out", required=True)

    f = sub.add_parser("fit", parents=[common], help="fit a rational model to a measurement")
    f.add_argument("input")
    f.add_argument("--method", choices=("vf", "lscf"), default="vf")
    f.add_argument("--order", type=int)
    f.add_argument("--max-iterations", type=int)
    f.add_argument("--no-d", action="store_true", help="drop the constant term")
    f.add_argument("--no-h", action="store_true", help="drop the proportional term")
    f.add_argument("--out", default=None)

    st = sub.add_parser("stabilize", parents=[common], help="order sweep and stabilization diagram")
    st.add_argument("input")
    st.add_argument("--orders", type=_orders, metavar="MIN:MAX:STEP")
    st.add_argument("--freq-tol", type=float)
    st.add_argument("--damp-tol", type=float)
    st.add_argument("--min-persistence", type=int)
    st.add_argument("--out", default=None)

    m = sub.add_parser("metrics", parents=[common], help="RMSD / XCORR, whole band and windowed")
    m.add_argument("--baseline", required=True)
    m.add_argument("--investigative", required=True)
    m.add_argument("--window", type=float, help="window width in Hz")
    m.add_argument("--mode", choices=("real", "magnitude", "complex"))
    m.add_argument("--normalization", choices=("pointwise", "aggregate"))
    m.add_argument("--out", default=None)

    a = sub.add_parser("assess", parents=[common], help="full pole-based damage assessment")
    a.add_argument("--baseline", required=True)
    a.add_argument("--investigative", required=True)
    a.add_argument("--control", help="repeat baseline measurement used to set thresholds")
    a.add_argument("--orders", type=_orders, metavar="MIN:MAX:STEP")
    a.add_argument("--freq-threshold", type=float, help="percent")
    a.add_argument("--damp-threshold", type=float, help="percent")
    a.add_argument("--match-tol", type=float, help="percent")
    a.add_argument("--out", default=None)

    r = sub.add_parser("report", help="render a saved assessment as text")
    r.add_argument("report_json")
    return p


def _config(args):
    cfg = load_config(getattr(args, "config", None))
    over = {"seed": getattr(args, "seed", None)}
    band = getattr(args, "band", None)
    if band:
        over["f_lo"], over["f_hi"] = band
    if getattr(args, "out", None) and args.command != "simulate":
        over["output_dir"] = args.out
    orders = getattr(args, "orders", None)
    if orders:
        over["n_min"], over["n_max"], over["n_step"] = orders
    mapping = {
        "order": "order",
        "max_iterations": "max_iterations",
        "freq_tol": "freq_tol",
        "damp_tol": "damp_tol",
        "min_persistence": "min_persistence",
        "window": "window_width",
        "mode": "metric_mode",
        "normalization": "rmsd_normalization",
        "freq_threshold": "freq_threshold_pct",
        "damp_threshold": "damp_threshold_pct",
        "match_tol": "match_tol_pct",
    }
    for attr, key in mapping.items():
        if getattr(args, attr, None) is not None:
            over[key] = getattr(args, attr)
    if getattr(args, "no_d", False):
        over["include_d"] = False
    if getattr(args, "no_h", False):
        over["include_h"] = False
    return cfg.with_overrides(**over)


def _outdir(cfg):
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _rms(values):
    return float(np.sqrt(np.mean(np.abs(values) ** 2)))


def _modal_rows(modal):
    return [{"frequency_hz": m.frequency, "damping_ratio": m.damping_ratio,
             "pole": [m.pole.real, m.pole.imag]} for m in modal.modes]


def cmd_simulate(args, cfg):
    lo, hi = cfg.band if cfg.f_lo is not None else ((100.0, 450.0) if args.system == "5dof" else (30e3, 100e3))
    if args.points < 2:
        raise ConfigError("--points must be >= 2")
    grid = FrequencyGrid.linspace(lo, hi, args.points)
    system = benchmark_system()
    edits = list(args.damage or [])
    if args.damaged:
        edits.append((1, 0.75, 1.25))
    if edits:
        system = apply_damage(system, edits)
    meta = {"system": args.system, "damage": ";".join(f"{i}:{k:g}:{c:g}" for i, k, c in edits) or "none"}
    if args.system == "5dof":
        H = mdof_frf(system, grid)
    else:
        H, flagged = emi_coupled_impedance(PZT5A, mdof_mechanical_impedance(system), grid)
        if flagged.any():
            logger.warning("%d grid point(s) sit on a tan(kl) pole", int(flagged.sum()))
    if args.snr_db is not None:
        rng = np.random.default_rng(cfg.seed)
        sigma = _rms(H.values) * 10 ** (-args.snr_db / 20)
        noise = (rng.standard_normal(len(H)) + 1j * rng.standard_normal(len(H))) * sigma / np.sqrt(2)
        H = FrequencyResponse(H.grid, H.values + noise)
        meta.update(snr_db=args.snr_db, seed=cfg.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    io.save_measurement(out, H, meta)
    if args.system == "5dof":
        io.save_poles(out.with_suffix(".poles.csv"), mdof_poles(system), {"units": "rad/s"})
    print(f"wrote {out} ({len(H)} points, {lo:g}-{hi:g} Hz)")
    return EXIT_OK


def cmd_fit(args, cfg):
    H = io.load_measurement(args.input, cfg.band)
    out = _outdir(cfg)
    t0 = time.perf_counter()
    if args.method == "vf":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model, diag = vector_fit(H, cfg.vf_options())
        fitted = evaluate_model(model, H.grid)
        modal = poles_to_modal(model.poles)
        diagnostics = diag.to_dict()
        io.write_json(out / "model.json", {"method": "vf", **model.to_dict()})
    else:
        pmodel, cond = lscf_fit(H, cfg.order)
        fitted = pmodel.evaluate(H.grid)
        poles = polynomial_poles(pmodel)
        stable = poles[poles.real < 0]
        modal = poles_to_modal(stable)
        diagnostics = {
            "condition_estimate": cond,
            "final_rms_error": _rms(H.values - fitted.values),
            "unstable_poles": [[p.real, p.imag] for p in poles[poles.real >= 0]],
            "seed": cfg.seed,
        }
        io.write_json(out / "model.json", {"method": "lscf", **pmodel.to_dict(),
                                           "poles": [[p.real, p.imag] for p in poles]})
    diagnostics["rms_data"] = _rms(H.values)
    diagnostics["relative_rms_error"] = diagnostics["final_rms_error"] / diagnostics["rms_data"]
    diagnostics["order"] = cfg.order
    diagnostics["modes"] = _modal_rows(modal)
    io.write_json(out / "diagnostics.json", diagnostics)
    io.save_measurement(out / "fitted.csv", fitted, {"method": args.method, "order": cfg.order})
    logger.info("fit finished in %.3f s", time.perf_counter() - t0)
    print(f"{args.method} order {cfg.order}: relative rms error {diagnostics['relative_rms_error']:.3e}")
    for m in modal.modes:
        print(f"  {m.frequency:14.6f} Hz   zeta {m.damping_ratio:.4e}")
    return EXIT_OK


def _sweep(path, cfg):
    H = io.load_measurement(path, cfg.band)
    result = order_sweep(H, cfg.sweep_config(), cfg.vf_options(cfg.n_min))
    return H, result


def cmd_stabilize(args, cfg):
    H, result = _sweep(args.input, cfg)
    out = _outdir(cfg)
    rows = result.diagram_rows()
    io.save_stabilization(out / "stabilization.csv", rows)
    (out / "stabilization.svg").write_text(io.stabilization_svg(rows, H.grid.f_min, H.grid.f_max))
    modal = stable_modal_set(result, cfg.freq_tol)
    io.write_json(out / "modes.json", {"modes": _modal_rows(modal),
                                       "failed_orders": [list(f) for f in result.failures],
                                       "seed": cfg.seed})
    print(f"{len(modal)} stable mode(s) over orders {cfg.n_min}..{cfg.n_max}")
    for m in modal.modes:
        print(f"  {m.frequency:14.6f} Hz   zeta {m.damping_ratio:.4e}")
    return EXIT_OK


def _standard_metrics(zk, zb, cfg):
    if zk.grid != zb.grid:
        raise DataError("baseline and investigative measurements use different frequency grids")
    return {
        "rmsd": rmsd(zk, zb, cfg.metric_mode, cfg.rmsd_normalization),
        "xcorr": xcorr_metric(zk, zb, cfg.metric_mode),
    }


def cmd_metrics(args, cfg):
    zb = io.load_measurement(args.baseline, cfg.band)
    zk = io.load_measurement(args.investigative, cfg.band)
    out = _outdir(cfg)
    values = _standard_metrics(zk, zb, cfg)
    io.write_json(out / "metrics.json", {**values, "mode": cfg.metric_mode,
                                         "normalization": cfg.rmsd_normalization,
                                         "window_width_hz": cfg.window_width})
    (out / "metrics.csv").write_text(
        "metric,value\n" + "".join(f"{k},{io.fmt(v)}\n" for k, v in sorted(values.items()))
    )
    for which in ("rmsd", "xcorr"):
        series = windowed_metric(zk, zb, cfg.window_width, which, cfg.metric_mode, cfg.rmsd_normalization)
        io.save_windowed(out / f"windowed_{which}.csv", series)
        (out / f"windowed_{which}.svg").write_text(io.windowed_svg(series))
    print(f"rmsd {values['rmsd']:.6g}   xcorr {values['xcorr']:.6g}")
    return EXIT_OK


def cmd_assess(args, cfg):
    zb, base_sweep = _sweep(args.baseline, cfg)
    zk, inv_sweep = _sweep(args.investigative, cfg)
    base = stable_modal_set(base_sweep, cfg.freq_tol)
    inv = stable_modal_set(inv_sweep, cfg.freq_tol)
    control = None
    if args.control:
        control = stable_modal_set(_sweep(args.control, cfg)[1], cfg.freq_tol)
    try:
        metric_values = _standard_metrics(zk, zb, cfg)
    except DataError as exc:
        logger.warning("traditional metrics skipped: %s", exc)
        metric_values = None
    report = assess(base, inv, (cfg.freq_threshold_pct, cfg.damp_threshold_pct), metric_values,
                    control=control, match_tol_pct=cfg.match_tol_pct)
    out = _outdir(cfg)
    data = report.to_dict()
    data["seed"] = cfg.seed
    io.write_json(out / "report.json", data)
    text = render_report(report)
    (out / "report.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args, cfg):
    data = io.read_json(args.report_json)
    try:
        report = DamageReport.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise DataError(f"{args.report_json}: not an assessment report ({exc})") from None
    sys.stdout.write(render_report(report))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "stabilize": cmd_stabilize,
    "metrics": cmd_metrics,
    "assess": cmd_assess,
    "report": cmd_report,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        sys.stderr.write(f"vfshm: configuration error: {exc}\n")
        return EXIT_USAGE
    except DataError as exc:
        sys.stderr.write(f"vfshm: data error: {exc}\n")
        return EXIT_DATA
    except NumericError as exc:
        sys.stderr.write(f"vfshm: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except VfshmError as exc:  # pragma: no cover - every subclass is handled above
        sys.stderr.write(f"vfshm: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"vfshm: {exc}\n")
        return EXIT_DATA
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        sys.stderr.write(f"vfshm: numeric failure: {exc}\n")
        return EXIT_NUMERIC


cli_dispatch = main


if __name__ == "__main__":
    sys.exit(main())
