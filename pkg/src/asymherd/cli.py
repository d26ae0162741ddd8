"""Command-line entry point: ``asymherd <command> ...``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 parameter error,
5 fit failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, _accel, dataio, engine, experiments, stats
from .errors import (
    DataError,
    DegenerateSeriesError,
    FitError,
    InsufficientDataError,
    InvalidParameterError,
    InvalidStateError,
)

EXIT_OK = 0
EXIT_DATA = 3
EXIT_PARAM = 4
EXIT_FIT = 5

_MODEL_FLAGS = {
    "n_agents": ("--n-agents", int),
    "p": ("--p", float),
    "eta": ("--eta", float),
    "max_horizon": ("--max-horizon", int),
    "init_zero_steps": ("--init-zero-steps", int),
    "total_steps": ("--total-steps", int),
    "warmup_discard": ("--warmup", int),
    "rng_seed": ("--seed", int),
}


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_model_options(p: argparse.ArgumentParser, runs_default: int | None = 100):
    g = p.add_argument_group("model")
    for dest, (flag, typ) in _MODEL_FLAGS.items():
        g.add_argument(flag, dest=dest, type=typ, default=None)
    if runs_default is not None:
        p.add_argument("--runs", type=int, default=None, help=f"runs per ensemble (default {runs_default})")
    p.add_argument("--jobs", type=int, default=None, help="worker processes for independent runs")


def _resolve(args, config: dict, **overrides) -> tuple[engine.ModelParams, dict]:
    model = dict(config.get("model", {}))
    for dest in _MODEL_FLAGS:
        value = getattr(args, dest, None)
        if value is not None:
            model[dest] = value
    model.update({k: v for k, v in overrides.items() if v is not None})
    params = engine.ModelParams.from_dict(model)
    resolved = {
        "model": params.to_dict(),
        "runs": _pick(args, config, "runs", 100),
        "jobs": _pick(args, config, "jobs", 1),
    }
    return params, resolved


def _pick(args, config, name, default):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return config.get(name, default)


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read config: {exc.strerror}", path=path) from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON config: {exc.msg}", path=path, line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise DataError("config must be a JSON object", path=path)
    return data


def _slope_from_args(args, params, resolved) -> tuple[float, dict]:
    if args.slope is not None:
        return float(args.slope), {"source": "flag", "slope": float(args.slope)}
    if args.slope_file is not None:
        bundle = dataio.read_results(args.slope_file)
        if not bundle.slopes:
            raise DataError("results file holds no slope record", path=args.slope_file)
        sweep = next(iter(bundle.slopes.values()))
        return sweep.slope, {"source": str(args.slope_file), "slope": sweep.slope}
    sweep, path, hit = experiments.cached_slope(params, runs=resolved["runs"], jobs=resolved["jobs"])
    print(f"slope {sweep.slope:.3f} ({'cached' if hit else 'computed'}: {path})", file=sys.stderr)
    return sweep.slope, {"source": "cache", "cache_file": str(path), "slope": sweep.slope}


def _write_bundle(bundle, out):
    if out is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        dataio.write_results(bundle, out)


def _fit_line(label, fit):
    if fit is None:
        return f"{label:<24} fit failed"
    flag = "  [low confidence]" if fit.low_confidence else ""
    return (f"{label:<24} c={fit.c:+.3f}+-{fit.c_stderr:.3f}  xi={fit.xi:+.4f}+-{fit.xi_stderr:.4f}"
            f"  tau={fit.tau:.1f}{flag}")


def cmd_calibrate(args, config) -> int:
    params, resolved = _resolve(args, config)
    series = dataio.read_market_csv(args.csv, schema=args.schema, name=args.name)
    if series.volume is None or not series.has_volume:
        raise InsufficientDataError("volume required for calibration")
    slope, slope_meta = _slope_from_args(args, params, resolved)
    result = experiments.calibrate_index(series, slope, args.windows)
    print(result.table_row())
    bundle = dataio.ResultBundle(
        metadata={"command": "calibrate", "input": str(args.csv), "windows": args.windows, "slope": slope_meta,
                  "config": resolved},
        calibrations={result.name or "index": result},
    )
    _write_bundle(bundle, args.out)
    return EXIT_OK


def cmd_slope(args, config) -> int:
    params, resolved = _resolve(args, config)
    values = args.delta_R
    sweep, path, hit = experiments.cached_slope(params, values, resolved["runs"], resolved["jobs"],
                                                refresh=args.refresh)
    print(f"slope={sweep.slope:.3f}+-{sweep.slope_stderr:.3f}  intercept={sweep.intercept:+.4f}  "
          f"({'cached' if hit else 'computed'}: {path})")
    for pt in sweep.points:
        print(f"  dR={pt.delta_R:+d}  dr={pt.mean_delta_r:+.5f}+-{pt.stderr:.5f}  runs={pt.runs}")
    bundle = dataio.ResultBundle(metadata={"command": "slope", "config": resolved}, slopes={"slope": sweep})
    _write_bundle(bundle, args.out)
    return EXIT_OK


def cmd_simulate(args, config) -> int:
    params, resolved = _resolve(args, config, alpha=args.alpha, delta_r_model=args.delta_R)
    runs = resolved["runs"]
    raws = engine.simulate_ensemble(params, runs, jobs=resolved["jobs"])
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = max(3, len(str(runs - 1)))
    rows = []
    for i, raw in enumerate(raws):
        dataio.write_series(raw, out_dir / f"run_{i:0{width}d}.txt",
                            {"run_index": i, "model": params.to_dict()})
        x = raw.astype(np.float64)
        sd = x.std()
        kurt = float(np.mean(((x - x.mean()) / sd) ** 4) - 3.0) if sd > 0 else float("nan")
        rows.append({"run": i, "mean": float(x.mean()), "std": float(sd), "excess_kurtosis": kurt,
                     "max_abs": int(np.abs(raw).max())})
    summary = {k: float(np.mean([r[k] for r in rows])) for k in ("mean", "std", "excess_kurtosis")}
    summary["max_abs"] = int(max(r["max_abs"] for r in rows))
    summary["runs"] = runs
    summary["retained_steps"] = params.retained_steps
    bundle = dataio.ResultBundle(metadata={"command": "simulate", "config": resolved},
                                 tables={"ensemble": summary, "runs": rows})
    dataio.write_results(bundle, out_dir / "summary.json")
    print(f"wrote {runs} series of {params.retained_steps} returns to {out_dir}  "
          f"(mean std {summary['std']:.2f}, excess kurtosis {summary['excess_kurtosis']:.2f})")
    return EXIT_OK


def _analysis_bundle(analysis, metadata) -> dataio.ResultBundle:
    bundle = dataio.ResultBundle(
        metadata=metadata,
        curves={"L": analysis.leverage, "A": analysis.volatility},
        tables={"tail": {"thresholds": analysis.thresholds, "probability": analysis.tail},
                "n_series": analysis.n_series},
    )
    if analysis.fit is not None:
        bundle.fits["L"] = analysis.fit
    if analysis.fit_error is not None:
        bundle.tables["fit_error"] = analysis.fit_error
    if analysis.xi_test is not None:
        t = analysis.xi_test
        bundle.tables["xi_ttest"] = {"t": t.t_statistic, "dof": t.dof, "p_value": t.p_value, "mean": t.mean,
                                     "stderr": t.stderr}
    return bundle


def _export_curves(bundle, export_dir, prefix=""):
    if export_dir is None:
        return
    d = Path(export_dir)
    d.mkdir(parents=True, exist_ok=True)
    for name, curve in bundle.curves.items():
        dataio.export_curve(curve, d / f"{prefix}{name.replace('/', '_')}.dat")


def cmd_analyze(args, config) -> int:
    if args.csv is not None:
        series = dataio.read_market_csv(args.csv, schema=args.schema)
        raws = [experiments.log_returns(series)]
        inputs = [str(args.csv)]
    else:
        if not args.files:
            raise InvalidParameterError("give series files or --csv")
        raws = [dataio.read_series(f)[0] for f in args.files]
        inputs = [str(f) for f in args.files]
    analysis = experiments.analyze_ensemble(raws, args.max_lag, tuple(args.fit_range), args.thresholds,
                                            per_series_fits=len(raws) > 1)
    meta = {"command": "analyze", "inputs": inputs, "max_lag": int(analysis.leverage.lags[-1]),
            "fit_range": list(args.fit_range)}
    bundle = _analysis_bundle(analysis, meta)
    _write_bundle(bundle, args.out)
    _export_curves(bundle, args.export_dir)
    lev = analysis.leverage
    head = ", ".join(f"{v:+.3f}" for v in lev.values[:5])
    print(f"series={analysis.n_series}  L(1..5)=[{head}]  A(1)={analysis.volatility.values[0]:+.3f}")
    print(_fit_line("L(t) fit", analysis.fit))
    if analysis.fit is None:
        print(f"fit failure: {analysis.fit_error}", file=sys.stderr)
        return EXIT_FIT
    return EXIT_OK


def cmd_controls(args, config) -> int:
    params, resolved = _resolve(args, config)
    curves = experiments.run_controls(args.market, params, resolved["runs"], args.max_lag, resolved["jobs"])
    bundle = dataio.ResultBundle(
        metadata={"command": "controls", "market": args.market, "config": resolved,
                  "cases": {k: {"alpha": a, "delta_R": d} for k, (a, d) in experiments.CONTROL_CASES[args.market].items()}},
        curves={f"L/{name}": c for name, c in curves.items()},
    )
    _write_bundle(bundle, args.out)
    _export_curves(bundle, args.export_dir)
    for name, c in curves.items():
        vals = " ".join(f"{v:+.3f}" for v in c.values[:10])
        print(f"{name:<22} L(1..10): {vals}")
    return EXIT_OK


def cmd_reproduce(args, config) -> int:
    params, resolved = _resolve(args, config)
    series = dataio.read_market_csv(args.csv, schema=args.schema, name=args.name)
    if series.volume is None or not series.has_volume:
        raise InsufficientDataError("volume required for calibration")
    slope, slope_meta = _slope_from_args(args, params, resolved)
    calib, sim_params, emp, sim = experiments.reproduce(
        series, params, slope, resolved["runs"], args.windows, args.max_lag, tuple(args.fit_range),
        args.alpha_source, resolved["jobs"])
    print(calib.table_row())
    print(f"simulated with alpha={sim_params.alpha}, delta_R={sim_params.delta_r_model}")
    print(_fit_line(f"{calib.name or 'index'} empirical", emp.fit))
    print(_fit_line("simulation", sim.fit))
    bundle = dataio.ResultBundle(
        metadata={"command": "reproduce", "input": str(args.csv), "slope": slope_meta, "config": resolved,
                  "simulation_model": sim_params.to_dict(), "alpha_source": args.alpha_source},
        calibrations={calib.name or "index": calib},
        curves={"L/empirical": emp.leverage, "L/simulation": sim.leverage,
                "A/empirical": emp.volatility, "A/simulation": sim.volatility},
        fits={k: v for k, v in (("L/empirical", emp.fit), ("L/simulation", sim.fit)) if v is not None},
        tables={"tail": {"thresholds": sim.thresholds, "empirical": emp.tail, "simulation": sim.tail}},
    )
    if sim.xi_test is not None:
        bundle.tables["xi_ttest_simulation"] = {"t": sim.xi_test.t_statistic, "dof": sim.xi_test.dof,
                                                "p_value": sim.xi_test.p_value}
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataio.write_results(bundle, out_dir / "report.json")
    _export_curves(bundle, out_dir)
    return EXIT_OK if emp.fit is not None and sim.fit is not None else EXIT_FIT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asymherd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({_accel.BACKEND})")
    parser.add_argument("--config", default=None, help="JSON file with default settings")
    sub = parser.add_subparsers(dest="command", required=True)

    def slope_source(p):
        p.add_argument("--slope", type=float, default=None, help="delta_R/delta_r slope to use")
        p.add_argument("--slope-file", default=None, help="results file written by the slope command")

    p = sub.add_parser("calibrate", help="determine alpha and delta_R from an index CSV")
    p.add_argument("csv")
    p.add_argument("--schema", choices=sorted(dataio.SCHEMAS), default=None)
    p.add_argument("--name", default=None)
    p.add_argument("--windows", type=int, default=8)
    p.add_argument("--out", default=None)
    slope_source(p)
    _add_model_options(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("slope", help="simulate the delta_R vs delta_r linear response")
    p.add_argument("--delta-R", dest="delta_R", type=_int_list, default=list(range(-4, 5)),
                   help="comma list or lo..hi (default -4..4)")
    p.add_argument("--refresh", action="store_true", help="recompute even if cached")
    p.add_argument("--out", default=None)
    _add_model_options(p)
    p.set_defaults(func=cmd_slope)

    p = sub.add_parser("simulate", help="simulate an ensemble and write one series file per run")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--delta-R", dest="delta_R", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _add_model_options(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="L(t), A(t), tail distribution and exponential fit")
    p.add_argument("files", nargs="*")
    p.add_argument("--csv", default=None, help="analyze an index CSV instead of series files")
    p.add_argument("--schema", choices=sorted(dataio.SCHEMAS), default=None)
    p.add_argument("--max-lag", type=int, default=100)
    p.add_argument("--fit-range", type=int, nargs=2, default=list(stats.DEFAULT_FIT_RANGE), metavar=("LO", "HI"))
    p.add_argument("--thresholds", type=_float_list, default=list(experiments.DEFAULT_THRESHOLDS))
    p.add_argument("--out", default=None)
    p.add_argument("--export-dir", default=None, help="write two-column curve files here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("controls", help="symmetric/asymmetric control experiments")
    p.add_argument("--market", choices=sorted(experiments.CONTROL_CASES), required=True)
    p.add_argument("--max-lag", type=int, default=40)
    p.add_argument("--out", default=None)
    p.add_argument("--export-dir", default=None)
    _add_model_options(p)
    p.set_defaults(func=cmd_controls)

    p = sub.add_parser("reproduce", help="calibrate, simulate and compare one index end to end")
    p.add_argument("csv")
    p.add_argument("--schema", choices=sorted(dataio.SCHEMAS), default=None)
    p.add_argument("--name", default=None)
    p.add_argument("--windows", type=int, default=8)
    p.add_argument("--max-lag", type=int, default=100)
    p.add_argument("--fit-range", type=int, nargs=2, default=list(stats.DEFAULT_FIT_RANGE), metavar=("LO", "HI"))
    p.add_argument("--alpha-source", choices=("gated", "measured"), default="gated")
    p.add_argument("--out-dir", required=True)
    slope_source(p)
    _add_model_options(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except (DataError, InsufficientDataError, DegenerateSeriesError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (InvalidParameterError, InvalidStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
