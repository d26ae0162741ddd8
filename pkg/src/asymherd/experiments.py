"""Ensemble analysis and the experiment pipelines driven by the command line."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import engine, stats
from .calibrate import CalibrationResult, MarketSeries, SlopeSweep, calibrate_index, log_returns, slope_sweep
from .errors import FitError, InsufficientDataError, InvalidParameterError

DEFAULT_THRESHOLDS = tuple(np.round(np.arange(0.0, 10.01, 0.25), 2))

# (alpha, delta_R) per case; the first case is the full model
CONTROL_CASES = {
    "sp500-like": {
        "asymmetric_D": (1.0, 3),
        "symmetric_D": (1.0, 0),
    },
    "shanghai-like": {
        "asymmetric_P_and_D": (1.1, -2),
        "asymmetric_D_only": (1.0, -2),
        "asymmetric_P_only": (1.1, 0),
        "symmetric": (1.0, 0),
    },
}


@dataclass
class EnsembleAnalysis:
    leverage: stats.CorrelationCurve
    volatility: stats.CorrelationCurve
    thresholds: np.ndarray
    tail: np.ndarray
    fit: stats.ExpFit | None
    fit_error: str | None
    n_series: int
    xi_test: stats.TTestResult | None = None


def analyze_ensemble(series, max_lag: int = 100, fit_range=stats.DEFAULT_FIT_RANGE,
                     thresholds=DEFAULT_THRESHOLDS, per_series_fits: bool = False) -> EnsembleAnalysis:
    """Mean L(t), A(t) and tail distribution over a set of raw return series.

    ``max_lag`` is clipped to the shortest series so short inputs still give
    curves.  A failed exponential fit is reported in ``fit_error`` instead of
    raising.
    """
    series = [np.asarray(s, dtype=np.float64) for s in series]
    if not series:
        raise InsufficientDataError("no series to analyze")
    shortest = min(s.size for s in series)
    lag_cap = (shortest - 1) // 2
    if lag_cap < 1:
        raise InsufficientDataError(f"series of length {shortest} is too short for any lag")
    max_lag = min(max_lag, lag_cap)
    thresholds = np.asarray(thresholds, dtype=np.float64)

    lev, vol, tails, xis = [], [], [], []
    for raw in series:
        r = stats.normalize(raw)
        curve = stats.return_volatility_corr(r, max_lag)
        lev.append(curve)
        vol.append(stats.volatility_autocorr(r, max_lag))
        tails.append(stats.tail_distribution(r, thresholds))
        if per_series_fits:
            try:
                xis.append(stats.fit_exponential(curve, fit_range).xi)
            except (FitError, InsufficientDataError):
                pass
    lev_mean = stats.mean_curve(lev)
    fit, err = None, None
    try:
        fit = stats.fit_exponential(lev_mean, fit_range)
    except (FitError, InsufficientDataError) as exc:
        err = str(exc)
    xi_test = None
    if len(xis) >= 2 and np.ptp(xis) > 0:
        xi_test = stats.t_test_one_sample(xis, 0.0)
    return EnsembleAnalysis(
        leverage=lev_mean,
        volatility=stats.mean_curve(vol),
        thresholds=thresholds,
        tail=np.mean(tails, axis=0),
        fit=fit,
        fit_error=err,
        n_series=len(series),
        xi_test=xi_test,
    )


def run_controls(market: str, params: engine.ModelParams, runs: int = 100, max_lag: int = 40,
                 jobs: int = 1) -> dict:
    """Mean L(t) for each symmetric/asymmetric case of one market.

    All cases share the same random streams so differences between them come
    from the mechanism being switched, not from sampling noise.
    """
    try:
        cases = CONTROL_CASES[market]
    except KeyError:
        raise InvalidParameterError(f"unknown market {market!r}; choose from {sorted(CONTROL_CASES)}") from None
    out = {}
    for name, (alpha, dR) in cases.items():
        raws = engine.simulate_ensemble(params.replace(alpha=alpha, delta_r_model=dR), runs, jobs=jobs)
        curves = [stats.return_volatility_corr(stats.normalize(r), max_lag) for r in raws]
        out[name] = stats.mean_curve(curves)
    return out


def cache_dir() -> Path:
    base = os.environ.get("ASYMHERD_CACHE_DIR")
    return Path(base) if base else Path.home() / ".cache" / "asymherd"


def _sweep_key(params: engine.ModelParams, delta_R_values, runs: int) -> str:
    fields = {
        "n_agents": params.n_agents, "p": params.p, "eta": params.eta, "max_horizon": params.max_horizon,
        "init_zero_steps": params.init_zero_steps, "total_steps": params.total_steps,
        "warmup_discard": params.warmup_discard, "seed": params.rng_seed,
        "delta_R_values": sorted(int(v) for v in delta_R_values), "runs": int(runs),
    }
    return hashlib.sha256(json.dumps(fields, sort_keys=True).encode()).hexdigest()[:16]


def cached_slope(params: engine.ModelParams, delta_R_values=range(-4, 5), runs: int = 100, jobs: int = 1,
                 refresh: bool = False) -> tuple[SlopeSweep, Path, bool]:
    """Slope sweep for the model-level parameters, reused from the cache directory when present.

    Returns ``(sweep, cache_path, was_cached)``.
    """
    path = cache_dir() / f"slope-{_sweep_key(params, delta_R_values, runs)}.json"
    if path.exists() and not refresh:
        return SlopeSweep.from_dict(json.loads(path.read_text(encoding="utf-8"))), path, True
    sweep = slope_sweep(params.n_agents, delta_R_values, runs, params.rng_seed, base_params=params, jobs=jobs)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(sweep.to_dict(), sort_keys=True, indent=2), encoding="utf-8")
    tmp.replace(path)
    return sweep, path, False


def empirical_leverage(series: MarketSeries, max_lag: int = 100, fit_range=stats.DEFAULT_FIT_RANGE) -> EnsembleAnalysis:
    return analyze_ensemble([log_returns(series)], max_lag=max_lag, fit_range=fit_range)


def simulation_params_for(result: CalibrationResult, params: engine.ModelParams,
                          alpha_source: str = "gated") -> engine.ModelParams:
    if alpha_source == "gated":
        alpha = result.alpha_gated
    elif alpha_source == "measured":
        alpha = result.alpha
    else:
        raise InvalidParameterError(f"alpha_source must be 'gated' or 'measured', got {alpha_source!r}")
    return params.replace(alpha=float(alpha), delta_r_model=int(result.delta_r_model))


def reproduce(series: MarketSeries, params: engine.ModelParams, slope: float, runs: int = 100,
              window_count: int = 8, max_lag: int = 100, fit_range=stats.DEFAULT_FIT_RANGE,
              alpha_source: str = "gated", jobs: int = 1):
    """Calibrate one index, simulate it, and analyze both empirical and simulated series."""
    calib = calibrate_index(series, slope, window_count)
    sim_params = simulation_params_for(calib, params, alpha_source)
    raws = engine.simulate_ensemble(sim_params, runs, jobs=jobs)
    sim = analyze_ensemble(raws, max_lag=max_lag, fit_range=fit_range, per_series_fits=True)
    emp = empirical_leverage(series, max_lag=max_lag, fit_range=fit_range)
    return calib, sim_params, emp, sim
