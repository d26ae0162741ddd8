"""Agent-based market model with asymmetric trading and herding, plus calibration tools."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .calibrate import (
    CalibrationResult,
    MarketSeries,
    SlopeSweep,
    alpha_from_ratio,
    calibrate_index,
    delta_r_from_degrees,
    delta_R_from_delta_r,
    herding_degrees,
    log_returns,
    slope_sweep,
    volume_ratio,
)
from .engine import (
    DayState,
    HorizonWeights,
    ModelParams,
    ReturnSeries,
    compute_weights,
    form_groups,
    herding_degree,
    simulate,
    simulate_ensemble,
    step,
    trade_probability,
    weighted_return,
)
from .stats import (
    CorrelationCurve,
    ExpFit,
    fit_exponential,
    fit_linear,
    normalize,
    return_volatility_corr,
    t_test_one_sample,
    tail_distribution,
    volatility_autocorr,
)

__all__ = [
    "BACKEND",
    "CalibrationResult",
    "MarketSeries",
    "SlopeSweep",
    "alpha_from_ratio",
    "calibrate_index",
    "delta_r_from_degrees",
    "delta_R_from_delta_r",
    "herding_degrees",
    "log_returns",
    "slope_sweep",
    "volume_ratio",
    "DayState",
    "HorizonWeights",
    "ModelParams",
    "ReturnSeries",
    "compute_weights",
    "form_groups",
    "herding_degree",
    "simulate",
    "simulate_ensemble",
    "step",
    "trade_probability",
    "weighted_return",
    "CorrelationCurve",
    "ExpFit",
    "fit_exponential",
    "fit_linear",
    "normalize",
    "return_volatility_corr",
    "t_test_one_sample",
    "tail_distribution",
    "volatility_autocorr",
]
