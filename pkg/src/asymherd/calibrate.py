"""Determination of the trading asymmetry ``alpha`` and herding shift ``delta_R`` from market data.

Bull and bear days are defined by the sign of the normalized daily return;
days with a return exactly equal to the mean (``r == 0``) belong to neither.
Days whose volume is missing (NaN) are left out of every volume-weighted
quantity.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .errors import DataError, DegenerateSeriesError, InsufficientDataError, InvalidParameterError
from .stats import LinearFit, fit_linear, normalize, t_test_one_sample

__all__ = [
    "MarketSeries",
    "CalibrationResult",
    "SweepPoint",
    "SlopeSweep",
    "log_returns",
    "volume_ratio",
    "alpha_from_ratio",
    "herding_degrees",
    "delta_r_from_degrees",
    "delta_R_from_delta_r",
    "gate_alpha",
    "slope_sweep",
    "calibrate_index",
    "MIN_WINDOW_DAYS",
]

MIN_WINDOW_DAYS = 250
SIGNIFICANCE = 0.05


@dataclass
class MarketSeries:
    dates: np.ndarray
    close: np.ndarray
    volume: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.dates = np.asarray(self.dates, dtype="datetime64[D]")
        self.close = np.asarray(self.close, dtype=np.float64)
        if self.volume is not None:
            self.volume = np.asarray(self.volume, dtype=np.float64)
            if self.volume.shape != self.close.shape:
                raise DataError("volume and close have different lengths")
            if np.any(self.volume[np.isfinite(self.volume)] < 0):
                raise DataError("negative volume")
        if self.dates.shape != self.close.shape:
            raise DataError("dates and close have different lengths")
        if np.any(np.diff(self.dates) <= np.timedelta64(0, "D")):
            raise DataError("dates must be strictly increasing")
        if not np.all(self.close > 0):
            raise DataError("close prices must be positive")

    def __len__(self):
        return len(self.close)

    @property
    def has_volume(self) -> bool:
        return self.volume is not None and bool(np.any(np.isfinite(self.volume)))

    @property
    def volume_flags(self) -> np.ndarray:
        """True where the volume is missing and excluded from volume-weighted statistics."""
        if self.volume is None:
            return np.ones(len(self), dtype=bool)
        return ~np.isfinite(self.volume)


@dataclass
class CalibrationResult:
    volume_ratio: float
    alpha: float
    d_bull: float
    d_bear: float
    delta_r: float
    delta_r_model: int
    alpha_p_value: float
    delta_r_p_value: float
    window_count: int
    slope: float = float("nan")
    alpha_stderr: float = float("nan")
    delta_r_stderr: float = float("nan")
    alpha_gated: float = float("nan")
    n_returns: int = 0
    name: str = ""

    def table_row(self) -> str:
        label = self.name or "index"
        return (
            f"{label:<24} V+/V-={self.volume_ratio:.2f}  d_bull={self.d_bull:.3f}  d_bear={self.d_bear:.3f}  "
            f"alpha={self.alpha:.2f}+-{self.alpha_stderr:.2f} (p={self.alpha_p_value:.1e})  "
            f"dr={self.delta_r:.3f}+-{self.delta_r_stderr:.3f} (p={self.delta_r_p_value:.1e})  "
            f"dR={self.delta_r_model:d}"
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CalibrationResult":
        return cls(**data)


def log_returns(series: MarketSeries) -> np.ndarray:
    y = np.asarray(series.close, dtype=np.float64)
    if y.size < 2:
        raise InsufficientDataError("need at least two prices")
    if not np.all(y > 0):
        raise DataError("nonpositive price")
    return np.log(y[1:] / y[:-1])


def _split_signs(r, v):
    r = np.asarray(r, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if r.shape != v.shape:
        raise InvalidParameterError(f"returns ({r.shape}) and volumes ({v.shape}) are not aligned")
    ok = np.isfinite(v)
    bull = ok & (r > 0)
    bear = ok & (r < 0)
    if not bull.any() or not bear.any():
        raise InsufficientDataError("need at least one bull day and one bear day with volume")
    return r, v, bull, bear


def volume_ratio(r, v) -> float:
    """Mean volume on bull days over mean volume on bear days."""
    r, v, bull, bear = _split_signs(r, v)
    v_minus = v[bear].mean()
    if not v_minus > 0:
        raise InsufficientDataError("bear-day volume is zero")
    return float(v[bull].mean() / v_minus)


def alpha_from_ratio(ratio: float) -> float:
    if not ratio > 0:
        raise InvalidParameterError("volume ratio must be positive")
    return 2.0 * ratio / (1.0 + ratio)


def herding_degrees(r, v) -> tuple[float, float]:
    """Volume-weighted mean ``|r|`` over bull days and over bear days."""
    r, v, bull, bear = _split_signs(r, v)
    wb, ws = v[bull].sum(), v[bear].sum()
    if not (wb > 0 and ws > 0):
        raise InsufficientDataError("zero total volume on bull or bear days")
    d_bull = float(np.dot(v[bull], r[bull]) / wb)
    d_bear = float(np.dot(v[bear], -r[bear]) / ws)
    return d_bull, d_bear


def delta_r_from_degrees(d_bull: float, d_bear: float) -> float:
    return 0.5 * (d_bear - d_bull)


def delta_R_from_delta_r(delta_r: float, slope: float) -> int:
    """Model-unit shift, rounded away from zero."""
    if not slope > 0:
        raise InvalidParameterError("slope must be positive")
    x = slope * delta_r
    if x > 0:
        return int(math.ceil(x))
    if x < 0:
        return int(math.floor(x))
    return 0


def gate_alpha(alpha: float, p_value: float, level: float = SIGNIFICANCE) -> float:
    """``alpha`` rounded to one decimal when significantly different from 1, else exactly 1.0."""
    if p_value < level:
        return round(alpha, 1)
    return 1.0


def _point_estimates(r_raw, v):
    r = normalize(r_raw)
    ratio = volume_ratio(r, v)
    d_bull, d_bear = herding_degrees(r, v)
    return ratio, alpha_from_ratio(ratio), d_bull, d_bear, delta_r_from_degrees(d_bull, d_bear)


def calibrate_index(series: MarketSeries, slope: float, window_count: int = 8,
                    min_window: int = MIN_WINDOW_DAYS) -> CalibrationResult:
    """Full-series estimates plus window-level t-tests of alpha against 1 and delta_r against 0.

    The return series is cut into ``window_count`` contiguous, non-overlapping
    windows of near-equal length; each window is normalized on its own.
    """
    if series.volume is None or not series.has_volume:
        raise InsufficientDataError("volume required for calibration")
    if window_count < 2:
        raise InsufficientDataError(f"window_count={window_count}: at least 2 windows are needed for the t-tests")
    r_raw = log_returns(series)
    v = series.volume[1:]
    n = r_raw.size
    if n // window_count < min_window:
        raise InsufficientDataError(
            f"{n} returns cannot be split into {window_count} windows of at least {min_window} days"
        )
    ratio, alpha, d_bull, d_bear, dr = _point_estimates(r_raw, v)

    alphas, drs = [], []
    for idx in np.array_split(np.arange(n), window_count):
        _, a_w, _, _, dr_w = _point_estimates(r_raw[idx], v[idx])
        alphas.append(a_w)
        drs.append(dr_w)
    t_alpha = t_test_one_sample(alphas, 1.0)
    t_dr = t_test_one_sample(drs, 0.0)
    return CalibrationResult(
        volume_ratio=ratio,
        alpha=alpha,
        d_bull=d_bull,
        d_bear=d_bear,
        delta_r=dr,
        delta_r_model=delta_R_from_delta_r(dr, slope),
        alpha_p_value=t_alpha.p_value,
        delta_r_p_value=t_dr.p_value,
        window_count=window_count,
        slope=float(slope),
        alpha_stderr=t_alpha.stderr,
        delta_r_stderr=t_dr.stderr,
        alpha_gated=gate_alpha(alpha, t_alpha.p_value),
        n_returns=int(n),
        name=series.name,
    )


@dataclass
class SweepPoint:
    delta_R: int
    mean_delta_r: float
    stderr: float
    runs: int


@dataclass
class SlopeSweep:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    points: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SlopeSweep":
        data = dict(data)
        data["points"] = [SweepPoint(**p) for p in data.get("points", [])]
        return cls(**data)


def _zigzag(k: int) -> int:
    # maps signed delta_R onto a nonnegative stream key
    return 2 * k if k >= 0 else -2 * k - 1


def _sweep_run(task):
    params, run_index = task
    raw = engine.simulate(params, run_index, stream=(_zigzag(params.delta_r_model),)).raw.astype(np.float64)
    sigma = raw.std()
    if not sigma > 0:
        raise DegenerateSeriesError(f"simulated series for delta_R={params.delta_r_model} has zero variance")
    return (params.delta_r_model - raw.mean()) / sigma


def slope_sweep(n_agents: int = 10000, delta_R_values=range(-4, 5), runs_per_point: int = 100,
                base_seed: int = 0, base_params: engine.ModelParams | None = None, jobs: int = 1) -> SlopeSweep:
    """Linear response between the model shift ``delta_R`` and its normalized counterpart.

    For each ``delta_R`` the model runs with ``alpha = 1``; every run gives
    ``(delta_R - <R>) / sigma`` and these are averaged per point.  The result
    is the least-squares line ``delta_R = slope * delta_r + intercept``.
    Random streams are keyed by the ``delta_R`` value, so the order of
    ``delta_R_values`` has no effect.
    """
    values = sorted({int(v) for v in delta_R_values})
    if len(values) < 2 or min(values) >= 0 or max(values) <= 0:
        raise InvalidParameterError("delta_R_values must contain both negative and positive values")
    if runs_per_point < 1:
        raise InvalidParameterError("runs_per_point must be positive")
    base = (base_params or engine.ModelParams()).replace(n_agents=n_agents, alpha=1.0, rng_seed=base_seed)
    tasks = [(base.replace(delta_r_model=dR), i) for dR in values for i in range(runs_per_point)]
    out = np.asarray(engine.parallel_map(_sweep_run, tasks, jobs)).reshape(len(values), runs_per_point)

    points = []
    for dR, row in zip(values, out):
        se = float(row.std(ddof=1) / np.sqrt(row.size)) if row.size > 1 else float("nan")
        points.append(SweepPoint(dR, float(row.mean()), se, int(row.size)))
    fit: LinearFit = fit_linear([pt.mean_delta_r for pt in points], [pt.delta_R for pt in points])
    return SlopeSweep(
        slope=fit.slope,
        intercept=fit.intercept,
        slope_stderr=fit.stderr,
        intercept_stderr=fit.intercept_stderr,
        points=points,
        params={**base.to_dict(), "delta_R_values": values, "runs_per_point": runs_per_point},
    )
