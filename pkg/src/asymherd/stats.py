"""Estimators used on simulated and empirical return series.

Time averages are population moments.  For a lag ``t`` the lagged product is
averaged over the ``n - t`` index pairs that lie inside the series, while the
single-time moments (``<r>``, ``<r^2>``, ``<|r|>``) are taken over the whole
series.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats as sp_stats

from .errors import DegenerateSeriesError, FitError, InsufficientDataError, InvalidParameterError

__all__ = [
    "CorrelationCurve",
    "ExpFit",
    "LinearFit",
    "TTestResult",
    "normalize",
    "return_volatility_corr",
    "volatility_autocorr",
    "tail_distribution",
    "mean_curve",
    "fit_exponential",
    "fit_linear",
    "t_test_one_sample",
    "student_t_two_sided_p",
    "DEFAULT_FIT_RANGE",
]

DEFAULT_FIT_RANGE = (1, 40)


@dataclass
class CorrelationCurve:
    lags: np.ndarray
    values: np.ndarray
    n_samples: np.ndarray
    stderr: np.ndarray | None = None

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.n_samples = np.asarray(self.n_samples, dtype=np.int64)
        if self.stderr is not None:
            self.stderr = np.asarray(self.stderr, dtype=np.float64)
        if self.lags.shape != self.values.shape or self.lags.shape != self.n_samples.shape:
            raise InvalidParameterError("lags, values and n_samples must have equal lengths")
        if np.any(np.diff(self.lags) <= 0):
            raise InvalidParameterError("lags must be strictly increasing")

    def at(self, lag: int) -> float:
        idx = np.searchsorted(self.lags, lag)
        if idx >= len(self.lags) or self.lags[idx] != lag:
            raise KeyError(lag)
        return float(self.values[idx])

    def window(self, lo: int, hi: int) -> np.ndarray:
        """Values for lags in the closed interval ``[lo, hi]``."""
        mask = (self.lags >= lo) & (self.lags <= hi)
        return self.values[mask]


@dataclass
class ExpFit:
    """Least-squares fit of ``c * exp(xi * t)``."""

    c: float
    xi: float
    residual_norm: float
    n_points: int
    fit_range: tuple = DEFAULT_FIT_RANGE
    c_stderr: float = float("nan")
    xi_stderr: float = float("nan")
    low_confidence: bool = False

    @property
    def tau(self) -> float:
        return -1.0 / self.xi if self.xi != 0 else float("inf")

    def __call__(self, t):
        return self.c * np.exp(self.xi * np.asarray(t, dtype=np.float64))


@dataclass
class LinearFit:
    slope: float
    intercept: float
    stderr: float
    intercept_stderr: float
    n_points: int = 0


@dataclass
class TTestResult:
    t_statistic: float
    dof: int
    p_value: float
    mean: float = float("nan")
    stderr: float = float("nan")

    @property
    def significant(self) -> bool:
        return self.p_value < 0.05


def normalize(raw) -> np.ndarray:
    """Zero-mean, unit-variance version of ``raw`` (population standard deviation)."""
    x = np.asarray(raw, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InsufficientDataError("need a 1-d series with at least 2 points")
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("series contains non-finite values")
    if np.ptp(x) == 0:
        raise DegenerateSeriesError("series has zero variance")
    centered = x - x.mean()
    sigma = np.sqrt(np.mean(centered * centered))
    return centered / sigma


def _check_lags(n: int, max_lag: int, min_lag: int) -> np.ndarray:
    if min_lag < 0 or max_lag < min_lag:
        raise InvalidParameterError(f"invalid lag range [{min_lag}, {max_lag}]")
    if not max_lag < n / 2:
        raise InvalidParameterError(f"max_lag={max_lag} must be below half the series length ({n})")
    return np.arange(min_lag, max_lag + 1, dtype=np.int64)


def _lagged_means(a: np.ndarray, b: np.ndarray, lags: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    out = np.empty(lags.shape[0])
    for i, t in enumerate(lags):
        out[i] = np.dot(a[: n - t], b[t:]) / (n - t)
    return out


def return_volatility_corr(r, max_lag: int, min_lag: int = 1) -> CorrelationCurve:
    """Return-volatility correlation ``L(t) = (<r(t') |r(t'+t)|^2> - L0) / Z``."""
    r = np.asarray(r, dtype=np.float64)
    lags = _check_lags(r.shape[0], max_lag, min_lag)
    sq = r * r
    m2 = sq.mean()
    z = m2 * m2
    if not z > 0:
        raise DegenerateSeriesError("series is identically zero")
    l0 = r.mean() * m2
    values = (_lagged_means(r, sq, lags) - l0) / z
    return CorrelationCurve(lags, values, r.shape[0] - lags)


def volatility_autocorr(r, max_lag: int, min_lag: int = 1) -> CorrelationCurve:
    """Autocorrelation of ``|r|`` normalised by ``A0 = <r^2> - <|r|>^2``."""
    r = np.asarray(r, dtype=np.float64)
    lags = _check_lags(r.shape[0], max_lag, min_lag)
    a = np.abs(r)
    mean_abs = a.mean()
    # lag-0 product through the same summation so A(0) is exactly 1
    a0 = _lagged_means(a, a, np.zeros(1, dtype=np.int64))[0] - mean_abs * mean_abs
    if not a0 > 0:
        raise DegenerateSeriesError("absolute returns have zero variance")
    values = (_lagged_means(a, a, lags) - mean_abs * mean_abs) / a0
    return CorrelationCurve(lags, values, r.shape[0] - lags)


def tail_distribution(r, thresholds) -> np.ndarray:
    """Empirical ``P(|r| > x)`` for each threshold ``x``."""
    a = np.sort(np.abs(np.asarray(r, dtype=np.float64)))
    x = np.asarray(thresholds, dtype=np.float64)
    if a.size == 0:
        raise InsufficientDataError("empty series")
    above = a.size - np.searchsorted(a, x, side="right")
    return above / a.size


def mean_curve(curves) -> CorrelationCurve:
    """Pointwise mean of curves sharing the same lags, with standard errors across curves."""
    curves = list(curves)
    if not curves:
        raise InsufficientDataError("no curves to average")
    lags = curves[0].lags
    for c in curves[1:]:
        if not np.array_equal(c.lags, lags):
            raise InvalidParameterError("curves have different lags")
    vals = np.vstack([c.values for c in curves])
    n_samples = np.sum([c.n_samples for c in curves], axis=0)
    if len(curves) > 1:
        se = vals.std(axis=0, ddof=1) / np.sqrt(len(curves))
    else:
        se = np.full(lags.shape, np.nan)
    return CorrelationCurve(lags, vals.mean(axis=0), n_samples, stderr=se)


def _exp_residuals(theta, t, y):
    return theta[0] * np.exp(theta[1] * t) - y


def _exp_jacobian(theta, t, y):
    e = np.exp(theta[1] * t)
    return np.column_stack([e, theta[0] * t * e])


def fit_exponential(curve: CorrelationCurve, fit_range=DEFAULT_FIT_RANGE, max_iter: int = 200,
                    low_confidence_samples: int = 10000) -> ExpFit:
    """Fit ``c * exp(xi * t)`` to the curve over the lags in ``fit_range`` (inclusive).

    The starting point is a straight-line fit of ``log|L|`` over the points
    whose sign agrees with the dominant sign; the least-squares refinement
    then uses every point in range.  ``low_confidence`` is set when the curve
    was estimated from fewer than ``low_confidence_samples`` terms at its
    first fitted lag.
    """
    lo, hi = fit_range
    mask = (curve.lags >= lo) & (curve.lags <= hi)
    t = curve.lags[mask].astype(np.float64)
    y = curve.values[mask]
    if t.size < 3:
        raise InsufficientDataError(f"only {t.size} points in fit range {fit_range}, need 3")
    sign = np.sign(y.sum())
    good = (y * sign) > 0
    if sign == 0 or good.sum() < 2:
        raise FitError("curve has no dominant sign; cannot initialise the exponential fit")
    slope, intercept = np.polyfit(t[good], np.log(np.abs(y[good])), 1)
    x0 = np.array([sign * np.exp(intercept), slope])
    try:
        res = optimize.least_squares(
            _exp_residuals, x0, jac=_exp_jacobian, args=(t, y), method="lm",
            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iter,
        )
    except (ValueError, FloatingPointError) as exc:
        raise FitError(f"exponential fit failed: {exc}", last_iterate=x0) from exc
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(f"exponential fit did not converge: {res.message}", last_iterate=res.x)
    c, xi = (float(v) for v in res.x)
    rss = float(np.dot(res.fun, res.fun))
    c_se = xi_se = float("nan")
    dof = t.size - 2
    if dof > 0:
        jtj = res.jac.T @ res.jac
        try:
            cov = np.linalg.inv(jtj) * rss / dof
            c_se, xi_se = (float(np.sqrt(max(v, 0.0))) for v in np.diag(cov))
        except np.linalg.LinAlgError:
            pass
    first = curve.n_samples[mask][0]
    return ExpFit(
        c=c,
        xi=xi,
        residual_norm=float(np.sqrt(rss)),
        n_points=int(t.size),
        fit_range=(int(lo), int(hi)),
        c_stderr=c_se,
        xi_stderr=xi_se,
        low_confidence=bool(first < low_confidence_samples),
    )


def fit_linear(x, y) -> LinearFit:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidParameterError("x and y must be 1-d and of equal length")
    if np.unique(x).size < 2:
        raise InvalidParameterError("need at least two distinct x values")
    if x.size == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        return LinearFit(float(slope), float(y[0] - slope * x[0]), 0.0, 0.0, 2)
    res = sp_stats.linregress(x, y)
    return LinearFit(float(res.slope), float(res.intercept), float(res.stderr),
                     float(res.intercept_stderr), int(x.size))


def student_t_two_sided_p(t: float, dof: int) -> float:
    """Two-sided tail probability of Student's t via the regularized incomplete beta function."""
    if dof < 1:
        raise InvalidParameterError("dof must be positive")
    t = float(t)
    if np.isinf(t):
        return 0.0
    t2 = t * t
    if t2 < dof:
        # near t = 0 the argument dof/(dof+t^2) rounds towards 1; use the complementary form
        p = 1.0 - special.betainc(0.5, 0.5 * dof, t2 / (dof + t2))
    else:
        p = special.betainc(0.5 * dof, 0.5, dof / (dof + t2))
    return float(min(1.0, max(0.0, p)))


def t_test_one_sample(samples, mu0: float = 0.0) -> TTestResult:
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    if n < 2:
        raise InsufficientDataError("t-test needs at least 2 samples")
    if np.ptp(x) == 0:
        raise DegenerateSeriesError("samples have zero variance")
    sd = x.std(ddof=1)
    se = sd / np.sqrt(n)
    t = (x.mean() - mu0) / se
    return TTestResult(float(t), n - 1, student_t_two_sided_p(t, n - 1), float(x.mean()), float(se))
