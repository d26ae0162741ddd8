"""Multi-agent market model with asymmetric trading and asymmetric herding.

Each day the horizon-weighted average of past returns, ``R'(t)``, sets both
the trading probability of the next day (scaled by ``alpha`` after a rise and
by ``2 - alpha`` after a fall) and the herding degree
``D = |R'(t) - delta_r_model| / N``.  Agents are randomly split into
``round(1/D)`` groups, every group draws one buy/sell/hold decision, and the
day's return is the net number of shares bought.

Two code paths produce returns:

* :func:`step` forms the groups explicitly (one label per agent) and is the
  readable reference.
* :func:`simulate` runs the compiled day loop, which draws the same
  distribution in O(1) per day: the number of buying and selling groups is
  binomial, and because labels are exchangeable the number of agents that
  land in those groups is binomial too.
"""
from __future__ import annotations

import collections
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._accel import kernel
from .errors import InvalidParameterError, InvalidStateError

__all__ = [
    "ModelParams",
    "HorizonWeights",
    "ReturnSeries",
    "DayState",
    "compute_weights",
    "weighted_return",
    "trade_probability",
    "herding_degree",
    "group_count",
    "form_groups",
    "draw_return",
    "step",
    "run_rng",
    "simulate",
    "simulate_ensemble",
    "parallel_map",
]

_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class ModelParams:
    n_agents: int = 10000
    p: float = 0.0154
    eta: float = 1.12
    max_horizon: int = 150
    alpha: float = 1.0
    delta_r_model: int = 0
    init_zero_steps: int = 150
    total_steps: int = 20000
    warmup_discard: int = 10000
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.n_agents) != self.n_agents or self.n_agents < 1:
            raise InvalidParameterError(f"n_agents must be a positive integer, got {self.n_agents!r}")
        if not 0.0 <= self.p < 0.5:
            raise InvalidParameterError(f"p must lie in [0, 0.5), got {self.p!r}")
        if not self.eta > 0:
            raise InvalidParameterError(f"eta must be positive, got {self.eta!r}")
        if int(self.max_horizon) != self.max_horizon or self.max_horizon < 1:
            raise InvalidParameterError(f"max_horizon must be a positive integer, got {self.max_horizon!r}")
        if not 0.0 < self.alpha < 2.0:
            raise InvalidParameterError(f"alpha must lie in (0, 2), got {self.alpha!r}")
        if 2.0 * self.p * max(self.alpha, 2.0 - self.alpha) > 1.0:
            raise InvalidParameterError("2*p*max(alpha, 2-alpha) exceeds 1; trade probability would be invalid")
        if int(self.delta_r_model) != self.delta_r_model:
            raise InvalidParameterError(f"delta_r_model must be an integer, got {self.delta_r_model!r}")
        if self.init_zero_steps < 0:
            raise InvalidParameterError("init_zero_steps must be nonnegative")
        if self.total_steps < 1:
            raise InvalidParameterError("total_steps must be positive")
        if not 0 <= self.warmup_discard < self.total_steps:
            raise InvalidParameterError("warmup_discard must satisfy 0 <= warmup_discard < total_steps")
        if not 0 <= self.rng_seed < _SEED_LIMIT:
            raise InvalidParameterError("rng_seed must be a 64-bit unsigned integer")
        # normalise integral floats coming from config files
        for name in ("n_agents", "max_horizon", "delta_r_model", "init_zero_steps",
                     "total_steps", "warmup_discard", "rng_seed"):
            object.__setattr__(self, name, int(getattr(self, name)))

    @property
    def retained_steps(self) -> int:
        return self.total_steps - self.warmup_discard

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InvalidParameterError(f"unknown model parameters: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class HorizonWeights:
    """Power-law horizon weights ``gamma_i`` (i = 1..M) and the scale factor ``k``."""

    gamma: np.ndarray
    k_coeff: float

    @property
    def max_horizon(self) -> int:
        return len(self.gamma)

    @cached_property
    def lag_coefficients(self) -> np.ndarray:
        """Weight on ``R(t - j)`` for j = 0..M-1, i.e. ``k * sum_{i > j} gamma_i``.

        Summing these against the history is the same as the nested double sum
        over horizons; the coefficients add up to one.
        """
        return self.k_coeff * _tail_sums(self.gamma)

    @cached_property
    def _chronological(self) -> np.ndarray:
        # oldest-first ordering, matching history[-M:]
        return np.ascontiguousarray(self.lag_coefficients[::-1])


def _tail_sums(gamma: np.ndarray) -> np.ndarray:
    return np.cumsum(gamma[::-1])[::-1]


def compute_weights(max_horizon: int, eta: float) -> HorizonWeights:
    if int(max_horizon) != max_horizon or max_horizon < 1:
        raise InvalidParameterError(f"max_horizon must be a positive integer, got {max_horizon!r}")
    if not eta > 0:
        raise InvalidParameterError(f"eta must be positive, got {eta!r}")
    i = np.arange(1, int(max_horizon) + 1, dtype=np.float64)
    raw = i ** (-float(eta))
    gamma = raw / raw.sum()
    k = 1.0 / float(np.sum(_tail_sums(gamma)))
    gamma.setflags(write=False)
    return HorizonWeights(gamma=gamma, k_coeff=k)


def weighted_return(history, weights: HorizonWeights) -> float:
    """Horizon-weighted average return ``R'(t)``.

    ``history`` is chronological with the newest return ``R(t)`` last; only
    the last ``M`` entries are used.
    """
    h = np.asarray(history, dtype=np.float64)
    m = weights.max_horizon
    if h.ndim != 1 or h.shape[0] < m:
        raise InvalidStateError(
            f"history holds {h.shape[0] if h.ndim == 1 else h.shape} returns, need at least {m}; "
            "pad with zeros first"
        )
    return float(np.dot(weights._chronological, np.ascontiguousarray(h[-m:])))


@kernel
def _trade_probability(r_prime, p, alpha):
    if r_prime > 0.0:
        return 2.0 * p * alpha
    if r_prime < 0.0:
        return 2.0 * p * (2.0 - alpha)
    return 2.0 * p


def trade_probability(r_prime: float, p: float, alpha: float) -> float:
    if not 0.0 <= p < 0.5 or not 0.0 < alpha < 2.0:
        raise InvalidParameterError(f"invalid p={p!r} or alpha={alpha!r}")
    prob = _trade_probability(float(r_prime), float(p), float(alpha))
    if prob > 1.0:
        raise InvalidParameterError("trade probability exceeds 1 for these parameters")
    return prob


def herding_degree(r_prime: float, delta_r_model: int, n_agents: int) -> float:
    if n_agents < 1:
        raise InvalidParameterError("n_agents must be positive")
    return abs(r_prime - delta_r_model) / n_agents


@kernel
def _group_count(herd_degree, n_agents):
    if herd_degree <= 0.0:
        return n_agents
    inv = 1.0 / herd_degree
    if inv >= n_agents:
        return n_agents
    g = int(np.rint(inv))
    if g < 1:
        return 1
    return g


def group_count(herd_degree: float, n_agents: int) -> int:
    """Number of groups for a herding degree: ``clamp(round(1/D), 1, N)``, ``N`` when ``D == 0``."""
    if herd_degree < 0:
        raise InvalidParameterError("herding degree must be nonnegative")
    return int(_group_count(float(herd_degree), int(n_agents)))


def form_groups(n_agents: int, herd_degree: float, rng: np.random.Generator) -> np.ndarray:
    """Randomly partition ``n_agents`` agents and return the group sizes.

    Every agent gets an independent uniform label in ``0..G-1``, so empty
    groups can occur.  With ``G == N`` each agent trades alone.
    """
    g = group_count(herd_degree, n_agents)
    if g == n_agents:
        return np.ones(n_agents, dtype=np.int64)
    labels = rng.integers(0, g, size=n_agents)
    return np.bincount(labels, minlength=g).astype(np.int64)


@kernel
def _draw_return(rng, n_agents, groups, p_trade):
    half = 0.5 * p_trade
    buy_groups = rng.binomial(groups, half)
    rest = groups - buy_groups
    sell_groups = 0
    if rest > 0 and half > 0.0:
        sell_groups = rng.binomial(rest, half / (1.0 - half))
    if groups == n_agents:
        return buy_groups - sell_groups
    buyers = rng.binomial(n_agents, buy_groups / groups)
    sellers = 0
    if rest > 0 and buyers < n_agents:
        sellers = rng.binomial(n_agents - buyers, sell_groups / rest)
    return buyers - sellers


def draw_return(rng: np.random.Generator, n_agents: int, groups: int, p_trade: float) -> int:
    """Net demand for one day given the group count, without materialising groups."""
    return int(_draw_return(rng, int(n_agents), int(groups), float(p_trade)))


@dataclass
class DayState:
    history: collections.deque
    r_prime: float = 0.0
    p_trade: float = 0.0
    herd_degree: float = 0.0
    group_count: int = 1

    @classmethod
    def initial(cls, params: ModelParams) -> "DayState":
        m = params.max_horizon
        return cls(history=collections.deque([0] * m, maxlen=m), group_count=params.n_agents)


def step(state: DayState, params: ModelParams, weights: HorizonWeights, rng: np.random.Generator) -> int:
    """Advance one day with explicit group formation; returns ``R(t+1)``."""
    if len(state.history) < weights.max_horizon:
        raise InvalidStateError("state history is shorter than the maximum horizon")
    n = params.n_agents
    state.r_prime = weighted_return(state.history, weights)
    state.p_trade = trade_probability(state.r_prime, params.p, params.alpha)
    state.herd_degree = herding_degree(state.r_prime, params.delta_r_model, n)
    sizes = form_groups(n, state.herd_degree, rng)
    state.group_count = len(sizes)
    u = rng.random(len(sizes))
    half = 0.5 * state.p_trade
    decisions = np.where(u < half, 1, np.where(u < state.p_trade, -1, 0))
    r = int(np.dot(sizes, decisions))
    state.history.append(r)
    return r


@kernel
def _run_days(rng, n_agents, p, alpha, delta_r_model, coef, prefix, returns_out, signal_out):
    m = coef.shape[0]
    total = returns_out.shape[0]
    buf = np.zeros(prefix + total)
    for s in range(total):
        t = prefix + s
        r_prime = np.dot(coef, buf[t - m:t])
        p_trade = _trade_probability(r_prime, p, alpha)
        g = _group_count(abs(r_prime - delta_r_model) / n_agents, n_agents)
        r = _draw_return(rng, n_agents, g, p_trade)
        buf[t] = r
        returns_out[s] = r
        signal_out[s] = r_prime


@dataclass
class ReturnSeries:
    raw: np.ndarray
    n_agents: int | None = None
    signal: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.int64)
        if self.n_agents is not None and self.raw.size and np.abs(self.raw).max() > self.n_agents:
            raise InvalidStateError("a return exceeds the number of agents")

    def __len__(self):
        return len(self.raw)

    @cached_property
    def normalized(self) -> np.ndarray:
        from .stats import normalize

        return normalize(self.raw)


def run_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for one run; streams depend only on ``(seed, key)``, never on scheduling order."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))))


def simulate(params: ModelParams, run_index: int = 0, *, stream: tuple = (), record_signal: bool = False) -> ReturnSeries:
    """Simulate one run and return the post-warmup returns.

    The random stream is derived from ``(params.rng_seed, *stream, run_index)``.
    """
    weights = compute_weights(params.max_horizon, params.eta)
    rng = run_rng(params.rng_seed, *stream, run_index)
    prefix = max(params.init_zero_steps, params.max_horizon)
    returns = np.empty(params.total_steps, dtype=np.int64)
    signal = np.empty(params.total_steps, dtype=np.float64)
    _run_days(
        rng,
        params.n_agents,
        float(params.p),
        float(params.alpha),
        float(params.delta_r_model),
        weights._chronological,
        prefix,
        returns,
        signal,
    )
    keep = slice(params.warmup_discard, None)
    return ReturnSeries(
        raw=returns[keep].copy(),
        n_agents=params.n_agents,
        signal=signal[keep].copy() if record_signal else None,
    )


def parallel_map(fn, items, jobs: int = 1):
    """Map ``fn`` over ``items`` preserving order; ``jobs > 1`` uses worker processes."""
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _raw_run(task):
    params, stream, run_index = task
    return simulate(params, run_index, stream=stream).raw


def simulate_ensemble(params: ModelParams, runs: int, *, stream: tuple = (), jobs: int = 1) -> np.ndarray:
    """Run ``runs`` independent simulations; returns an int64 array of shape ``(runs, retained)``."""
    if runs < 1:
        raise InvalidParameterError("runs must be positive")
    rows = parallel_map(_raw_run, [(params, tuple(stream), i) for i in range(runs)], jobs)
    return np.vstack(rows)
