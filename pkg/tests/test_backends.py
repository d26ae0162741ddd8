"""The numba kernels and their pure-numpy fallback must produce identical output."""
import hashlib
import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asymherd import _accel, engine

SCRIPT = """
import hashlib, json
from asymherd import _accel, engine
params = engine.ModelParams(alpha={alpha}, delta_r_model={dR}, total_steps=4000, warmup_discard=1000, rng_seed=77)
raw = engine.simulate(params, 3, record_signal=True)
print(json.dumps({{"backend": _accel.BACKEND, "raw": hashlib.sha256(raw.raw.tobytes()).hexdigest(),
                  "signal": hashlib.sha256(raw.signal.tobytes()).hexdigest()}}))
"""


def _run_backend(disable: bool, alpha, dR):
    env = dict(os.environ, ASYMHERD_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, "-c", SCRIPT.format(alpha=alpha, dR=dR)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


@pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("alpha, dR", [(1.0, 3), (1.1, -2)])
def test_backends_bitwise_identical(alpha, dR):
    fast = _run_backend(False, alpha, dR)
    slow = _run_backend(True, alpha, dR)
    assert fast["backend"] == "numba" and slow["backend"] == "numpy"
    assert fast["raw"] == slow["raw"]
    assert fast["signal"] == slow["signal"]


def test_env_flag_values():
    assert _accel.BACKEND == ("numba" if _accel.USE_NUMBA else "numpy")


@settings(max_examples=300, deadline=None)
@given(d=st.floats(0, 3), n=st.integers(1, 20000))
def test_group_count_kernel_matches_python(d, n):
    assert engine._group_count(d, n) == engine._group_count.py_func(d, n)


@settings(max_examples=300, deadline=None)
@given(r=st.floats(-1e4, 1e4), p=st.floats(0, 0.25), alpha=st.floats(0.01, 1.99))
def test_trade_probability_kernel_matches_python(r, p, alpha):
    assert engine._trade_probability(r, p, alpha) == engine._trade_probability.py_func(r, p, alpha)


@pytest.mark.parametrize("groups", [1, 3, 100, 10000])
def test_draw_kernel_matches_python(groups):
    a = engine.run_rng(5, groups)
    b = engine.run_rng(5, groups)
    fast = [engine._draw_return(a, 10000, groups, 0.0308) for _ in range(500)]
    slow = [engine._draw_return.py_func(b, 10000, groups, 0.0308) for _ in range(500)]
    assert fast == slow


def test_day_loop_kernel_matches_python():
    params = engine.ModelParams(alpha=1.1, delta_r_model=-2, total_steps=1500, warmup_discard=0, rng_seed=3)
    w = engine.compute_weights(params.max_horizon, params.eta)
    outs = []
    for fn in (engine._run_days, engine._run_days.py_func):
        ret, sig = np.empty(1500, dtype=np.int64), np.empty(1500)
        fn(engine.run_rng(3, 0), params.n_agents, params.p, params.alpha, float(params.delta_r_model),
           w._chronological, 150, ret, sig)
        outs.append((ret, sig))
    assert np.array_equal(outs[0][0], outs[1][0])
    assert np.array_equal(outs[0][1], outs[1][1])
    assert hashlib.sha256(outs[0][0].tobytes()).hexdigest() == hashlib.sha256(
        engine.simulate(params).raw.tobytes()).hexdigest()
