"""Time one default simulation run under the numba and numpy backends.

    python benchmarks/bench_engine.py [--repeat 5] [--steps 20000] [--agents 10000]

Each backend runs in its own interpreter because the backend is fixed at
import time by ASYMHERD_DISABLE_NUMBA.  Compilation is excluded from the
timings (one warm-up call first); the series hashes confirm both backends
produce the same returns.
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = """
import hashlib, json, statistics, time
from asymherd import _accel, engine
params = engine.ModelParams(n_agents={agents}, total_steps={steps}, warmup_discard={steps} // 2,
                            alpha=1.0, delta_r_model=3)
engine.simulate(params.replace(total_steps=200, warmup_discard=0))
times = []
for i in range({repeat}):
    t0 = time.perf_counter()
    raw = engine.simulate(params, i).raw
    times.append(time.perf_counter() - t0)
print(json.dumps({{"backend": _accel.BACKEND, "median": statistics.median(times), "best": min(times),
                  "hash": hashlib.sha256(raw.tobytes()).hexdigest()[:16]}}))
"""


def run_backend(disable_numba: bool, args) -> dict:
    env = dict(os.environ, ASYMHERD_DISABLE_NUMBA="1" if disable_numba else "0")
    code = WORKER.format(agents=args.agents, steps=args.steps, repeat=args.repeat)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--agents", type=int, default=10000)
    args = ap.parse_args()

    results = [run_backend(False, args), run_backend(True, args)]
    print(f"{args.steps} steps, N={args.agents}, {args.repeat} runs per backend")
    print(f"{'backend':<8} {'median [s]':>11} {'best [s]':>10}  series hash")
    for r in results:
        print(f"{r['backend']:<8} {r['median']:>11.4f} {r['best']:>10.4f}  {r['hash']}")
    fast, slow = results
    if fast["backend"] == "numba":
        print(f"speed-up {slow['median'] / fast['median']:.1f}x; "
              f"outputs {'identical' if fast['hash'] == slow['hash'] else 'DIFFER'}")


if __name__ == "__main__":
    main()
