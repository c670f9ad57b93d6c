"""Time the compiled kernels against the plain-Python fallback.

Each backend runs in its own interpreter because the switch is read at import
time::

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from tslasso import _accel, dgm, lasso, kernels, tails

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
out = {"backend": _accel.BACKEND}

def best(f):
    f()  # warm-up (and compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter(); f(); times.append(time.perf_counter() - t0)
    return min(times)

X = rng.standard_normal((400, 60)); Y = X[:, :5] @ rng.standard_normal((5, 8)) + rng.standard_normal((400, 8))
out["lasso_fit_T400_p60_q8"] = best(lambda: lasso.fit_arrays(X, Y, 0.05, kkt_tol=1e-10))

A = dgm.generate_sparse_stable(50, 7, 0.5, rng).values
shocks = rng.standard_normal((20000, 50)); buf = np.empty_like(shocks)
out["linear_recursion_T20000_p50"] = best(lambda: kernels.linear_recursion(A, shocks, buf))

spec = dgm.Arch(A, tails.uniform_isotropic(50))
out["simulate_arch_T20000_p50"] = best(lambda: dgm.simulate(spec, 20000, burn_in=0, rng=1))
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env["TSLASSO_DISABLE_NUMBA"] = "1" if disable else "0"
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True,
                          check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    names = [k for k in fast if k != "backend"]
    print(f"{'kernel':32s} {fast['backend']:>10s} {slow['backend']:>10s} {'speedup':>8s}")
    for k in names:
        print(f"{k:32s} {fast[k]:10.4f} {slow[k]:10.4f} {slow[k] / fast[k]:8.1f}x")


if __name__ == "__main__":
    main()
