"""Compiled vs pure-Python kernels, plus one end-to-end simulation per backend.

    python3 bench/bench_kernels.py [--repeat N]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from homsafe import _kernels_py

try:
    from homsafe import _kernels as _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None


def cases():
    rng = np.random.default_rng(0)
    n = 4
    w = np.arange(n, 0, -1, dtype=float)
    L = rng.normal(size=(n, n))
    P = L @ L.T + np.eye(n)
    mu = np.linalg.eigvals(np.linalg.solve(P, P @ np.diag(w) + np.diag(w) @ P)).real
    x = rng.normal(size=n)
    return {
        "cubic_max_real_root": lambda k: k.cubic_max_real_root(1.3, -2.0, 0.4),
        "ferrari_roots": lambda k: k.ferrari_roots(-1.5, 0.7, -2.0),
        "hom_norm2": lambda k: k.hom_norm2(-4.0, 2.0, 0.9, 0.2, 1.0),
        "hom_norm_newton(n=4)": lambda k: k.hom_norm_newton(x, w, P, mu.min(), mu.max()),
        "rk4_chain_step(n=4)": lambda k: k.rk4_chain_step(x, 0.3, 1e-3),
    }


def per_call(fn, k, repeat):
    t = min(timeit.repeat(lambda: fn(k), number=repeat, repeat=5))
    return 1e6 * t / repeat


SIM_SNIPPET = (
    "import time; from homsafe import sim, BACKEND; t=time.perf_counter(); "
    "sim.integrate(sim.paper_v_scenario('FxTSf', t_end=3.0)); "
    "print(BACKEND, time.perf_counter()-t)"
)


def sim_time(pure):
    env = dict(os.environ, HOMSAFE_PURE="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", SIM_SNIPPET], env=env, capture_output=True, text=True, check=True)
    name, secs = out.stdout.split()
    return name, float(secs)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20000)
    ap.add_argument("--no-sim", action="store_true")
    args = ap.parse_args()
    if _kernels_c is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'kernel':24s} {'python us':>10s} {'compiled us':>12s} {'speedup':>8s}")
    for name, fn in cases().items():
        tp = per_call(fn, _kernels_py, args.repeat)
        if _kernels_c is None:
            print(f"{name:24s} {tp:10.3f} {'-':>12s} {'-':>8s}")
            continue
        tc = per_call(fn, _kernels_c, args.repeat)
        print(f"{name:24s} {tp:10.3f} {tc:12.3f} {tp / tc:8.1f}x")
    if not args.no_sim:
        print()
        for pure in (True, False):
            name, secs = sim_time(pure)
            print(f"3 s reference FxTSf simulation, {name:8s} backend: {secs:.2f} s")


if __name__ == "__main__":
    main()
