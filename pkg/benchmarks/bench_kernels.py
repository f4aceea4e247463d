"""Benchmark the numba kernels against the pure-numpy fallback.

Runs the two workloads that dominate real usage — a full candidate scan
and a bootstrap loop — in subprocesses with LRSELECT_BACKEND forced each
way, and prints a comparison table.

    python3 benchmarks/bench_kernels.py [--repeats 3]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, os, time
import numpy as np
from lrselect import kernels
from lrselect.composition import CompositionTable
from lrselect.glm import Family, StoppingCriterion
from lrselect.ingest import DatasetBundle
from lrselect.reporting import bootstrap_logcontrast
from lrselect.composition import LogratioTerm
from lrselect.stepwise import init_session, rank_candidates, run

def bundle_from(x, y, family):
    n, j = x.shape
    comp = CompositionTable(tuple(f"p{k}" for k in range(j)), x, tuple(f"s{i}" for i in range(n)))
    return DatasetBundle(comp, y, "y", np.empty((n, 0)), (), family, {})

kernels.warm_up()
rng = np.random.default_rng(0)

# workload 1: one full unrestricted candidate scan, J=30 parts, n=500 (435 fits)
n, j = 500, 30
logx = rng.normal(size=(n, j))
eta = 0.3 + 1.2 * (logx[:, 0] - logx[:, 1])
y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
scan_bundle = bundle_from(np.exp(logx), y, Family.BINOMIAL)
session = init_session(scan_bundle, 1, StoppingCriterion("bic"))
t0 = time.perf_counter()
rank_candidates(session)
scan_s = time.perf_counter() - t0

# workload 2: bootstrap, B=2000 gaussian refits, n=400
n, j = 400, 6
logx = rng.normal(size=(n, j))
yg = 0.2 + 0.9 * (logx[:, 0] - logx[:, 3]) + rng.normal(0, 1, n)
boot_bundle = bundle_from(np.exp(logx), yg, Family.GAUSSIAN)
terms = [LogratioTerm(0, 3), LogratioTerm(1, 3)]
t0 = time.perf_counter()
bootstrap_logcontrast(boot_bundle, terms, B=2000, seed=1)
boot_s = time.perf_counter() - t0

# workload 3: full automatic run, method 1, J=20, n=400
n, j = 400, 20
logx = rng.normal(size=(n, j))
eta = 0.3 + 1.3 * (logx[:, 0] - logx[:, 1]) + 0.9 * (logx[:, 2] - logx[:, 3])
yb = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(float)
run_bundle = bundle_from(np.exp(logx), yb, Family.BINOMIAL)
t0 = time.perf_counter()
run(init_session(run_bundle, 1, StoppingCriterion("bic")))
run_s = time.perf_counter() - t0

print(json.dumps({
    "backend": kernels.active_backend(),
    "candidate_scan_435_fits": scan_s,
    "bootstrap_2000_refits": boot_s,
    "full_run_J20": run_s,
}))
"""


def measure(backend: str, repeats: int) -> dict:
    env = dict(os.environ, LRSELECT_BACKEND=backend)
    best: dict = {}
    for _ in range(repeats):
        out = subprocess.run(
            [sys.executable, "-c", WORKER], env=env, capture_output=True, text=True, check=True
        )
        result = json.loads(out.stdout.strip().splitlines()[-1])
        for key, value in result.items():
            if key == "backend":
                continue
            best[key] = min(best.get(key, float("inf")), value)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3, help="take the best of N runs")
    args = parser.parse_args()

    print(f"measuring (best of {args.repeats}) ...")
    numpy_times = measure("numpy", args.repeats)
    numba_times = measure("numba", args.repeats)

    width = max(len(k) for k in numpy_times)
    print(f"\n{'workload':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for key in numpy_times:
        a, b = numpy_times[key], numba_times[key]
        print(f"{key:<{width}}  {a:>9.3f}s  {b:>9.3f}s  {a / b:>7.1f}x")


if __name__ == "__main__":
    main()
