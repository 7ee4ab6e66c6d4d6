#!/usr/bin/env python3
"""Benchmark the compiled kernels against the interpreted fallback.

Runs the same seeded search under RCPSP_TABU_BACKEND=numba and =python in
separate processes (the backend is fixed at import time) and prints wall
times, schedules per second, and the speedup.  Both runs must agree on the
best makespan; the harness asserts it.

Usage:
    python benchmarks/compare_backends.py [--size 30] [--iters 2000]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).parent.parent

_WORKLOAD = """
import json, sys
sys.path.insert(0, "tests")
from helpers import random_instance
from rcpsp_tabu import SearchParams, kernels, orchestrate

size, iters = int(sys.argv[1]), int(sys.argv[2])
inst = random_instance(size, 4, seed=202, demand_density=0.5, cap_lo=10, cap_hi=16)
params = SearchParams.defaults_for(size + 2, total_iters=iters, workers=1, seed=7)
stats = orchestrate(inst, params)
print(json.dumps({
    "backend": kernels.BACKEND,
    "best_cmax": stats.best_cmax,
    "evaluations": stats.evaluations,
    "wall_time": stats.wall_time,
}))
"""


def run_backend(backend: str, size: int, iters: int) -> dict:
    env = dict(os.environ, RCPSP_TABU_BACKEND=backend)
    result = subprocess.run(
        [sys.executable, "-c", _WORKLOAD, str(size), str(iters)],
        cwd=REPO, env=env, capture_output=True, text=True)
    if result.returncode != 0:
        raise RuntimeError(f"{backend} run failed:\n{result.stderr}")
    return json.loads(result.stdout.strip().splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=30,
                        help="real activities in the synthetic instance")
    parser.add_argument("--iters", type=int, default=2000,
                        help="total search iterations")
    args = parser.parse_args()

    rows = []
    for backend in ("numba", "python"):
        outcome = run_backend(backend, args.size, args.iters)
        outcome["rate"] = outcome["evaluations"] / outcome["wall_time"]
        rows.append(outcome)
        print(f"{backend:>7}: best={outcome['best_cmax']} "
              f"evals={outcome['evaluations']:,} "
              f"wall={outcome['wall_time']:.2f}s "
              f"rate={outcome['rate']:,.0f}/s")

    assert rows[0]["best_cmax"] == rows[1]["best_cmax"], \
        "backends disagree on the result"
    assert rows[0]["evaluations"] == rows[1]["evaluations"], \
        "backends disagree on the trajectory"
    print(f"speedup: {rows[0]['rate'] / rows[1]['rate']:.1f}x "
          f"(numba over python)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
