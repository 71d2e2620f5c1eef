#!/usr/bin/env python3
"""Time the hot kernels on the compiled and interpreted backends.

Usage:
    python benchmarks/bench_kernels.py            # current backend only
    python benchmarks/bench_kernels.py --compare  # also spawn the other backend

The numbers are microseconds per Monte Carlo trial. The interpreted path
(FAIRCOHORT_DISABLE_NUMBA=1) runs the same code on the same random streams,
so its outputs are identical; only throughput differs.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

WORKLOADS = ("rounding", "online-linear", "online-ratio")


def run_workloads(trials_scale: float) -> dict:
    from faircohort.accel import NUMBA_ENABLED
    from faircohort.online_linear import stream_selection_counts as linear_counts
    from faircohort.online_ratio import stream_selection_counts as ratio_counts
    from faircohort.rounding import monte_carlo_means

    gen = np.random.default_rng(1)
    results = {"backend": "numba" if NUMBA_ENABLED else "python"}

    def timed(fn, trials):
        fn(max(1, trials // 10))  # warm the JIT cache outside the timing
        t0 = time.perf_counter()
        fn(trials)
        return (time.perf_counter() - t0) / trials * 1e6

    values = (gen.random(20)).tolist()
    trials = max(1, int(100_000 * trials_scale))
    results["rounding"] = {
        "trials": trials,
        "us_per_trial": timed(lambda t: monte_carlo_means(values, 1.0, t, 3), trials),
    }

    scores = gen.random(50)
    trials = max(1, int(20_000 * trials_scale))
    results["online-linear"] = {
        "trials": trials,
        "us_per_trial": timed(lambda t: linear_counts(scores, 4, 0.2, t, 5), trials),
    }

    scores = gen.random(100)
    trials = max(1, int(20_000 * trials_scale))
    results["online-ratio"] = {
        "trials": trials,
        "us_per_trial": timed(lambda t: ratio_counts(scores, 3, 0.5, t, 7), trials),
    }
    return results


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--compare", action="store_true",
                        help="also run the other backend in a subprocess")
    parser.add_argument("--trials-scale", type=float, default=1.0,
                        help="scale every workload's trial count")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args()

    mine = run_workloads(args.trials_scale)
    rows = [mine]
    if args.compare:
        env = dict(os.environ)
        if mine["backend"] == "numba":
            env["FAIRCOHORT_DISABLE_NUMBA"] = "1"
            other_scale = args.trials_scale * 0.01  # interpreted path is ~100x slower
        else:
            env.pop("FAIRCOHORT_DISABLE_NUMBA", None)
            other_scale = args.trials_scale
        cmd = [sys.executable, os.path.abspath(__file__), "--json",
               "--trials-scale", str(other_scale)]
        out = subprocess.run(cmd, capture_output=True, text=True, env=env, check=True)
        rows.append(json.loads(out.stdout))

    if args.json:
        print(json.dumps(mine))
        return 0

    print(f"{'workload':<15}" + "".join(f"{r['backend']:>16}" for r in rows))
    for name in WORKLOADS:
        cells = "".join(f"{r[name]['us_per_trial']:>13.2f} us" for r in rows)
        print(f"{name:<15}{cells}")
    if len(rows) == 2:
        print("\nspeedup (interpreted / compiled):")
        for name in WORKLOADS:
            pair = sorted(rows, key=lambda r: r[name]["us_per_trial"])
            ratio = pair[1][name]["us_per_trial"] / pair[0][name]["us_per_trial"]
            print(f"  {name:<15}{ratio:8.0f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
