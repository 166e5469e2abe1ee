"""Time the compiled propagation kernel against the numpy fallback.

    python benchmarks/bench_kernel.py [--n-max 40] [--pulses 15] [--repeats 5] [--json out.json]

Each case propagates |e>|sqrt(6)> over gt in [0, 10] at dt = 0.001 and
reports the median wall time per full trace and the largest difference in
Var(X) between the two backends.
"""
from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
import time

import numpy as np

from jcsqueeze import kernel
from jcsqueeze.dynamics import Propagation, ScanCache, TimeGrid
from jcsqueeze.pulse import PulseTrain
from jcsqueeze.quantum import SystemParams, build_space, coherent_excited_state


def _prop(n_max, sigma):
    params = SystemParams(100.0, 100.0, 100.0, n_max)
    state0 = coherent_excited_state(math.sqrt(6), build_space(n_max))
    return Propagation(state0, params, PulseTrain((), sigma), TimeGrid())


def _time(fn, repeats):
    runs = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs), out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n-max", type=int, nargs="+", default=[40, 80])
    ap.add_argument("--pulses", type=int, default=15)
    ap.add_argument("--sigma", type=float, default=0.05)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--python-repeats", type=int, default=1)
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    centers = np.sort(rng.uniform(0, 10, args.pulses))
    rows = []
    for n_max in args.n_max:
        prop = _prop(n_max, args.sigma)
        row = {"n_max": n_max, "pulses": args.pulses}
        results = {}
        for backend, reps in (("compiled", args.repeats), ("python", args.python_repeats)):
            if backend not in kernel.AVAILABLE:
                continue
            kernel.set_backend(backend)
            t, var = _time(lambda: prop.variance_trace(centers), reps)
            row[f"{backend}_s"] = t
            results[backend] = var
        kernel.set_backend(kernel.AVAILABLE[0])
        if len(results) == 2:
            row["speedup"] = row["python_s"] / row["compiled_s"]
            row["max_abs_diff"] = float(np.max(np.abs(results["compiled"] - results["python"])))
        # one resumed scan evaluation from prefix checkpoints, as the optimizers use it
        cache = ScanCache(prop, centers[:-1])
        row["scan_eval_s"], _ = _time(lambda: cache.evaluate(9.5), args.repeats)
        rows.append(row)
        print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()),
              flush=True)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"backends": list(kernel.AVAILABLE), "cases": rows}, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
