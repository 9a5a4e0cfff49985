"""Time the compiled and numpy path kernels on the reference configuration.

    python3 benchmarks/bench_kernels.py --paths 100000 --repeat 3

Both backends run the same schedule and random draws; the script also
checks that their ensembles are bit-identical.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mfcontract import kernels
from mfcontract.incentives import equilibrium_agent_policy, optimal_policy
from mfcontract.model import MarketParams
from mfcontract.moments import solve_moments
from mfcontract.simulator import SimConfig, build_schedule, run_schedule
from mfcontract.value_ode import solve_coefficients


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    p = MarketParams()
    coeffs = solve_coefficients(p)
    pol = optimal_policy(coeffs, p)
    flow = solve_moments(coeffs, p)
    cfg = SimConfig(n_paths=args.paths, n_steps=args.steps, workers=args.workers)
    sched = build_schedule(p, pol, equilibrium_agent_policy(pol, p), flow, cfg.n_steps)

    results = {}
    print(f"{'backend':<10}{'best [s]':>10}{'median [s]':>12}{'paths/s':>12}")
    for name in kernels.available_backends():
        times = []
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            ens = run_schedule(p, pol.y0, sched, cfg, backend=name)
            times.append(time.perf_counter() - t0)
        results[name] = ens
        best = min(times)
        print(f"{name:<10}{best:>10.3f}{np.median(times):>12.3f}{args.paths / best:>12.0f}")

    if len(results) == 2:
        a, b = results["compiled"], results["python"]
        same = all(np.array_equal(getattr(a, f), getattr(b, f)) for f in
                   ("x_terminal", "y_terminal", "jump_count", "cost_integral", "reward_sum",
                    "g_integral", "x_snapshots", "ybar_snapshots"))
        print(f"bit-identical ensembles: {same}")
    else:
        print("compiled backend not built; only the numpy kernel was timed")


if __name__ == "__main__":
    main()
