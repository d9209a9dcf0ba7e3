"""Learn/design/apply overhead of LSS against a simulated per-call oracle cost.

Usage: python3 scripts/overhead.py [--N 50000] [--cost-ms 1] [--trials 5]
"""

import argparse

import numpy as np

from approx_count import CountingOracle, NeighborsQuery, ScorerConfig, generate_points
from approx_count.lss import lss_budget, lss_estimate


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=50000)
    p.add_argument("--cost-ms", type=float, default=1.0)
    p.add_argument("--budget-frac", type=float, default=0.02)
    p.add_argument("--trials", type=int, default=5)
    args = p.parse_args(argv)

    ds = generate_points("clustered2d", args.N, 3)
    q = NeighborsQuery(ds, 15, 0.2)
    n = int(round(args.budget_frac * args.N))
    run = lambda s: lss_estimate(CountingOracle(q, cache=False, simulated_cost_ms=args.cost_ms), ds,
                                 ScorerConfig(), lss_budget(n), seed=s)
    run(-1)  # warm-up
    print("trial,total_ms,learn_ms,design_ms,apply_ms,overhead_pct")
    pct = []
    for s in range(args.trials):
        t = run(s).timings
        over = t["learn_ms"] + t["design_ms"] + t["apply_ms"]
        pct.append(100 * over / t["total_ms"])
        print(f"{s},{t['total_ms']:.1f},{t['learn_ms']:.2f},{t['design_ms']:.2f},{t['apply_ms']:.2f},"
              f"{pct[-1]:.3f}")
    print(f"# mean overhead {np.mean(pct):.3f}% of wall time")


if __name__ == "__main__":
    main()
