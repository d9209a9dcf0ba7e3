"""Compare strata layouts: design objectives on shared pilots and LSS estimate spread.

Usage: python3 scripts/layout_study.py [--instances 100] [--trials 500]
"""

import argparse

import numpy as np

from approx_count import CountingOracle, HalfPlaneQuery, ScorerConfig, generate_points
from approx_count.lss import LSSConfig, lss_budget, lss_estimate
from approx_count.lss_design import (DesignConstraints, build_prefix_index, dynpgm,
                                     evaluate_design, fixed_height_strata, fixed_width_strata,
                                     locate_sample_ranks, logbdr)
from approx_count.rng import Stream
from approx_count.synth import separable_threshold


def objectives(instances: int) -> None:
    wins = {"logbdr<=fixed_width": 0, "fixed_width<=fixed_height": 0, "dynpgm<=logbdr": 0}
    for seed in range(instances):
        st = Stream(seed)
        N, m, n = 2000, 60, 200
        y = st.child("y").uniform(N) < 0.05
        scores = np.clip(np.where(y, 0.75, 0.1) + 0.15 * st.child("z").normal(N), 0, 1)
        ids = np.arange(N)
        ranks = locate_sample_ranks(scores, ids, st.child("s").sample(N, m))
        g = build_prefix_index(y[ranks.positions])
        con = DesignConstraints(3, 20, 2, n)
        lb = logbdr(ranks, g, N, con).objective
        dp = dynpgm(ranks, g, N, con).objective
        fw = evaluate_design(fixed_width_strata(scores[np.lexsort((ids, scores))], 3), ranks, g, N, n,
                             fallback_s=0.5).objective
        fh = evaluate_design(fixed_height_strata(N, 3), ranks, g, N, n, fallback_s=0.5).objective
        wins["logbdr<=fixed_width"] += lb <= fw + 1e-9
        wins["fixed_width<=fixed_height"] += fw <= fh + 1e-9
        wins["dynpgm<=logbdr"] += dp <= lb + 1e-9
    for k, v in wins.items():
        print(f"{k}: {v}/{instances}")


def spread(trials: int) -> None:
    print("f,optimizer,mae,iqr")
    for f in (0.01, 0.02, 0.1):
        ds = generate_points("separable2d", 2000, 7, positive_fraction=f)
        q = HalfPlaneQuery(ds, (1.0, 1.0), separable_threshold(f))
        truth = int(q.labels().sum())
        for opt in ("logbdr", "dynpgm", "ticks", "fixed_width", "fixed_height"):
            est = np.array([lss_estimate(CountingOracle(q), ds, ScorerConfig(), lss_budget(100),
                                         LSSConfig(optimizer=opt), seed=s).count
                            for s in range(trials)])
            q1, q3 = np.percentile(est, [25, 75])
            print(f"{f},{opt},{np.abs(est - truth).mean():.3f},{q3 - q1:.3f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--trials", type=int, default=500)
    a = p.parse_args()
    objectives(a.instances)
    spread(a.trials)
