"""MAE of SRS and LSS as the skyband predicate is mixed with Gaussian noise.

Usage: python3 scripts/alpha_sweep.py [--trials 100] [--out alpha_sweep.csv]
"""

import argparse
import csv
import sys

from approx_count import ExperimentConfig, run_experiment, summarize

ALPHAS = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--N", type=int, default=2000)
    p.add_argument("--k", type=int, default=350, help="skyband threshold")
    p.add_argument("--noise", default="gaussian:rel:1")
    p.add_argument("--sample-frac", type=float, default=0.2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--out", default="-")
    args = p.parse_args(argv)

    rows = []
    for a in ALPHAS:
        cfg = ExperimentConfig.from_dict({
            "schema": 1, "dataset": {"generate": {"kind": "uniform2d", "N": args.N, "seed": 11}},
            "predicate": {"kind": "skyband", "k": args.k, "alpha_mix": a, "noise": args.noise,
                          "noise_seed": 5},
            "methods": ["srs", "lss", "qlsc"], "sample_fractions": [args.sample_frac],
            "trials": args.trials, "master_seed": 6})
        for r in summarize(run_experiment(cfg), ("method",)):
            rows.append({"alpha": a, "method": r["method"], "truth": r["truth"], "mae": r["mae"],
                         "iqr": r["iqr"]})
        print(f"alpha={a}: done", file=sys.stderr)

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


if __name__ == "__main__":
    main()
