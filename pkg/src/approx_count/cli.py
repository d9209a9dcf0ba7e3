"""Command line entry point: ``approx-count gen|estimate|sweep|report``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .core import EstimatorError, exact_count
from .harness import (ConfigError, ExperimentConfig, MethodSpec, PredicateSpec, TrialContext,
                      METHODS, build_query, estimate_to_dict, load_dataset, read_records_csv,
                      records_to_csv, run_experiment, scorer_config, summarize, summary_to_csv,
                      summary_to_json, write_dataset_csv)
from .predicates import CountingOracle
from .synth import POINT_KINDS, generate_points

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATOR = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="approx-count", description="Estimate how many objects satisfy an "
                "expensive predicate from a small labelled sample.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    g.add_argument("--kind", choices=POINT_KINDS, default="clustered2d")
    g.add_argument("--N", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--positive-fraction", type=float, default=0.1,
                   help="separable2d only: share of points past the boundary")
    g.add_argument("--out", required=True)

    e = sub.add_parser("estimate", help="run one estimator once")
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV with id,x,y rows")
    src.add_argument("--generate", metavar="KIND:N:SEED", help="synthetic dataset, e.g. clustered2d:2000:1")
    e.add_argument("--query", choices=("skyband", "neighbors"), default="neighbors")
    e.add_argument("--k", type=int, default=5)
    e.add_argument("--d", type=float, default=0.2)
    e.add_argument("--include-self", action="store_true")
    e.add_argument("--alpha-mix", type=float, default=0.0)
    e.add_argument("--noise", default="gaussian", help="gaussian, gaussian:SD, gaussian:rel:F or zipf:S")
    e.add_argument("--noise-seed", type=int, default=0)
    e.add_argument("--method", choices=sorted(METHODS), default="lss")
    e.add_argument("--sample-frac", type=float, default=0.05)
    e.add_argument("--split", type=float, default=None, help="share of the budget spent on learning")
    e.add_argument("--strata", type=int, default=None)
    e.add_argument("--optimizer", default=None)
    e.add_argument("--alloc", choices=("neyman", "proportional"), default=None)
    e.add_argument("--ci-level", type=float, default=0.95)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--format", choices=("json", "csv"), default="json")
    e.add_argument("--scores", help="id,score CSV used as an external scorer")
    e.add_argument("--simulated-cost-ms", type=float, default=0.0)
    e.add_argument("--truth", action="store_true", help="also report the exact count")

    s = sub.add_parser("sweep", help="run a JSON experiment config")
    s.add_argument("config")
    s.add_argument("--out", required=True, help="trial records CSV")
    s.add_argument("--summary", help="JSON summary path")
    s.add_argument("--quiet", action="store_true")

    r = sub.add_parser("report", help="summarize a trial records CSV")
    r.add_argument("records")
    r.add_argument("--group-by", default="method,sample_size")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def _dataset_source(args) -> dict:
    if args.data:
        return {"csv": args.data}
    parts = args.generate.split(":")
    if len(parts) != 3:
        raise ConfigError("--generate expects KIND:N:SEED")
    try:
        return {"generate": {"kind": parts[0], "N": int(parts[1]), "seed": int(parts[2])}}
    except ValueError:
        raise ConfigError("--generate expects integer N and SEED") from None


def _method_params(args) -> dict:
    params: dict = {}
    name = args.method
    if args.split is not None:
        if name in ("srs", "ssp", "ssn"):
            raise ConfigError(f"--split does not apply to {name}")
        params["learn_fraction"] = args.split
    if args.strata is not None:
        if name not in ("ssp", "ssn", "lss"):
            raise ConfigError(f"--strata does not apply to {name}")
        params["H"] = args.strata
    for flag, key in (("optimizer", "optimizer"), ("alloc", "allocation")):
        if getattr(args, flag) is not None:
            if name != "lss":
                raise ConfigError(f"--{flag} applies only to lss")
            params[key] = getattr(args, flag)
    return params


def cmd_gen(args) -> int:
    if args.N < 1:
        raise ConfigError("--N must be at least 1")
    ds = generate_points(args.kind, args.N, args.seed, positive_fraction=args.positive_fraction)
    write_dataset_csv(ds, args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    if not 0 < args.ci_level < 1:
        raise ConfigError("--ci-level must lie in (0, 1)")
    if not 0 < args.sample_frac <= 1:
        raise ConfigError("--sample-frac must lie in (0, 1]")
    dataset = load_dataset(_dataset_source(args))
    spec = PredicateSpec(args.query, args.k, args.d, args.include_self, args.alpha_mix,
                         args.noise, args.noise_seed)
    query = build_query(dataset, spec)
    scorer = scorer_config({"kind": "external", "path": args.scores} if args.scores
                           else {"kind": "knn", "k": 3}, dataset)
    method = MethodSpec(args.method, _method_params(args))
    ctx = TrialContext(dataset, scorer, 1.0 - args.ci_level)
    n = max(1, min(len(dataset), int(round(args.sample_frac * len(dataset)))))
    oracle = CountingOracle(query, simulated_cost_ms=args.simulated_cost_ms)
    est = METHODS[method.name](oracle, ctx, n, method.params, args.seed)
    out = estimate_to_dict(est)
    out["sample_size"] = n
    if args.truth:
        out["truth"] = exact_count(CountingOracle(query), dataset)
    if args.format == "json":
        sys.stdout.write(json.dumps(out, indent=2, sort_keys=True) + "\n")
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        ci = out["ci"] or [None, None]
        row = {"method": out["method"], "count": out["count"], "proportion": out["proportion"],
               "variance": out["variance"], "ci_lo": ci[0], "ci_hi": ci[1],
               "oracle_calls": out["oracle_calls"], "seed": out["seed"], "sample_size": n,
               **out["timings"]}
        if args.truth:
            row["truth"] = out["truth"]
        w.writerow(row.keys())
        w.writerow(["" if v is None else v for v in row.values()])
        sys.stdout.write(buf.getvalue())
    for msg in est.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    progress = None if args.quiet else (lambda msg: print(msg, file=sys.stderr))
    records = run_experiment(cfg, progress)
    Path(args.out).write_text(records_to_csv(records, timing=cfg.timing))
    if args.summary:
        Path(args.summary).write_text(summary_to_json(summarize(records)))
    return EXIT_OK


def cmd_report(args) -> int:
    records = read_records_csv(args.records)
    if not records:
        raise ConfigError(f"{args.records}: no records")
    group_by = tuple(g.strip() for g in args.group_by.split(",") if g.strip())
    bad = [g for g in group_by if g not in ("method", "sample_size", "status")]
    if bad:
        raise ConfigError(f"cannot group by {bad}")
    rows = summarize(records, group_by)
    sys.stdout.write(summary_to_json(rows) if args.format == "json" else summary_to_csv(rows))
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "estimate": cmd_estimate, "sweep": cmd_sweep, "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except EstimatorError as err:
        print(f"estimator error: {err}", file=sys.stderr)
        return EXIT_ESTIMATOR


if __name__ == "__main__":
    sys.exit(main())
