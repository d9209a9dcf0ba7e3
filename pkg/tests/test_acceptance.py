"""End-to-end acceptance checks. Each test prints one PASS/FAIL line."""

import json
import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from approx_count import (Budget, CountingOracle, ExperimentConfig, HalfPlaneQuery, NeighborsQuery,
                          QuantifyConfig, ScorerConfig, generate_points, lss_budget, lss_estimate,
                          qlac_estimate, qlcc_estimate, run_experiment, srs_estimate, ssp_estimate,
                          summarize)
from approx_count.core import DegenerateAdjustment
from approx_count.lss import LSSConfig
from approx_count.lss_design import (PROPORTIONAL, DesignConstraints, SampleRanks,
                                     brute_force_design, build_prefix_index, dirsol, dynpgm,
                                     dynpgmp, evaluate_design, fixed_height_strata,
                                     fixed_width_strata, locate_sample_ranks, logbdr)
from approx_count.lws import DrawSequence, des_raj_running, des_raj_terms
from approx_count.rng import Stream
from approx_count.synth import separable_threshold

pytestmark = pytest.mark.acceptance


@pytest.fixture
def verdict(capsys, request):
    def emit(ok: bool, detail: str):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {request.node.name}: {detail}")
        return ok
    return emit


def experiment(**over):
    raw = {"schema": 1, "sample_fractions": [0.05], "trials": 100, "master_seed": 1}
    raw.update(over)
    return ExperimentConfig.from_dict(raw)


def by_method(records):
    return {r["method"]: r for r in summarize(records, ("method",))}


CLUSTERED = {"generate": {"kind": "clustered2d", "N": 2000, "seed": 1}}
NEIGHBORS = {"kind": "neighbors", "k": 15, "d": 0.2}


# ---------------------------------------------------------------- 1


def _battery_instance(rng, N):
    m = int(rng.integers(9, 26))
    iota = np.sort(rng.choice(np.arange(1, N + 1), size=m, replace=False))
    cut = rng.uniform(0.1, 0.9) * N
    hi, lo = rng.uniform(0.5, 1.0), rng.uniform(0.0, 0.4)
    labels = rng.random(m) < np.where(iota > cut, hi, lo)
    return SampleRanks(iota), build_prefix_index(labels)


def test_c1_approximation_bounds(verdict):
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    checks = {"dirsol": 0, "logbdr": 0, "dynpgm": 0, "dynpgmp": 0}
    violations = []
    tol = 1e-9
    while min(checks.values()) < 60:
        N = int(rng.integers(60, 301))
        ranks, g = _battery_instance(rng, N)
        # Theorems 1 and 2: N_floor > n
        n = int(rng.integers(2, 21))
        Nf = int(rng.integers(n + 1, n + 15))
        if 3 * Nf <= N:
            con = DesignConstraints(3, Nf, 2, n)
            try:
                best = brute_force_design(ranks, g, N, con)
            except Exception:
                best = None
            if best is not None:
                v = dirsol(ranks, g, N, con).objective
                bound = (1 + 2 / Nf + 2 / (Nf - n) + 4 / (Nf * (Nf - n))) * best.objective
                checks["dirsol"] += 1
                if v > bound + tol:
                    violations.append(("dirsol", N, v, best.objective))
                v = logbdr(ranks, g, N, con).objective
                ratio = max(4.0, 2 + 2 * max(Nh / (Nh - n) for Nh in best.sizes))
                checks["logbdr"] += 1
                if v > ratio * best.objective + tol:
                    violations.append(("logbdr", N, v, best.objective))
        # Theorem 3: N_floor >= 4n
        H = int(rng.integers(2, 4))
        n = int(rng.integers(1, 21))
        Nf = 4 * n
        if H * Nf <= N:
            con = DesignConstraints(H, Nf, 2, n)
            try:
                best = brute_force_design(ranks, g, N, con)
            except Exception:
                best = None
            if best is not None:
                eps = 0.05
                v = dynpgm(ranks, g, N, con, eps).objective
                bound = max(14 / 3 * (10 * H - 9) * best.objective,
                            14 / 3 * (5 * H - 4) * best.objective + eps)
                checks["dynpgm"] += 1
                if v > bound + tol:
                    violations.append(("dynpgm", N, v, best.objective))
        # Theorem 4: proportional objective
        H = int(rng.integers(2, 4))
        n = int(rng.integers(1, 21))
        Nf = int(rng.integers(1, 30))
        if H * Nf <= N:
            con = DesignConstraints(H, Nf, 2, n)
            try:
                best = brute_force_design(ranks, g, N, con, PROPORTIONAL)
            except Exception:
                best = None
            if best is not None:
                v = dynpgmp(ranks, g, N, con).objective
                checks["dynpgmp"] += 1
                if v > 2 * best.objective + tol:
                    violations.append(("dynpgmp", N, v, best.objective))
    elapsed = time.perf_counter() - t0
    ok = not violations and elapsed < 120
    verdict(ok, f"instances {checks}, violations {len(violations)}, {elapsed:.1f}s")
    assert not violations, violations[:5]
    assert elapsed < 120


# ---------------------------------------------------------------- 2


def test_c2_ci_coverage(verdict):
    t0 = time.perf_counter()
    cfg = experiment(dataset=CLUSTERED, predicate=NEIGHBORS, trials=2000, master_seed=2,
                     methods=["srs", "ssp", "ssn", "qlsc", "lws", "lss"])
    records = run_experiment(cfg)
    rows = by_method(records)
    truth = records[0].truth
    elapsed = time.perf_counter() - t0
    cov = {m: r["coverage"] for m, r in rows.items()}
    bad = {m: c for m, c in cov.items() if not 0.93 <= c <= 0.97 or rows[m]["failures"]}
    verdict(not bad and elapsed < 600,
            f"p={truth / 2000:.3f}, coverage {', '.join(f'{m} {c:.3f}' for m, c in cov.items())}, "
            f"{elapsed:.0f}s")
    assert 0.25 <= truth / 2000 <= 0.35
    assert elapsed < 600
    assert not bad, bad


# ---------------------------------------------------------------- 3


def test_c3_unbiasedness(verdict):
    t0 = time.perf_counter()
    base = dict(dataset={"generate": {"kind": "clustered2d", "N": 300, "seed": 1}},
                predicate={"kind": "neighbors", "k": 10, "d": 0.3}, sample_fractions=[0.2],
                trials=5000, master_seed=3)
    runs = [("-", experiment(methods=["srs", "ssp", "ssn"], **base))]  # scorer not used
    for kind in ("knn", "random"):
        runs.append((kind, experiment(methods=["qlsc", "lws", "lss"],
                                      scorer={"kind": kind, "k": 3} if kind == "knn" else {"kind": kind},
                                      **base)))
    z = {}
    for kind, cfg in runs:
        records = run_experiment(cfg)
        for m in dict.fromkeys(r.method for r in records):
            est = np.array([r.count for r in records if r.method == m and r.status == "ok"])
            assert est.size == cfg.trials, f"{m} had failed trials"
            z[f"{m}/{kind}"] = (est.mean() - records[0].truth) / (est.std(ddof=1) / math.sqrt(est.size))
    elapsed = time.perf_counter() - t0
    ok = all(abs(v) < 3 for v in z.values()) and elapsed < 300
    verdict(ok, ", ".join(f"{k} z={v:+.2f}" for k, v in z.items()) + f", {elapsed:.0f}s")
    assert all(abs(v) < 3 for v in z.values()), z
    assert elapsed < 300


# ---------------------------------------------------------------- 4


def test_c4_learn_to_sample_advantage(verdict):
    N, n, trials = 50000, 1000, 200
    table, ok = [], True
    for f in (0.01, 0.1, 0.5):
        ds = generate_points("separable2d", N, 7, positive_fraction=f)
        q = HalfPlaneQuery(ds, (1.0, 1.0), separable_threshold(f))
        truth = int(q.labels().sum())
        mae = {}
        for name, fn in (("srs", lambda o, s: srs_estimate(o, ds, n, seed=s)),
                         ("ssp", lambda o, s: ssp_estimate(o, ds, n, seed=s)),
                         ("lss", lambda o, s: lss_estimate(o, ds, ScorerConfig(), lss_budget(n),
                                                           seed=s))):
            est = np.array([fn(CountingOracle(q), s).count for s in range(trials)])
            mae[name] = float(np.abs(est - truth).mean())
        ok &= mae["lss"] < mae["srs"] and mae["lss"] < mae["ssp"]
        table.append((f, mae))
    verdict(ok, "; ".join(f"f={f}: " + " ".join(f"{k} {v:.0f}" for k, v in m.items())
                          for f, m in table))
    for f, mae in table:
        assert mae["lss"] < mae["srs"] and mae["lss"] < mae["ssp"], (f, mae)


def test_c4_scorer_quality_precondition(verdict):
    from approx_count.scorers import f1_score, train_knn
    ds = generate_points("separable2d", 50000, 7, positive_fraction=0.1)
    truth = HalfPlaneQuery(ds, (1.0, 1.0), separable_threshold(0.1)).labels()
    idx = Stream(0).sample(50000, 250)  # the learning share of a 2% budget
    held = np.setdiff1d(np.arange(50000), idx)
    f1 = f1_score(train_knn((idx, truth[idx]), ds, 3).predict_indices(ds, held), truth[held])
    verdict(f1 >= 0.85, f"k-NN F1 {f1:.3f}")
    assert f1 >= 0.85


# ---------------------------------------------------------------- 5


def test_c5_robustness_to_bad_models(verdict):
    settings = [(CLUSTERED, NEIGHBORS),
                ({"generate": {"kind": "uniform2d", "N": 2000, "seed": 1}}, {"kind": "skyband", "k": 20}),
                ({"generate": {"kind": "uniform2d", "N": 2000, "seed": 1}}, {"kind": "skyband", "k": 100})]
    lss_ok, qlcc_bad, parts = True, False, []
    for ds, pred in settings:
        rows = by_method(run_experiment(experiment(dataset=ds, predicate=pred, trials=200, master_seed=4,
                                                   methods=["srs", "lss", "qlcc"],
                                                   scorer={"kind": "random"})))
        r_lss = rows["lss"]["mae"] / rows["srs"]["mae"]
        r_qlcc = rows["qlcc"]["mae"] / rows["srs"]["mae"]
        lss_ok &= r_lss <= 1.6 and rows["lss"]["failures"] == 0
        qlcc_bad |= r_qlcc > 1.6
        parts.append(f"p={rows['srs']['truth'] / 2000:.3f} lss/srs {r_lss:.2f} qlcc/srs {r_qlcc:.2f}")
    verdict(lss_ok and qlcc_bad, "; ".join(parts))
    assert lss_ok and qlcc_bad


# ---------------------------------------------------------------- 6


def test_c6_alpha_sweep_shape(verdict):
    t0 = time.perf_counter()
    alphas = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
    ratios, mae = [], []
    for a in alphas:
        cfg = experiment(dataset={"generate": {"kind": "uniform2d", "N": 2000, "seed": 11}},
                         predicate={"kind": "skyband", "k": 350, "alpha_mix": a,
                                    "noise": "gaussian:rel:1", "noise_seed": 5},
                         methods=["srs", "lss"], sample_fractions=[0.2], trials=100, master_seed=6)
        rows = by_method(run_experiment(cfg))
        mae.append((rows["srs"]["mae"], rows["lss"]["mae"]))
        ratios.append(rows["lss"]["mae"] / rows["srs"]["mae"])
    rho = spearmanr(alphas, ratios).statistic if hasattr(spearmanr(alphas, ratios), "statistic") \
        else spearmanr(alphas, ratios)[0]
    low = all(l < s for (s, l), a in zip(mae, alphas) if a <= 0.4)
    elapsed = time.perf_counter() - t0
    verdict(low and rho >= 0.8 and elapsed < 900,
            "ratios " + " ".join(f"{a}:{r:.2f}" for a, r in zip(alphas, ratios))
            + f", spearman {rho:.2f}, {elapsed:.0f}s")
    assert low and rho >= 0.8 and elapsed < 900


# ---------------------------------------------------------------- 7


def test_c7_layout_objectives(verdict):
    both = 0
    for seed in range(100):
        st = Stream(seed)
        N, m, n = 2000, 60, 200
        y = st.child("y").uniform(N) < 0.05
        scores = np.clip(np.where(y, 0.75, 0.1) + 0.15 * st.child("z").normal(N), 0, 1)
        ids = np.arange(N)
        ranks = locate_sample_ranks(scores, ids, st.child("s").sample(N, m))
        g = build_prefix_index(y[ranks.positions])
        sorted_scores = scores[np.lexsort((ids, scores))]
        con = DesignConstraints(3, 20, 2, n)
        lb = logbdr(ranks, g, N, con).objective
        fw = evaluate_design(fixed_width_strata(sorted_scores, 3), ranks, g, N, n, fallback_s=0.5).objective
        fh = evaluate_design(fixed_height_strata(N, 3), ranks, g, N, n, fallback_s=0.5).objective
        both += lb <= fw + 1e-9 and fw <= fh + 1e-9
    verdict(both >= 90, f"logbdr <= fixed_width <= fixed_height on {both}/100 instances")
    assert both >= 90


def test_c7_layout_iqr(verdict):
    # XS skew at the default 2% budget
    N, n, trials = 10000, 200, 200
    parts, ok = [], True
    for f in (0.01, 0.02):
        ds = generate_points("separable2d", N, 7, positive_fraction=f)
        q = HalfPlaneQuery(ds, (1.0, 1.0), separable_threshold(f))
        iqr = {}
        for opt in ("logbdr", "fixed_height"):
            cfg = LSSConfig(optimizer=opt)
            est = [lss_estimate(CountingOracle(q), ds, ScorerConfig(), lss_budget(n), cfg, seed=s).count
                   for s in range(trials)]
            q1, q3 = np.percentile(est, [25, 75])
            iqr[opt] = q3 - q1
        ok &= iqr["logbdr"] <= iqr["fixed_height"]
        parts.append(f"f={f}: logbdr {iqr['logbdr']:.2f} fixed_height {iqr['fixed_height']:.2f}")
    verdict(ok, "IQR " + "; ".join(parts))
    assert ok


# ---------------------------------------------------------------- 8


def test_c8_qlac_degeneracy(verdict):
    ds = generate_points("clustered2d", 500, 2)
    q = NeighborsQuery(ds, 15, 0.2)
    cfg = QuantifyConfig(Budget(50))
    try:
        qlac_estimate(CountingOracle(q), ds, cfg, 1, rates=(0.35, 0.95))
        degenerate = False
    except DegenerateAdjustment:
        degenerate = True
    same = qlac_estimate(CountingOracle(q), ds, cfg, 1, rates=(1.0, 0.0)).count == \
        qlcc_estimate(CountingOracle(q), ds, cfg, 1).count
    verdict(degenerate and same, f"(.35,.95) raises: {degenerate}; (1,0) returns C_obs: {same}")
    assert degenerate and same


# ---------------------------------------------------------------- 9


def test_c9_des_raj_identity(verdict):
    # N = 32 with 8 positives: pi = 1/(pN) = 1/8 on every positive and 0 elsewhere
    N, positives = 32, 8
    p = positives / N
    order = Stream(5).permutation(positives)
    seq = DrawSequence(order, np.full(positives, 1.0 / (p * N)), np.ones(positives, dtype=bool))
    terms = des_raj_terms(seq, N)
    p_hat, _ = des_raj_running(seq, N)
    exact = bool(np.all(terms == p) and np.all(p_hat == p))
    verdict(exact, f"terms {terms.tolist()} vs p={p}")
    assert exact


# ---------------------------------------------------------------- 10


def test_c10_overhead(verdict):
    ds = generate_points("clustered2d", 50000, 3)
    q = NeighborsQuery(ds, 15, 0.2)
    lss_estimate(CountingOracle(q, cache=False, simulated_cost_ms=1), ds, ScorerConfig(),
                 lss_budget(1000), seed=99)  # warm-up
    fractions, phases = [], []
    for s in range(5):
        est = lss_estimate(CountingOracle(q, cache=False, simulated_cost_ms=1), ds, ScorerConfig(),
                           lss_budget(1000), seed=s)
        t = est.timings
        overhead = t["learn_ms"] + t["design_ms"] + t["apply_ms"]
        fractions.append(overhead / t["total_ms"])
        phases.append([t["learn_ms"], t["design_ms"], t["apply_ms"], t["total_ms"]])
    frac = float(np.mean(fractions))
    learn, design, apply, total = np.mean(phases, axis=0)
    verdict(frac < 0.05, f"overhead {100 * frac:.2f}% of {total:.0f} ms "
                         f"(learn {learn:.1f}, design {design:.1f}, apply {apply:.1f} ms)")
    assert frac < 0.05


# ---------------------------------------------------------------- 11


def test_c11_sweep_determinism(verdict, tmp_path):
    from approx_count.cli import main
    cfg = {"schema": 1, "dataset": {"generate": {"kind": "clustered2d", "N": 500, "seed": 3}},
           "predicate": NEIGHBORS, "trials": 5, "master_seed": 8, "sample_fractions": [0.05, 0.1],
           "methods": ["srs", "ssp", "ssn", "qlcc", "qlac", "qlsc", "lws", "lss",
                       {"name": "lss", "label": "lss-logbdr", "optimizer": "logbdr"}]}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for i in range(2):
        out, summ = tmp_path / f"r{i}.csv", tmp_path / f"s{i}.json"
        assert main(["sweep", str(path), "--out", str(out), "--summary", str(summ), "--quiet"]) == 0
        outs.append((out.read_bytes(), summ.read_bytes()))
    same = outs[0] == outs[1]
    verdict(same, f"records {len(outs[0][0])} bytes, summaries {len(outs[0][1])} bytes, identical: {same}")
    assert same
