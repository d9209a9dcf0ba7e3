"""Experiment plumbing: CSV ingestion, configs, trial sweeps and summaries."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from .baselines import grid_stratify, srs_estimate, ssn_estimate, ssp_estimate
from .core import Budget, Dataset, Estimate, EstimatorError, exact_count
from .lss import LSSConfig, lss_budget, lss_estimate
from .lws import lws_estimate
from .predicates import (CountingOracle, NeighborsQuery, NoisySkybandQuery, Query, SkybandQuery,
                         dominance_counts)
from .quantification import QuantifyConfig, qlac_estimate, qlcc_estimate, qlsc_estimate
from .rng import derive_key
from .scorers import ScorerConfig
from .synth import POINT_KINDS, NoiseSpec, generate_points, make_noise_table

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration or input file."""


# ---------------------------------------------------------------- ingestion


def load_csv(path) -> Dataset:
    """Read ``id,x,y`` or ``id,f1,..,fd`` rows into a Dataset.

    Errors name the offending line (the header is line 1).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}") from None
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if not header:
        raise ConfigError(f"{path}: empty file")
    header = [h.strip() for h in header]
    if header[0] != "id" or len(header) < 2:
        raise ConfigError(f"{path}: line 1: header must be 'id' followed by feature columns")
    d = len(header) - 1
    ids: list[int] = []
    feats: list[list[float]] = []
    seen: set[int] = set()
    for line, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != d + 1:
            raise ConfigError(f"{path}: line {line}: expected {d + 1} fields, got {len(row)}")
        try:
            i = int(row[0])
        except ValueError:
            raise ConfigError(f"{path}: line {line}: id {row[0]!r} is not an integer") from None
        if i < 0:
            raise ConfigError(f"{path}: line {line}: id {i} is negative")
        if i in seen:
            raise ConfigError(f"{path}: line {line}: duplicate id {i}")
        try:
            f = [float(c) for c in row[1:]]
        except ValueError:
            raise ConfigError(f"{path}: line {line}: non-numeric feature value") from None
        if not all(math.isfinite(v) for v in f):
            raise ConfigError(f"{path}: line {line}: non-finite feature value")
        seen.add(i)
        ids.append(i)
        feats.append(f)
    if not ids:
        raise ConfigError(f"{path}: no data rows")
    return Dataset(ids, np.array(feats, dtype=np.float64))


def write_dataset_csv(dataset: Dataset, path) -> None:
    d = dataset.dimension
    names = ["x", "y"] if d == 2 else [f"f{j + 1}" for j in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", *names])
        for i, row in zip(dataset.ids.tolist(), dataset.features.tolist()):
            w.writerow([i, *(repr(v) for v in row)])


def load_scores(path) -> tuple[tuple, tuple]:
    """Read an ``id,score`` file; scores must lie in [0, 1]."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}") from None
    rows = csv.reader(io.StringIO(text))
    header = [h.strip() for h in (next(rows, None) or [])]
    if header != ["id", "score"]:
        raise ConfigError(f"{path}: line 1: header must be 'id,score'")
    ids, scores, seen = [], [], set()
    for line, row in enumerate(rows, start=2):
        if not row:
            continue
        try:
            i, s = int(row[0]), float(row[1])
        except (ValueError, IndexError):
            raise ConfigError(f"{path}: line {line}: malformed row") from None
        if not 0.0 <= s <= 1.0:
            raise ConfigError(f"{path}: line {line}: score {s} outside [0, 1]")
        if i in seen:
            raise ConfigError(f"{path}: line {line}: duplicate id {i}")
        seen.add(i)
        ids.append(i)
        scores.append(s)
    return tuple(ids), tuple(scores)


# ---------------------------------------------------------------- configuration


@dataclass(frozen=True)
class PredicateSpec:
    kind: str = "neighbors"  # neighbors | skyband
    k: int = 5
    d: float = 0.2
    include_self: bool = False
    alpha_mix: float = 0.0
    noise: str = "gaussian"
    noise_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("neighbors", "skyband"):
            raise ConfigError(f"unknown predicate kind {self.kind!r}")
        if self.k < 0 or (self.kind == "skyband" and self.k < 1):
            raise ConfigError("predicate k out of range")
        if self.kind == "neighbors" and not self.d > 0:
            raise ConfigError("neighbors distance d must be positive")
        if not 0.0 <= self.alpha_mix <= 1.0:
            raise ConfigError("alpha_mix must lie in [0, 1]")
        try:
            NoiseSpec.parse(self.noise)
        except ValueError as err:
            raise ConfigError(str(err)) from None


def build_query(dataset: Dataset, spec: PredicateSpec) -> Query:
    """Predicate object for a dataset; skyband with alpha_mix > 0 mixes in noise."""
    if dataset.dimension != 2:
        raise ConfigError("predicates need 2-D data")
    if spec.kind == "neighbors":
        return NeighborsQuery(dataset, spec.k, spec.d, include_self=spec.include_self)
    if spec.alpha_mix == 0.0:
        return SkybandQuery(dataset, spec.k)
    noise = make_noise_table(NoiseSpec.parse(spec.noise, seed=spec.noise_seed), dataset.ids,
                             dominance_counts(dataset))
    return NoisySkybandQuery(dataset, spec.k, spec.alpha_mix, noise)


@dataclass(frozen=True)
class MethodSpec:
    name: str
    params: dict = field(default_factory=dict)
    label: Optional[str] = None

    @property
    def tag(self) -> str:
        return self.label or self.name


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a sweep.

    ``dataset`` is ``{"generate": {"kind", "N", "seed"}}`` or ``{"csv": path}``.
    ``sample_fractions`` are shares of N; each is rounded to an integer
    budget of at least 1. ``timing`` adds wall-clock columns to the records,
    which makes them machine dependent.
    """

    dataset: dict
    predicate: PredicateSpec
    methods: tuple
    sample_fractions: tuple = (0.05,)
    trials: int = 100
    master_seed: int = 0
    alpha: float = 0.05
    scorer: dict = field(default_factory=lambda: {"kind": "knn", "k": 3})
    timing: bool = False
    simulated_cost_ms: float = 0.0
    cache: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.methods:
            raise ConfigError("at least one method is required")
        for f in self.sample_fractions:
            if not 0 < f <= 1:
                raise ConfigError(f"sample fraction {f} outside (0, 1]")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        for m in self.methods:
            if m.name not in METHODS:
                raise ConfigError(f"unknown method {m.name!r}; expected one of {sorted(METHODS)}")
            unknown = set(m.params) - set(METHOD_PARAMS[m.name])
            if unknown:
                raise ConfigError(f"method {m.name}: unknown parameters {sorted(unknown)}")
        tags = [m.tag for m in self.methods]
        if len(set(tags)) != len(tags):
            raise ConfigError("method labels must be unique")
        if "generate" not in self.dataset and "csv" not in self.dataset:
            raise ConfigError("dataset needs 'generate' or 'csv'")

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Optional[Path] = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if raw.get("schema") != SCHEMA_VERSION:
            raise ConfigError(f"config schema must be {SCHEMA_VERSION}, got {raw.get('schema')!r}")
        allowed = {"schema", "dataset", "predicate", "methods", "sample_fractions", "trials",
                   "master_seed", "alpha", "scorer", "timing", "simulated_cost_ms", "cache"}
        extra = set(raw) - allowed
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        try:
            dataset = dict(raw["dataset"])
            if "csv" in dataset and base_dir is not None:
                dataset["csv"] = str((base_dir / dataset["csv"]).resolve())
            methods = []
            for m in raw["methods"]:
                m = {"name": m} if isinstance(m, str) else dict(m)
                name = m.pop("name")
                label = m.pop("label", None)
                methods.append(MethodSpec(name, m, label))
            scorer = dict(raw.get("scorer", {"kind": "knn", "k": 3}))
            if "path" in scorer and base_dir is not None:
                scorer["path"] = str((base_dir / scorer["path"]).resolve())
            return cls(dataset=dataset,
                       predicate=PredicateSpec(**raw.get("predicate", {})),
                       methods=tuple(methods),
                       sample_fractions=tuple(float(f) for f in raw.get("sample_fractions", [0.05])),
                       trials=int(raw.get("trials", 100)),
                       master_seed=int(raw.get("master_seed", 0)),
                       alpha=float(raw.get("alpha", 0.05)),
                       scorer=scorer,
                       timing=bool(raw.get("timing", False)),
                       simulated_cost_ms=float(raw.get("simulated_cost_ms", 0.0)),
                       cache=bool(raw.get("cache", True)))
        except (KeyError, TypeError) as err:
            raise ConfigError(f"malformed config: {err}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except OSError as err:
            raise ConfigError(f"{path}: {err.strerror or err}") from None
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path}: line {err.lineno}: {err.msg}") from None
        return cls.from_dict(raw, base_dir=path.parent)

    def to_dict(self) -> dict:
        return {"schema": SCHEMA_VERSION, "dataset": self.dataset,
                "predicate": asdict(self.predicate),
                "methods": [{"name": m.name, **({"label": m.label} if m.label else {}), **m.params}
                            for m in self.methods],
                "sample_fractions": list(self.sample_fractions), "trials": self.trials,
                "master_seed": self.master_seed, "alpha": self.alpha, "scorer": self.scorer,
                "timing": self.timing, "simulated_cost_ms": self.simulated_cost_ms,
                "cache": self.cache}


def load_dataset(spec: dict) -> Dataset:
    if "csv" in spec:
        return load_csv(spec["csv"])
    g = spec["generate"]
    kind = g.get("kind", "clustered2d")
    if kind not in POINT_KINDS:
        raise ConfigError(f"unknown point kind {kind!r}")
    extra = {k: g[k] for k in ("positive_fraction", "margin") if k in g}
    return generate_points(kind, int(g["N"]), int(g.get("seed", 0)), **extra)


def scorer_config(spec: dict, dataset: Dataset) -> ScorerConfig:
    spec = dict(spec)
    kind = spec.pop("kind", "knn")
    if kind == "external":
        ids, scores = load_scores(spec.pop("path"))
        missing = set(dataset.ids.tolist()) - set(ids)
        if missing:
            raise ConfigError(f"score file lacks id {min(missing)}")
        return ScorerConfig("external", ids=ids, scores=scores)
    try:
        return ScorerConfig(kind, k=int(spec.pop("k", 3)))
    except ValueError as err:
        raise ConfigError(str(err)) from None


# ---------------------------------------------------------------- method registry


@dataclass
class TrialContext:
    dataset: Dataset
    scorer: ScorerConfig
    alpha: float
    _grids: dict = field(default_factory=dict)

    def grid(self, H: int):
        if H not in self._grids:
            self._grids[H] = grid_stratify(self.dataset, H)
        return self._grids[H]


def _quant_cfg(n: int, ctx: TrialContext, p: dict, default_learn: float) -> QuantifyConfig:
    learn = float(p.get("learn_fraction", default_learn))
    return QuantifyConfig(Budget(n), ctx.scorer, folds=int(p.get("folds", 5)),
                          correction_fraction=1.0 - learn, delta=float(p.get("delta", 0.05)),
                          augment_fraction=float(p.get("augment_fraction", 0.0)),
                          pool_factor=int(p.get("pool_factor", 20)))


def _lss_cfg(p: dict) -> LSSConfig:
    keys = ("H", "optimizer", "allocation", "N_floor", "m_floor", "base", "eps", "spacing",
            "smooth_allocation")
    return LSSConfig(**{k: p[k] for k in keys if k in p})


MethodRunner = Callable[[Any, TrialContext, int, dict, int], Estimate]

METHODS: dict[str, MethodRunner] = {
    "srs": lambda o, ctx, n, p, s: srs_estimate(o, ctx.dataset, n, ctx.alpha, s),
    "ssp": lambda o, ctx, n, p, s: ssp_estimate(o, ctx.dataset, n, int(p.get("H", 4)), ctx.alpha, s),
    "ssn": lambda o, ctx, n, p, s: ssn_estimate(
        o, ctx.dataset, ctx.grid(int(p.get("H", 4))), n, float(p.get("pilot_fraction", 0.25)),
        ctx.alpha, s, smooth=bool(p.get("smooth_allocation", True))),
    "qlcc": lambda o, ctx, n, p, s: qlcc_estimate(o, ctx.dataset, _quant_cfg(n, ctx, p, 0.25), s),
    "qlac": lambda o, ctx, n, p, s: qlac_estimate(o, ctx.dataset, _quant_cfg(n, ctx, p, 0.25), s),
    "qlsc": lambda o, ctx, n, p, s: qlsc_estimate(o, ctx.dataset, _quant_cfg(n, ctx, p, 0.25), s,
                                                  ctx.alpha),
    "lws": lambda o, ctx, n, p, s: lws_estimate(
        o, ctx.dataset, ctx.scorer, Budget(n, float(p.get("learn_fraction", 0.25))),
        float(p.get("epsilon", 0.2)), ctx.alpha, s),
    "lss": lambda o, ctx, n, p, s: lss_estimate(
        o, ctx.dataset, ctx.scorer,
        lss_budget(n, float(p.get("learn_fraction", 0.25)), float(p.get("design_share", 0.25))),
        _lss_cfg(p), ctx.alpha, s),
}

METHOD_PARAMS: dict[str, tuple] = {
    "srs": (),
    "ssp": ("H",),
    "ssn": ("H", "pilot_fraction", "smooth_allocation"),
    "qlcc": ("learn_fraction", "folds", "delta", "augment_fraction", "pool_factor"),
    "qlac": ("learn_fraction", "folds", "delta", "augment_fraction", "pool_factor"),
    "qlsc": ("learn_fraction", "folds", "delta", "augment_fraction", "pool_factor"),
    "lws": ("learn_fraction", "epsilon"),
    "lss": ("learn_fraction", "design_share", "H", "optimizer", "allocation", "N_floor",
            "m_floor", "base", "eps", "spacing", "smooth_allocation"),
}
# QLCC and QLAC spend the whole budget on training; their learn_fraction is unused.


# ---------------------------------------------------------------- trials


RECORD_FIELDS = ("method", "sample_size", "trial", "seed", "status", "count", "proportion",
                 "variance", "ci_lo", "ci_hi", "oracle_calls", "truth", "abs_error", "covered",
                 "error", "warnings")
TIMING_FIELDS = ("wall_ms", "learn_ms", "design_ms", "apply_ms", "overhead_ms")


@dataclass
class TrialRecord:
    method: str
    sample_size: int
    trial: int
    seed: int
    status: str  # ok | failed
    count: Optional[float]
    proportion: Optional[float]
    variance: Optional[float]
    ci_lo: Optional[float]
    ci_hi: Optional[float]
    oracle_calls: int
    truth: int
    abs_error: Optional[float]
    covered: Optional[bool]
    error: str = ""
    warnings: str = ""
    wall_ms: Optional[float] = None
    learn_ms: Optional[float] = None
    design_ms: Optional[float] = None
    apply_ms: Optional[float] = None
    overhead_ms: Optional[float] = None


def trial_seed(master_seed: int, method: str, size: int, trial: int) -> int:
    """Per-trial seed derived from the master seed, method tag, budget and trial index."""
    return derive_key("trial", master_seed, method, size, trial)


def sample_sizes(fractions: Sequence[float], N: int) -> list[int]:
    return [max(1, min(N, int(round(f * N)))) for f in fractions]


def run_trial(method: MethodSpec, ctx: TrialContext, query: Query, n: int, trial: int, seed: int,
              truth: int, cache: bool = True, simulated_cost_ms: float = 0.0) -> TrialRecord:
    oracle = CountingOracle(query, cache=cache, simulated_cost_ms=simulated_cost_ms)
    t0 = time.perf_counter()
    try:
        est = METHODS[method.name](oracle, ctx, n, method.params, seed)
    except (EstimatorError, ValueError) as err:
        wall = 1000.0 * (time.perf_counter() - t0)
        return TrialRecord(method.tag, n, trial, seed, "failed", None, None, None, None, None,
                           oracle.calls, truth, None, None, error=str(err), wall_ms=wall)
    wall = 1000.0 * (time.perf_counter() - t0)
    lo, hi = est.ci if est.ci is not None else (None, None)
    covered = None if est.ci is None else bool(lo <= truth <= hi)
    t = est.timings
    phases = [t.get(k) for k in ("learn_ms", "design_ms", "apply_ms")]
    overhead = sum(v for v in phases if v is not None) if any(v is not None for v in phases) \
        else None
    return TrialRecord(method.tag, n, trial, seed, "ok", float(est.count), float(est.proportion),
                       est.variance, lo, hi, est.oracle_calls, truth, abs(est.count - truth),
                       covered, warnings="; ".join(est.warnings), wall_ms=wall,
                       learn_ms=phases[0], design_ms=phases[1], apply_ms=phases[2],
                       overhead_ms=overhead)


def run_experiment(cfg: ExperimentConfig, progress: Optional[Callable[[str], None]] = None
                   ) -> list[TrialRecord]:
    """Run every (method, sample size, trial) combination in a fixed order."""
    dataset = load_dataset(cfg.dataset)
    query = build_query(dataset, cfg.predicate)
    truth = exact_count(CountingOracle(query), dataset)
    ctx = TrialContext(dataset, scorer_config(cfg.scorer, dataset), cfg.alpha)
    records = []
    for method in cfg.methods:
        for n in sample_sizes(cfg.sample_fractions, len(dataset)):
            for trial in range(cfg.trials):
                seed = trial_seed(cfg.master_seed, method.tag, n, trial)
                rec = run_trial(method, ctx, query, n, trial, seed, truth, cfg.cache,
                                cfg.simulated_cost_ms)
                if not cfg.timing:
                    # wall-clock fields are machine dependent; keep records reproducible
                    rec = replace(rec, **{f: None for f in TIMING_FIELDS})
                records.append(rec)
            if progress:
                progress(f"{method.tag} n={n}: {cfg.trials} trials")
    return records


# ---------------------------------------------------------------- output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records: Iterable[TrialRecord], timing: bool = False) -> str:
    fields = RECORD_FIELDS + (TIMING_FIELDS if timing else ())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in records:
        w.writerow([_fmt(getattr(r, f)) for f in fields])
    return buf.getvalue()


def _parse(field_name: str, text: str):
    if text == "":
        return None
    if field_name in ("sample_size", "trial", "seed", "oracle_calls", "truth"):
        return int(text)
    if field_name == "covered":
        return text == "true"
    if field_name in ("method", "status", "error", "warnings"):
        return text
    return float(text)


def read_records_csv(path) -> list[TrialRecord]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"{path}: {err.strerror or err}") from None
    rows = csv.DictReader(io.StringIO(text))
    missing = set(RECORD_FIELDS) - set(rows.fieldnames or ())
    if missing:
        raise ConfigError(f"{path}: line 1: missing columns {sorted(missing)}")
    out = []
    for line, row in enumerate(rows, start=2):
        try:
            out.append(TrialRecord(**{k: _parse(k, v) for k, v in row.items()
                                      if k in RECORD_FIELDS + TIMING_FIELDS}))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"{path}: line {line}: {err}") from None
    return out


def _quartiles(x: np.ndarray) -> tuple[float, float]:
    q1, q3 = np.percentile(x, [25, 75])  # linear interpolation between order statistics
    return float(q1), float(q3)


def summarize(records: Sequence[TrialRecord], group_by: Sequence[str] = ("method", "sample_size")
              ) -> list[dict]:
    """Per-group error, spread, coverage, cost and overhead statistics.

    ``variance`` is the sample variance (ddof 1) of the estimates. Coverage
    is None for methods that report no interval. Overhead fractions are
    present only when the records carry timings.
    """
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(tuple(getattr(r, g) for g in group_by), []).append(r)
    rows = []
    for key, rs in groups.items():
        ok = [r for r in rs if r.status == "ok"]
        row = dict(zip(group_by, key))
        row.update(trials=len(rs), failures=len(rs) - len(ok), truth=rs[0].truth)
        if ok:
            est = np.array([r.count for r in ok])
            q1, q3 = _quartiles(est)
            cov = [r.covered for r in ok if r.covered is not None]
            row.update(mae=float(np.mean([r.abs_error for r in ok])), mean=float(est.mean()),
                       variance=float(est.var(ddof=1)) if est.size > 1 else 0.0,
                       iqr=q3 - q1, q1=q1, q3=q3,
                       coverage=float(np.mean(cov)) if cov else None,
                       mean_calls=float(np.mean([r.oracle_calls for r in ok])))
            timed = [r for r in ok if r.wall_ms and r.overhead_ms is not None]
            if timed:
                row["overhead_fraction"] = float(np.mean([r.overhead_ms / r.wall_ms for r in timed]))
                for ph in ("learn_ms", "design_ms", "apply_ms"):
                    vals = [getattr(r, ph) / r.wall_ms for r in timed if getattr(r, ph) is not None]
                    if vals:
                        row[ph.replace("_ms", "_fraction")] = float(np.mean(vals))
        else:
            row.update(mae=None, mean=None, variance=None, iqr=None, q1=None, q3=None,
                       coverage=None, mean_calls=None)
        rows.append(row)
    return rows


def summary_to_json(rows: Sequence[dict]) -> str:
    return json.dumps(rows, indent=2, sort_keys=True) + "\n"


def summary_to_csv(rows: Sequence[dict]) -> str:
    fields: list[str] = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(f)) for f in fields])
    return buf.getvalue()


def estimate_to_dict(est: Estimate) -> dict:
    return {"method": est.method, "count": est.count, "proportion": est.proportion,
            "variance": est.variance, "ci": list(est.ci) if est.ci is not None else None,
            "oracle_calls": est.oracle_calls, "seed": est.seed, "warnings": list(est.warnings),
            "timings": dict(est.timings)}
