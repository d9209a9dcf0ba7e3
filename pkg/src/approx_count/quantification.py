"""Quantification estimators: classify-and-count, adjusted count, sample correction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Budget, Dataset, DegenerateAdjustment, Estimate, z_value
from .learning import complement, learn_sample
from .rng import Stream
from .scorers import ScorerConfig, fit_scorer, kfold_error_rates


@dataclass(frozen=True)
class QuantifyConfig:
    budget: Budget
    scorer: ScorerConfig = field(default_factory=ScorerConfig)
    folds: int = 5
    correction_fraction: float = 0.75
    delta: float = 0.05
    augment_fraction: float = 0.0
    pool_factor: int = 20

    def __post_init__(self):
        if not 0 <= self.correction_fraction < 1:
            raise ValueError("correction_fraction must lie in [0, 1)")
        if not 0 <= self.augment_fraction < 1:
            raise ValueError("augment_fraction must lie in [0, 1)")


def adjusted_count(c_obs: float, frame_size: int, tpr: float, fpr: float,
                   delta: float = 0.05) -> float:
    """Invert the expected observed count (C_obs - fpr M) / (tpr - fpr), clamped to [0, M]."""
    if tpr - fpr <= delta:
        raise DegenerateAdjustment(
            f"degenerate adjustment; classifier no better than chance (tpr={tpr:.3f}, fpr={fpr:.3f})")
    c_adj = (c_obs - fpr * frame_size) / (tpr - fpr)
    return min(max(c_adj, 0.0), float(frame_size))


def _classify(oracle, dataset: Dataset, n_learn: int, cfg: QuantifyConfig, stream: Stream):
    b = int(round(cfg.augment_fraction * n_learn))
    idx, labels, scorer = learn_sample(oracle, dataset, n_learn, cfg.scorer, stream.child("learn"),
                                       augment=b, pool_factor=cfg.pool_factor)
    frame = complement(len(dataset), idx)
    c_obs = int(scorer.predict_indices(dataset, frame).sum()) if frame.size else 0
    return idx, labels, scorer, frame, c_obs


def qlcc_estimate(oracle, dataset: Dataset, cfg: QuantifyConfig, seed: int = 0) -> Estimate:
    """Predicted positives outside the training set plus the known training positives."""
    start = oracle.calls
    idx, labels, _, _, c_obs = _classify(oracle, dataset, cfg.budget.total_samples, cfg, Stream(seed))
    count = float(c_obs + labels.sum())
    return Estimate(count, count / len(dataset), None, None, oracle.calls - start, "qlcc", seed)


def qlac_estimate(oracle, dataset: Dataset, cfg: QuantifyConfig, seed: int = 0,
                  rates: Optional[tuple[float, float]] = None) -> Estimate:
    """Adjusted count using cross-validated (tpr, fpr); ``rates`` overrides them."""
    start = oracle.calls
    stream = Stream(seed)
    idx, labels, _, frame, c_obs = _classify(oracle, dataset, cfg.budget.total_samples, cfg, stream)
    if rates is None:
        sc = cfg.scorer
        rates = kfold_error_rates((idx, labels), dataset, cfg.folds,
                                  lambda ds, i, y: fit_scorer(sc, ds, i, y, stream.child("cv").key),
                                  seed=stream.child("folds").key)
    tpr, fpr = rates
    count = adjusted_count(c_obs, frame.size, tpr, fpr, cfg.delta) + float(labels.sum())
    return Estimate(count, count / len(dataset), None, None, oracle.calls - start, "qlac", seed)


def qlsc_estimate(oracle, dataset: Dataset, cfg: QuantifyConfig, seed: int = 0,
                  alpha: float = 0.05) -> Estimate:
    """Classify-and-count corrected by the mean error on a fresh uniform sample."""
    n_total = cfg.budget.total_samples
    n_corr = int(round(cfg.correction_fraction * n_total))
    if n_corr < 2:
        raise ValueError("correction sample needs at least 2 objects")
    start = oracle.calls
    stream = Stream(seed)
    idx, labels, scorer, frame, c_obs = _classify(oracle, dataset, n_total - n_corr, cfg, stream)
    M = frame.size
    n_corr = min(n_corr, M)
    pick = frame[stream.child("correct").sample(M, n_corr)]
    err = scorer.predict_indices(dataset, pick).astype(np.float64) - oracle.evaluate(pick)
    eps = float(err.mean())
    count = c_obs - eps * M + float(labels.sum())
    s2 = float(err.var(ddof=1)) if n_corr > 1 else 0.0
    var = M * M * s2 * (1.0 / n_corr - 1.0 / M)
    half = z_value(alpha) * math.sqrt(max(var, 0.0))
    return Estimate(count, count / len(dataset), max(var, 0.0), (count - half, count + half),
                    oracle.calls - start, "qlsc", seed)
