"""Learning-phase plumbing shared by the learned estimators."""

from __future__ import annotations

import time
from contextlib import contextmanager

import numpy as np

from .core import Dataset
from .rng import Stream
from .scorers import Scorer, ScorerConfig, augment_uncertain, fit_scorer


class PhaseClock:
    """Wall-clock per phase, net of time spent inside the oracle."""

    def __init__(self, oracle):
        self.oracle = oracle
        self.ms: dict[str, float] = {}

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        o0 = self.oracle.elapsed
        try:
            yield
        finally:
            wall = time.perf_counter() - t0
            inside = self.oracle.elapsed - o0
            self.ms[name] = self.ms.get(name, 0.0) + 1000.0 * max(wall - inside, 0.0)

    def report(self, total_ms: float) -> dict:
        out = {f"{k}_ms": v for k, v in self.ms.items()}
        out["total_ms"] = total_ms
        return out


def learn_sample(oracle, dataset: Dataset, n_learn: int, cfg: ScorerConfig, stream: Stream,
                 augment: int = 0, pool_factor: int = 20) -> tuple[np.ndarray, np.ndarray, Scorer]:
    """Label a uniform sample, train a scorer, optionally add one uncertainty round.

    With ``augment = b > 0`` the uniform part has n_learn - b objects; the
    remaining b come from the objects nearest a 0.5 score within a random
    candidate pool of min(N, pool_factor * b) unlabeled objects.
    """
    N = len(dataset)
    n_uniform = n_learn - augment
    if n_uniform < 0:
        raise ValueError("augmentation exceeds the learning budget")
    idx = stream.child("uniform").sample(N, n_uniform)
    labels = oracle.evaluate(idx)
    scorer = fit_scorer(cfg, dataset, idx, labels, stream.child("scorer").key)
    if augment > 0:
        rest = np.setdiff1d(np.arange(N), idx)
        pool_size = min(rest.size, pool_factor * augment)
        pool = rest[stream.child("pool").sample(rest.size, pool_size)]
        extra = np.asarray(augment_uncertain(scorer, dataset, pool, augment), dtype=np.int64)
        idx = np.concatenate([idx, extra])
        labels = np.concatenate([labels, oracle.evaluate(extra)])
        scorer = fit_scorer(cfg, dataset, idx, labels, stream.child("scorer").key)
    return idx, labels, scorer


def complement(N: int, idx: np.ndarray) -> np.ndarray:
    mask = np.ones(N, dtype=bool)
    mask[np.asarray(idx, dtype=np.int64)] = False
    return np.flatnonzero(mask)
