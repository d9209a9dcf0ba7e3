"""Learned weighted sampling with the ordered Des Raj estimator."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import Budget, Dataset, Estimate, z_value
from .learning import PhaseClock, complement, learn_sample
from .rng import Stream
from .scorers import ScorerConfig


@dataclass(frozen=True)
class DrawSequence:
    """Ordered draws with their initial probabilities and labels."""

    indices: np.ndarray
    pi: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        for name in ("indices", "pi", "labels"):
            object.__setattr__(self, name, np.asarray(getattr(self, name)))
        if not (self.indices.size == self.pi.size == self.labels.size):
            raise ValueError("indices, pi and labels must align")
        if np.unique(self.indices).size != self.indices.size:
            raise ValueError("draw indices must be distinct")


def lws_probabilities(scores, epsilon: float = 0.01) -> np.ndarray:
    """pi(o) = max(g(o), eps) / sum over o' of max(g(o'), eps)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    w = np.maximum(np.asarray(scores, dtype=np.float64), epsilon)
    return w / w.sum()


def des_raj_running(draws: DrawSequence, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Running Des Raj estimates of the proportion and their variance estimates.

    p_i = (1/N) [ sum_{j<i} q_j + (q_i / pi_i) (1 - sum_{j<i} pi_j) ]
    p_hat(n) = mean(p_1..p_n), var(n) = sum (p_i - p_hat)^2 / (n (n - 1)).
    The variance entry for n = 1 is nan.
    """
    p = des_raj_terms(draws, N)
    n = np.arange(1, p.size + 1)
    p_hat = np.cumsum(p) / n
    var = np.full(p.size, np.nan)
    for i in range(1, p.size):
        var[i] = float(np.sum((p[: i + 1] - p_hat[i]) ** 2)) / ((i + 1) * i)
    return p_hat, var


def des_raj_terms(draws: DrawSequence, N: int) -> np.ndarray:
    """The individual p_i terms of the running estimator."""
    pi = draws.pi.astype(np.float64)
    q = draws.labels.astype(np.float64)
    if pi.size < 1:
        raise ValueError("need at least one draw")
    if np.any(pi <= 0):
        raise ValueError("draw probabilities must be positive")
    q_before = np.concatenate([[0.0], np.cumsum(q)[:-1]])
    pi_before = np.concatenate([[0.0], np.cumsum(pi)[:-1]])
    return (q_before + q / pi * (1.0 - pi_before)) / N


def lws_estimate(oracle, dataset: Dataset, scorer: ScorerConfig, budget: Budget,
                 epsilon: float = 0.2, alpha: float = 0.05, seed: int = 0) -> Estimate:
    """Train on a uniform sample, then draw the rest with probability ∝ max(g, eps)."""
    t0 = time.perf_counter()
    N = len(dataset)
    stream = Stream(seed)
    clock = PhaseClock(oracle)
    start = oracle.calls
    n_learn = budget.split()[0]
    n_draw = budget.total_samples - n_learn
    if n_draw < 2:
        raise ValueError("need at least 2 draws for estimation")
    with clock.phase("learn"):
        idx, labels, model = learn_sample(oracle, dataset, n_learn, scorer, stream.child("learn"))
    with clock.phase("apply"):
        frame = complement(N, idx)
        M = frame.size
        n_draw = min(n_draw, M)
        pi = lws_probabilities(model.score_indices(dataset, frame), epsilon)
        order = stream.child("draws").weighted_order(pi, n_draw)
        draws = DrawSequence(frame[order], pi[order], oracle.evaluate(frame[order]))
        if n_draw == M:
            # every frame object is labelled; the mean of the p_i is not exact here
            p_hat, var_p = float(draws.labels.mean()), 0.0
        else:
            terms = des_raj_terms(draws, M)
            p_hat = float(terms.mean())
            var_p = float(np.sum((terms - p_hat) ** 2) / (terms.size * (terms.size - 1)))
    count = float(labels.sum()) + p_hat * M
    var = var_p * M * M
    half = z_value(alpha) * math.sqrt(var)
    timings = clock.report(1000.0 * (time.perf_counter() - t0))
    return Estimate(count, count / N, var, (count - half, count + half), oracle.calls - start,
                    "lws", seed, timings=timings)
