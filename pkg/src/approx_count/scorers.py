"""Cheap confidence scorers g: O -> [0, 1] that stand in for the predicate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .core import DataPoint, Dataset, EstimatorError
from .rng import Stream, derive_key, uniform_at

_CHUNK = 4096


class InsufficientTrainingData(EstimatorError):
    pass


class DegenerateClassBalance(EstimatorError):
    pass


@dataclass(frozen=True)
class LabeledSample:
    index: int
    label: bool


def _split_samples(train) -> tuple[np.ndarray, np.ndarray]:
    """Accept a list of LabeledSample or a pair (indices, labels)."""
    if isinstance(train, tuple) and len(train) == 2:
        idx, lab = train
        return np.asarray(idx, dtype=np.int64), np.asarray(lab, dtype=bool)
    items = list(train)
    idx = np.array([s.index for s in items], dtype=np.int64)
    lab = np.array([s.label for s in items], dtype=bool)
    return idx, lab


class Scorer:
    """Base class. Subclasses implement ``score_indices``."""

    def score_indices(self, dataset: Dataset, indices) -> np.ndarray:
        raise NotImplementedError

    def score(self, o: DataPoint) -> float:
        raise NotImplementedError

    def predict(self, o: DataPoint) -> bool:
        return self.score(o) >= 0.5

    def predict_indices(self, dataset: Dataset, indices) -> np.ndarray:
        return self.score_indices(dataset, indices) >= 0.5


class KNNScorer(Scorer):
    """Fraction of positives among the k nearest training points.

    Distances are Euclidean. When several training points tie at the k-th
    distance, the ones with the lower training position win.
    """

    def __init__(self, features: np.ndarray, labels: np.ndarray, k: int = 3):
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=bool)
        if k < 1:
            raise ValueError("k must be positive")
        if labels.size < k:
            raise InsufficientTrainingData(
                f"insufficient training data: {labels.size} samples for k={k}")
        self.features = features.reshape(labels.size, -1)
        self.labels = labels
        self.k = k
        self._kdtree = None

    def _sq_dist(self, X: np.ndarray) -> np.ndarray:
        d2 = np.zeros((X.shape[0], self.features.shape[0]))
        for j in range(X.shape[1]):
            diff = X[:, j, None] - self.features[None, :, j]
            d2 += diff * diff
        return d2

    def score_features(self, X: np.ndarray) -> np.ndarray:
        """Scores for rows of X.

        A k-d tree finds the k + 1 nearest training points; rows where the
        k-th and (k+1)-th distances are too close to call are rescored by the
        exact brute-force scan, so the tie rule holds everywhere.
        """
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.features.shape[1])
        k, T = self.k, self.labels.size
        if k == T:
            return np.full(X.shape[0], self.labels.mean())
        if X.shape[0] == 0:
            return np.zeros(0)
        dist, nn = self._tree.query(X, k=k + 1)
        out = self.labels[nn[:, :k]].sum(axis=1) / k
        near = dist[:, k] - dist[:, k - 1] <= 1e-9 * (1.0 + dist[:, k])
        if near.any():
            out[near] = self.brute_scores(X[near])
        return out

    @property
    def _tree(self) -> cKDTree:
        if self._kdtree is None:
            self._kdtree = cKDTree(self.features)
        return self._kdtree

    def brute_scores(self, X: np.ndarray) -> np.ndarray:
        """Exact scores by a full distance scan."""
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.features.shape[1])
        k = self.k
        lab = self.labels.astype(np.float64)
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], _CHUNK):
            d2 = self._sq_dist(X[start:start + _CHUNK])
            part = np.argpartition(d2, k - 1, axis=1)[:, :k]
            rows = np.arange(d2.shape[0])[:, None]
            kth = d2[rows, part].max(axis=1)
            score = lab[part].sum(axis=1)
            tied = np.flatnonzero(np.count_nonzero(d2 <= kth[:, None], axis=1) > k)
            for r in tied:
                closer = d2[r] < kth[r]
                at_kth = np.flatnonzero(d2[r] == kth[r])[: k - int(closer.sum())]
                score[r] = lab[closer].sum() + lab[at_kth].sum()
            out[start:start + _CHUNK] = score / k
        return out

    def score_indices(self, dataset: Dataset, indices) -> np.ndarray:
        return self.score_features(dataset.features[np.asarray(indices, dtype=np.int64)])

    def score(self, o: DataPoint) -> float:
        return float(self.score_features(np.asarray(o.features)[None, :])[0])


class RandomScorer(Scorer):
    """Score = hash of (seed, id) mapped to [0, 1); ignores the features."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._key = derive_key("random-scorer", self.seed)

    def _by_id(self, ids) -> np.ndarray:
        return uniform_at(self._key, np.asarray(ids, dtype=np.int64).astype(np.uint64))

    def score_indices(self, dataset: Dataset, indices) -> np.ndarray:
        return self._by_id(dataset.ids[np.asarray(indices, dtype=np.int64)])

    def score(self, o: DataPoint) -> float:
        return float(self._by_id([o.id])[0])


class ExternalScorer(Scorer):
    """Precomputed scores keyed by object id."""

    def __init__(self, ids, scores):
        ids = np.asarray(ids, dtype=np.int64)
        scores = np.asarray(scores, dtype=np.float64)
        if np.any((scores < 0) | (scores > 1)):
            raise ValueError("scores must lie in [0, 1]")
        order = np.argsort(ids, kind="stable")
        self.ids = ids[order]
        self.scores = scores[order]

    def _by_id(self, ids) -> np.ndarray:
        q = np.asarray(ids, dtype=np.int64)
        pos = np.minimum(np.searchsorted(self.ids, q), self.ids.size - 1)
        if np.any(self.ids[pos] != q):
            raise KeyError(f"no score for id {int(q[self.ids[pos] != q][0])}")
        return self.scores[pos]

    def score_indices(self, dataset: Dataset, indices) -> np.ndarray:
        return self._by_id(dataset.ids[np.asarray(indices, dtype=np.int64)])

    def score(self, o: DataPoint) -> float:
        return float(self._by_id([o.id])[0])


def train_knn(train, dataset: Dataset, k: int = 3) -> KNNScorer:
    """k-NN scorer over the training objects' feature vectors."""
    idx, lab = _split_samples(train)
    if idx.size == 0:
        raise InsufficientTrainingData("insufficient training data: no samples")
    return KNNScorer(dataset.features[idx], lab, k)


def random_scorer(seed: int) -> RandomScorer:
    return RandomScorer(seed)


@dataclass(frozen=True)
class ScorerConfig:
    """How estimators obtain a scorer from their learning sample.

    kind: "knn", "random" or "external". ``external`` needs ``ids`` and
    ``scores``; the learning sample is then ignored.
    """

    kind: str = "knn"
    k: int = 3
    ids: Optional[tuple] = None
    scores: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in ("knn", "random", "external"):
            raise ValueError(f"unknown scorer kind {self.kind!r}")
        if self.kind == "external" and (self.ids is None or self.scores is None):
            raise ValueError("external scorer needs ids and scores")


def fit_scorer(cfg: ScorerConfig, dataset: Dataset, train_idx, train_labels, seed: int) -> Scorer:
    if cfg.kind == "knn":
        return train_knn((train_idx, train_labels), dataset, cfg.k)
    if cfg.kind == "random":
        return RandomScorer(seed)
    return ExternalScorer(cfg.ids, cfg.scores)


def augment_uncertain(scorer: Scorer, dataset: Dataset, pool: Sequence[int], b: int) -> list[int]:
    """The b pool objects whose scores are closest to 0.5.

    Ties go to the lower object index.
    """
    pool_arr = np.asarray(pool, dtype=np.int64)
    b = min(int(b), pool_arr.size)
    if b <= 0:
        return []
    margin = np.abs(scorer.score_indices(dataset, pool_arr) - 0.5)
    order = np.lexsort((pool_arr, margin))
    return [int(i) for i in pool_arr[order[:b]]]


ScorerFactory = Callable[[Dataset, np.ndarray, np.ndarray], Scorer]


def kfold_error_rates(train, dataset: Dataset, folds: int = 5,
                      scorer_factory: Optional[ScorerFactory] = None,
                      seed: int = 0) -> tuple[float, float]:
    """Pooled cross-validated (tpr, fpr) of the scorer family.

    Samples are shuffled with the seed and dealt round-robin into folds.
    """
    idx, lab = _split_samples(train)
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if idx.size < folds:
        raise InsufficientTrainingData(f"insufficient training data: {idx.size} samples for {folds} folds")
    if not lab.any() or lab.all():
        raise DegenerateClassBalance("degenerate class balance")
    if scorer_factory is None:
        scorer_factory = lambda ds, i, y: train_knn((i, y), ds, 3)  # noqa: E731
    order = Stream.from_labels("kfold", seed).permutation(idx.size)
    fold_of = np.empty(idx.size, dtype=np.int64)
    fold_of[order] = np.arange(idx.size) % folds
    tp = fn = fp = tn = 0
    for f in range(folds):
        test = fold_of == f
        scorer = scorer_factory(dataset, idx[~test], lab[~test])
        pred = scorer.predict_indices(dataset, idx[test])
        truth = lab[test]
        tp += int(np.sum(pred & truth))
        fn += int(np.sum(~pred & truth))
        fp += int(np.sum(pred & ~truth))
        tn += int(np.sum(~pred & ~truth))
    return tp / (tp + fn), fp / (fp + tn)


def f1_score(predicted, truth) -> float:
    pred = np.asarray(predicted, dtype=bool)
    true = np.asarray(truth, dtype=bool)
    tp = int(np.sum(pred & true))
    denom = int(pred.sum() + true.sum())
    return 1.0 if denom == 0 else 2.0 * tp / denom
