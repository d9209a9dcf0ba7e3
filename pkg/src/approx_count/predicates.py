"""Expensive predicate oracles with call accounting.

Each query type offers two evaluation paths. ``evaluate`` scans the whole
dataset for one object, the way a real expensive predicate would. ``labels``
computes every answer at once with a faster algorithm and caches it, which
lets Monte Carlo experiments run thousands of trials. Both paths must agree;
the test-suite checks that exhaustively on small inputs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import DataPoint, Dataset

_CHUNK = 1024


def _compare(value, bound, comparator: str):
    if comparator == "<":
        return value < bound
    if comparator == "<=":
        return value <= bound
    raise ValueError(f"unknown comparator {comparator!r}")


def _require_2d(dataset: Dataset) -> None:
    if dataset.dimension != 2:
        raise ValueError(f"predicate needs 2-D data, got dimension {dataset.dimension}")


def _as_xy(o, dataset: Dataset) -> tuple[float, float]:
    if isinstance(o, DataPoint):
        return o.features[0], o.features[1]
    row = dataset.features[int(o)]
    return float(row[0]), float(row[1])


def dominance_count(o, dataset: Dataset) -> int:
    """Number of points p with p >= o in both coordinates and p != o in one."""
    _require_2d(dataset)
    ox, oy = _as_xy(o, dataset)
    xs = dataset.features[:, 0]
    ys = dataset.features[:, 1]
    dom = (xs >= ox) & (ys >= oy) & ((xs > ox) | (ys > oy))
    return int(np.count_nonzero(dom))


def dominance_counts(dataset: Dataset) -> np.ndarray:
    """Dominance count of every point in O(N log N) with a Fenwick tree."""
    _require_2d(dataset)
    xs = dataset.features[:, 0]
    ys = dataset.features[:, 1]
    n = len(dataset)
    y_vals, y_rank = np.unique(ys, return_inverse=True)
    size = y_vals.size
    tree = [0] * (size + 1)
    order = np.lexsort((ys, -xs))  # x descending
    weakly = np.zeros(n, dtype=np.int64)
    inserted = 0
    i = 0
    order_l = order.tolist()
    xs_l = xs.tolist()
    rank_l = (y_rank + 1).tolist()
    while i < n:
        j = i
        x0 = xs_l[order_l[i]]
        while j < n and xs_l[order_l[j]] == x0:
            r = rank_l[order_l[j]]
            while r <= size:
                tree[r] += 1
                r += r & -r
            inserted += 1
            j += 1
        for t in range(i, j):
            idx = order_l[t]
            r = rank_l[idx] - 1
            below = 0
            while r > 0:
                below += tree[r]
                r -= r & -r
            weakly[idx] = inserted - below
        i = j
    _, inverse, dup = np.unique(dataset.features, axis=0, return_inverse=True, return_counts=True)
    return weakly - dup[inverse.reshape(-1)]


def skyband_predicate(o, dataset: Dataset, k: int, comparator: str = "<") -> bool:
    """True iff o is dominated by fewer than k points (comparator ``<``)."""
    return bool(_compare(dominance_count(o, dataset), k, comparator))


def neighbor_count(o, dataset: Dataset, d: float, include_self: bool = False) -> int:
    """Points within Euclidean distance d of o, o itself excluded by default."""
    _require_2d(dataset)
    if isinstance(o, DataPoint):
        center = np.asarray(o.features, dtype=np.float64)
        in_dataset = bool(np.any(dataset.ids == o.id))
    else:
        center = dataset.features[int(o)]
        in_dataset = True
    diff = dataset.features - center
    within = np.count_nonzero(np.einsum("ij,ij->i", diff, diff) <= d * d)
    # o lies at distance 0 from itself, so the scan always saw it
    return int(within - 1 if in_dataset and not include_self else within)


def neighbor_counts(dataset: Dataset, d: float, include_self: bool = False) -> np.ndarray:
    _require_2d(dataset)
    feats = dataset.features
    out = np.empty(len(dataset), dtype=np.int64)
    for start in range(0, len(dataset), _CHUNK):
        block = feats[start:start + _CHUNK]
        d2 = (block[:, None, 0] - feats[None, :, 0]) ** 2 + (block[:, None, 1] - feats[None, :, 1]) ** 2
        out[start:start + _CHUNK] = np.count_nonzero(d2 <= d * d, axis=1)
    return out if include_self else out - 1


def neighbors_predicate(o, dataset: Dataset, k: int, d: float,
                        include_self: bool = False, comparator: str = "<=") -> bool:
    """True iff at most k other points lie within distance d of o."""
    return bool(_compare(neighbor_count(o, dataset, d, include_self), k, comparator))


@dataclass(frozen=True)
class NoiseTable:
    """Per-id noise counts, stored as parallel arrays sorted by id."""

    ids: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        order = np.argsort(self.ids, kind="stable")
        ids = np.asarray(self.ids, dtype=np.int64)[order]
        vals = np.asarray(self.values, dtype=np.int64)[order]
        if np.any(vals < 0):
            raise ValueError("noise counts must be non-negative")
        if ids.size > 1 and np.any(ids[1:] == ids[:-1]):
            raise ValueError("duplicate id in noise table")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "values", vals)

    def lookup(self, ids) -> np.ndarray:
        q = np.asarray(ids, dtype=np.int64).reshape(-1)
        pos = np.searchsorted(self.ids, q)
        pos_c = np.minimum(pos, self.ids.size - 1)
        missing = (pos >= self.ids.size) | (self.ids[pos_c] != q)
        if np.any(missing):
            raise KeyError(f"id {int(q[missing][0])} missing from noise table")
        return self.values[pos_c]

    def __getitem__(self, point_id: int) -> int:
        return int(self.lookup([point_id])[0])

    def __len__(self) -> int:
        return int(self.ids.size)


def noisy_skyband_predicate(o, dataset: Dataset, k: int, alpha: float,
                            noise: NoiseTable, comparator: str = "<") -> bool:
    """Skyband test on the mixed count (1 - alpha) c + alpha c'."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    c = dominance_count(o, dataset)
    pid = o.id if isinstance(o, DataPoint) else int(dataset.ids[int(o)])
    mixed = (1.0 - alpha) * c + alpha * noise[pid]
    return bool(_compare(mixed, k, comparator))


class Query:
    """A predicate bound to a dataset.

    Subclasses implement ``evaluate`` (one object, full scan) and
    ``_all_labels`` (every object at once).
    """

    name = "query"

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        self._labels: Optional[np.ndarray] = None

    def evaluate(self, index: int) -> bool:
        raise NotImplementedError

    def _all_labels(self) -> np.ndarray:
        return np.array([self.evaluate(i) for i in range(len(self.dataset))], dtype=bool)

    def labels(self) -> np.ndarray:
        if self._labels is None:
            lab = np.asarray(self._all_labels(), dtype=bool)
            lab.setflags(write=False)
            self._labels = lab
        return self._labels


class SkybandQuery(Query):
    name = "skyband"

    def __init__(self, dataset: Dataset, k: int, comparator: str = "<"):
        _require_2d(dataset)
        if k < 1:
            raise ValueError("k must be positive")
        super().__init__(dataset)
        self.k = k
        self.comparator = comparator

    def evaluate(self, index: int) -> bool:
        return skyband_predicate(index, self.dataset, self.k, self.comparator)

    def _all_labels(self) -> np.ndarray:
        return _compare(dominance_counts(self.dataset), self.k, self.comparator)


class NeighborsQuery(Query):
    name = "neighbors"

    def __init__(self, dataset: Dataset, k: int, d: float,
                 include_self: bool = False, comparator: str = "<="):
        _require_2d(dataset)
        if k < 0 or d <= 0:
            raise ValueError("need k >= 0 and d > 0")
        super().__init__(dataset)
        self.k = k
        self.d = d
        self.include_self = include_self
        self.comparator = comparator

    def evaluate(self, index: int) -> bool:
        return neighbors_predicate(index, self.dataset, self.k, self.d,
                                   self.include_self, self.comparator)

    def _all_labels(self) -> np.ndarray:
        counts = neighbor_counts(self.dataset, self.d, self.include_self)
        return _compare(counts, self.k, self.comparator)


class NoisySkybandQuery(Query):
    name = "noisy_skyband"

    def __init__(self, dataset: Dataset, k: int, alpha: float, noise: NoiseTable,
                 comparator: str = "<"):
        _require_2d(dataset)
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        noise.lookup(dataset.ids)  # fail early on missing ids
        super().__init__(dataset)
        self.k = k
        self.alpha = alpha
        self.noise = noise
        self.comparator = comparator

    def evaluate(self, index: int) -> bool:
        return noisy_skyband_predicate(index, self.dataset, self.k, self.alpha,
                                       self.noise, self.comparator)

    def _all_labels(self) -> np.ndarray:
        c = dominance_counts(self.dataset)
        mixed = (1.0 - self.alpha) * c + self.alpha * self.noise.lookup(self.dataset.ids)
        return _compare(mixed, self.k, self.comparator)


class HalfPlaneQuery(Query):
    """Positive iff w . x > b. Used for separable test instances."""

    name = "halfplane"

    def __init__(self, dataset: Dataset, normal, offset: float):
        super().__init__(dataset)
        self.normal = np.asarray(normal, dtype=np.float64)
        self.offset = float(offset)

    def evaluate(self, index: int) -> bool:
        return bool(self.dataset.features[int(index)] @ self.normal > self.offset)

    def _all_labels(self) -> np.ndarray:
        return self.dataset.features @ self.normal > self.offset


class FunctionQuery(Query):
    """Wrap any ``fn(point, dataset) -> bool``."""

    name = "function"

    def __init__(self, dataset: Dataset, fn: Callable[[DataPoint, Dataset], bool]):
        super().__init__(dataset)
        self.fn = fn

    def evaluate(self, index: int) -> bool:
        return bool(self.fn(self.dataset.point(int(index)), self.dataset))


class LabelQuery(Query):
    """Predicate given by a fixed label vector (positional)."""

    name = "labels"

    def __init__(self, dataset: Dataset, labels):
        super().__init__(dataset)
        lab = np.asarray(labels, dtype=bool).reshape(-1)
        if lab.size != len(dataset):
            raise ValueError("one label per object required")
        lab.setflags(write=False)
        self._labels = lab

    def evaluate(self, index: int) -> bool:
        return bool(self._labels[int(index)])


class CountingOracle:
    """Counts predicate evaluations, the unit of cost.

    With ``cache=True`` answers come from the query's precomputed label
    vector; otherwise every call runs the full per-object scan. Either way
    each evaluated object costs one call. ``simulated_cost_ms`` adds a sleep
    per call. ``elapsed`` accumulates seconds spent inside the oracle.
    """

    def __init__(self, query: Query, cache: bool = True, simulated_cost_ms: float = 0.0):
        self.query = query
        self.cache = cache
        self.simulated_cost_ms = float(simulated_cost_ms)
        self.calls = 0
        self.elapsed = 0.0

    def evaluate(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        t0 = time.perf_counter()
        if self.cache:
            out = self.query.labels()[idx].copy()
        else:
            out = np.fromiter((self.query.evaluate(int(i)) for i in idx), dtype=bool, count=idx.size)
        if self.simulated_cost_ms > 0 and idx.size:
            time.sleep(self.simulated_cost_ms * idx.size / 1000.0)
        self.calls += int(idx.size)
        self.elapsed += time.perf_counter() - t0
        return out

    def __call__(self, index: int) -> bool:
        return bool(self.evaluate([index])[0])
