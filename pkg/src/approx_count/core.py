"""Shared domain types, ground-truth counting and interval arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np


class EstimatorError(RuntimeError):
    """An estimator could not produce a meaningful answer for its inputs."""


class DegenerateAdjustment(EstimatorError):
    """Adjusted count requested from a classifier no better than chance."""


@dataclass(frozen=True)
class DataPoint:
    id: int
    features: tuple[float, ...]

    @property
    def x(self) -> float:
        return self.features[0]

    @property
    def y(self) -> float:
        return self.features[1]


class Dataset:
    """Immutable ordered collection of feature vectors with unique ids.

    Stored column-wise: ``ids`` is an int64 array of length N and
    ``features`` an (N, d) float array. Both are read-only.
    """

    def __init__(self, ids: Sequence[int], features: np.ndarray):
        ids_arr = np.array(ids, dtype=np.int64).reshape(-1)
        feats = np.array(features, dtype=np.float64)
        if feats.ndim == 1:
            feats = feats.reshape(-1, 1)
        if ids_arr.size < 1:
            raise ValueError("a dataset needs at least one point")
        if feats.shape[0] != ids_arr.size:
            raise ValueError(f"{ids_arr.size} ids but {feats.shape[0]} feature rows")
        if feats.shape[1] < 1:
            raise ValueError("dimension must be at least 1")
        if np.any(ids_arr < 0):
            raise ValueError("ids must be non-negative")
        uniq, counts = np.unique(ids_arr, return_counts=True)
        if uniq.size != ids_arr.size:
            raise ValueError(f"duplicate id {int(uniq[counts > 1][0])}")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        ids_arr.setflags(write=False)
        feats.setflags(write=False)
        self._ids = ids_arr
        self._features = feats

    @classmethod
    def from_points(cls, points: Sequence[DataPoint]) -> "Dataset":
        dims = {len(p.features) for p in points}
        if len(dims) > 1:
            raise ValueError("points have mixed dimensions")
        return cls([p.id for p in points], np.array([p.features for p in points]))

    @classmethod
    def from_coords(cls, coords: Sequence[Sequence[float]]) -> "Dataset":
        """Dataset with ids 0..N-1 in the given order."""
        arr = np.asarray(coords, dtype=np.float64)
        return cls(np.arange(arr.shape[0]), arr)

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def features(self) -> np.ndarray:
        return self._features

    @property
    def dimension(self) -> int:
        return int(self._features.shape[1])

    def __len__(self) -> int:
        return int(self._ids.size)

    def point(self, index: int) -> DataPoint:
        return DataPoint(int(self._ids[index]), tuple(float(v) for v in self._features[index]))

    def __iter__(self) -> Iterator[DataPoint]:
        for i in range(len(self)):
            yield self.point(i)

    @property
    def points(self) -> list[DataPoint]:
        return list(self)

    def index_of(self, point_id: int) -> int:
        hits = np.flatnonzero(self._ids == point_id)
        if hits.size == 0:
            raise KeyError(point_id)
        return int(hits[0])


@dataclass(frozen=True)
class Estimate:
    """Point estimate of a count with optional uncertainty.

    ``variance`` and ``ci`` are on the count scale. ``timings`` holds
    per-phase wall-clock milliseconds excluding time spent inside the oracle.
    """

    count: float
    proportion: float
    variance: Optional[float]
    ci: Optional[tuple[float, float]]
    oracle_calls: int
    method: str
    seed: int
    warnings: tuple[str, ...] = ()
    timings: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Budget:
    """Total oracle calls and how they are split across phases."""

    total_samples: int
    learn_fraction: float = 0.25
    design_fraction: float = 0.0

    def __post_init__(self):
        if self.total_samples < 1:
            raise ValueError("total_samples must be positive")
        if not (0 <= self.learn_fraction < 1 and 0 <= self.design_fraction < 1):
            raise ValueError("fractions must lie in [0, 1)")
        if self.learn_fraction + self.design_fraction >= 1:
            raise ValueError("learn_fraction + design_fraction must be below 1")

    def split(self) -> tuple[int, int, int]:
        """(learn, design, estimate) sample counts summing to total_samples."""
        n_learn = int(round(self.total_samples * self.learn_fraction))
        n_design = int(round(self.total_samples * self.design_fraction))
        return n_learn, n_design, self.total_samples - n_learn - n_design


def exact_count(oracle, dataset: Dataset) -> int:
    """Evaluate the oracle on every object; costs exactly N calls."""
    labels = oracle.evaluate(np.arange(len(dataset)))
    return int(np.count_nonzero(labels))


# Acklam's rational approximation to the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF.

    Acklam's approximation (relative error ~1e-9) followed by one Halley
    step against ``math.erfc``, which brings it to double precision.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    x = _acklam(p)
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def z_value(alpha: float) -> float:
    """Two-sided critical value z_{alpha/2}."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return normal_quantile(1.0 - alpha / 2.0)


def _fpc(n: int, N: int) -> float:
    if n > N:
        raise ValueError(f"sample size {n} exceeds population {N}")
    if N <= 1:
        return 0.0
    return (N - n) / (N - 1)


def wald_interval(p_hat: float, n: int, N: int, alpha: float = 0.05) -> tuple[float, float]:
    """Normal-approximation interval with finite-population correction."""
    if n < 1:
        raise ValueError("n must be positive")
    z = z_value(alpha)
    half = z * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n * _fpc(n, N))
    return max(0.0, p_hat - half), min(1.0, p_hat + half)


def wilson_interval(p_hat: float, n: int, N: int, alpha: float = 0.05) -> tuple[float, float]:
    """Wilson score interval with the finite-population correction.

    The correction enters as an effective sample size n / fpc, so a census
    collapses to (p_hat, p_hat).
    """
    if n < 1:
        raise ValueError("n must be positive")
    f = _fpc(n, N)
    if f == 0.0:
        return p_hat, p_hat
    z2 = z_value(alpha) ** 2
    n_eff = n / f
    denom = 1.0 + z2 / n_eff
    center = (p_hat + z2 / (2.0 * n_eff)) / denom
    half = math.sqrt(z2) / denom * math.sqrt(
        max(p_hat * (1.0 - p_hat), 0.0) / n_eff + z2 / (4.0 * n_eff * n_eff))
    return max(0.0, center - half), min(1.0, center + half)


def stratified_variance(weights: Sequence[float], stddevs: Sequence[float],
                        alloc: Sequence[int], N: int) -> float:
    """Variance of the stratified proportion estimate.

    Sum_h W_h^2 S_h^2 / n_h  -  (1/N) Sum_h W_h S_h^2
    """
    w = np.asarray(weights, dtype=np.float64)
    s = np.asarray(stddevs, dtype=np.float64)
    n = np.asarray(alloc, dtype=np.float64)
    if not (w.shape == s.shape == n.shape):
        raise ValueError("weights, stddevs and alloc must have equal length")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    if np.any(n <= 0):
        raise ValueError("empty allocation")
    s2 = s * s
    return float(np.sum(w * w * s2 / n) - np.sum(w * s2) / N)


def interval_from_variance(center: float, variance: float, alpha: float) -> tuple[float, float]:
    half = z_value(alpha) * math.sqrt(max(variance, 0.0))
    return center - half, center + half
