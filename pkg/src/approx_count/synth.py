"""Synthetic point clouds and noise tables for controlled-difficulty runs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .core import Dataset
from .predicates import NoiseTable
from .rng import Stream, derive_key, uniform_at

BLOB_SEPARATION = 5.0
SPARSE_BLOB_WEIGHT = 0.3
DENSE_BLOB_SCALE = 0.25
POINT_KINDS = ("uniform2d", "clustered2d", "separable2d")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise-count distribution for the mixing protocol.

    Gaussian noise has standard deviation ``scale``, or ``scale`` times the
    standard deviation of the base counts when ``relative`` is set.
    """

    kind: str  # "gaussian" or "zipf"
    s: float = 1.0
    seed: int = 0
    scale: float = 1.0
    relative: bool = False

    def __post_init__(self):
        if self.kind not in ("gaussian", "zipf"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.kind == "zipf" and self.s <= 0:
            raise ValueError("zipf parameter s must be positive")
        if self.scale < 0:
            raise ValueError("noise scale must be non-negative")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "NoiseSpec":
        """Parse ``gaussian``, ``gaussian:SD``, ``gaussian:rel:F`` or ``zipf:S``."""
        try:
            if text == "gaussian":
                return cls("gaussian", seed=seed)
            if text.startswith("gaussian:rel:"):
                return cls("gaussian", seed=seed, scale=float(text[13:]), relative=True)
            if text.startswith("gaussian:"):
                return cls("gaussian", seed=seed, scale=float(text[9:]))
            if text.startswith("zipf:"):
                return cls("zipf", s=float(text[5:]), seed=seed)
        except ValueError as err:
            raise ValueError(f"cannot parse noise spec {text!r}: {err}") from None
        raise ValueError(f"cannot parse noise spec {text!r}")

    def text(self) -> str:
        if self.kind == "zipf":
            return f"zipf:{self.s:g}"
        if self.relative:
            return f"gaussian:rel:{self.scale:g}"
        return "gaussian" if self.scale == 1.0 else f"gaussian:{self.scale:g}"


def separable_threshold(positive_fraction: float) -> float:
    """Offset t such that {x + y > t} covers the given share of the unit square."""
    f = float(positive_fraction)
    if not 0.0 < f < 1.0:
        raise ValueError("positive_fraction must lie in (0, 1)")
    if f <= 0.5:
        return 2.0 - math.sqrt(2.0 * f)
    return math.sqrt(2.0 * (1.0 - f))


def generate_points(kind: str, N: int, seed: int, *, positive_fraction: float = 0.1,
                    margin: float = 0.01) -> Dataset:
    """Seeded 2-D point cloud with ids 0..N-1.

    uniform2d:   uniform on the unit square.
    clustered2d: mixture of a sparse unit-variance Gaussian blob (weight
                 ``SPARSE_BLOB_WEIGHT``) and a dense blob with standard
                 deviation ``DENSE_BLOB_SCALE``, centres ``BLOB_SEPARATION``
                 apart along the diagonal. Density predicates then mostly
                 separate the blobs, which k-NN learns from few labels.
    separable2d: uniform on the unit square with no point closer than
                 ``margin`` to the line x + y = t, where t is chosen so that
                 ``positive_fraction`` of the area lies above the line.
    """
    if N < 1:
        raise ValueError("N must be positive")
    stream = Stream.from_labels("points", kind, N, seed)
    if kind == "uniform2d":
        xy = stream.uniform(2 * N).reshape(N, 2)
    elif kind == "clustered2d":
        offset = BLOB_SEPARATION / math.sqrt(2.0)
        z = stream.normal(2 * N).reshape(N, 2)
        sparse = stream.uniform(N) < SPARSE_BLOB_WEIGHT
        xy = np.where(sparse[:, None], z, DENSE_BLOB_SCALE * z + offset)
    elif kind == "separable2d":
        t = separable_threshold(positive_fraction)
        band = margin * math.sqrt(2.0)
        kept: list[np.ndarray] = []
        have = 0
        while have < N:
            cand = stream.uniform(2 * N).reshape(N, 2)
            cand = cand[np.abs(cand.sum(axis=1) - t) >= band]
            kept.append(cand)
            have += cand.shape[0]
        xy = np.concatenate(kept)[:N]
    else:
        raise ValueError(f"unknown point kind {kind!r}; expected one of {POINT_KINDS}")
    return Dataset(np.arange(N), xy)


def _as_pairs(base_counts: Union[Mapping[int, int], tuple]) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(base_counts, Mapping):
        ids = np.fromiter(base_counts.keys(), dtype=np.int64, count=len(base_counts))
        counts = np.fromiter(base_counts.values(), dtype=np.int64, count=len(base_counts))
    else:
        ids, counts = base_counts
        ids = np.asarray(ids, dtype=np.int64)
        counts = np.asarray(counts, dtype=np.int64)
    if ids.shape != counts.shape:
        raise ValueError("ids and counts must align")
    return ids, counts


def gaussian_noise_table(base_counts, seed: int, scale: float = 1.0) -> NoiseTable:
    """c'(id) = max(0, round(c(id) + scale * z(id))) with z ~ N(0, 1).

    ``base_counts`` is a mapping id -> count or a pair (ids, counts). The
    deviate for each id depends only on (seed, id), so the table does not
    change with the order in which ids are listed. Rounding is half-up.
    """
    ids, counts = _as_pairs(base_counts)
    key = derive_key("gaussian-noise", seed)
    u1 = 1.0 - uniform_at(key, 2 * ids.astype(np.uint64))
    u2 = uniform_at(key, 2 * ids.astype(np.uint64) + np.uint64(1))
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    noisy = np.floor(counts + scale * z + 0.5).astype(np.int64)
    return NoiseTable(ids, np.maximum(noisy, 0))


def zipf_pmf(length: int, s: float) -> np.ndarray:
    r = np.arange(1, length + 1, dtype=np.float64)
    w = r ** (-s)
    return w / w.sum()


def zipf_noise_table(base_counts, s: float, seed: int) -> NoiseTable:
    """Noise counts drawn by Zipf rank from a permuted array of observed counts."""
    if s <= 0:
        raise ValueError("s must be positive")
    ids, counts = _as_pairs(base_counts)
    values = np.unique(counts)
    stream = Stream.from_labels("zipf-noise", seed)
    permuted = values[stream.child("permute").permutation(values.size)]
    cdf = np.cumsum(zipf_pmf(values.size, s))
    u = uniform_at(derive_key(stream.key, "ranks"), ids.astype(np.uint64))
    rank = np.minimum(np.searchsorted(cdf, u, side="right"), values.size - 1)
    return NoiseTable(ids, permuted[rank])


def make_noise_table(spec: NoiseSpec, ids: np.ndarray, counts: np.ndarray) -> NoiseTable:
    """Noise table for ``spec`` over the base counts of the given ids."""
    ids = np.asarray(ids, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    if spec.kind == "gaussian":
        scale = spec.scale * float(counts.std()) if spec.relative else spec.scale
        return gaussian_noise_table((ids, counts), spec.seed, scale)
    return zipf_noise_table((ids, counts), spec.s, spec.seed)
