"""Sampling-only estimators: SRS, proportional (SSP) and two-stage Neyman (SSN)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Dataset, Estimate, EstimatorError, wald_interval, z_value
from .rng import Stream


@dataclass(frozen=True)
class Stratification:
    """A partition of dataset positions into non-empty strata."""

    members: tuple

    def __post_init__(self):
        members = tuple(np.asarray(m, dtype=np.int64) for m in self.members)
        if any(m.size == 0 for m in members):
            raise ValueError("strata must be non-empty")
        object.__setattr__(self, "members", members)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(int(m.size) for m in self.members)

    @property
    def H(self) -> int:
        return len(self.members)

    def stratum_of(self, index: int) -> int:
        for h, m in enumerate(self.members):
            if np.any(m == index):
                return h
        raise KeyError(index)


@dataclass(frozen=True)
class Allocation:
    counts: tuple


@dataclass
class FrameEstimate:
    """Stratified estimate of the positive count within a sampling frame."""

    count: float
    variance: float
    sizes: np.ndarray
    alloc: np.ndarray
    positives: np.ndarray
    stddevs: np.ndarray
    warnings: list


def _largest_remainder(x: np.ndarray, total: int, caps: np.ndarray) -> np.ndarray:
    base = np.floor(x + 1e-9).astype(np.int64)
    base = np.minimum(base, caps)
    short = total - int(base.sum())
    frac = x - base
    # descending fractional part, lower index first on ties
    for h in np.lexsort((np.arange(x.size), -frac)):
        if short <= 0:
            break
        if base[h] < caps[h]:
            base[h] += 1
            short -= 1
    if short != 0:
        raise ValueError("allocation could not be rounded to the requested total")
    return base


def _constrained_allocation(weights, caps, n: int, floor: int) -> np.ndarray:
    """n_h proportional to weights, clipped to [min(floor, cap_h), cap_h].

    The real solution is x_h = clip(lam w_h, floor_h, cap_h) with lam chosen
    so the x_h sum to n. If the weighted strata saturate before that, the
    rest goes to the zero-weight strata in proportion to their size.
    """
    w = np.asarray(weights, dtype=np.float64)
    caps = np.asarray(caps, dtype=np.int64)
    floors = np.minimum(floor, caps)
    if n > caps.sum():
        raise ValueError(f"cannot allocate {n} samples to {int(caps.sum())} objects")
    if floors.sum() > n:
        raise ValueError(f"{w.size} strata with minimum {floor} need more than {n} samples")
    if np.any(w > 0):
        # scale-free; weights below 1e-12 of the largest would round to the
        # floor anyway and are zeroed to keep the breakpoints finite
        w = w / w.max()
        w = np.where(w < 1e-12, 0.0, w)
    return _largest_remainder(_water_fill(w, floors, caps, n), n, caps)


def _water_fill(w: np.ndarray, floors: np.ndarray, caps: np.ndarray, n: int) -> np.ndarray:
    pos = w > 0
    if not pos.any():
        if floors.sum() == n:
            return floors.astype(np.float64)
        return _water_fill(caps.astype(np.float64) * (floors < caps), floors, caps, n)
    if caps[pos].sum() + floors[~pos].sum() <= n:
        base = np.where(pos, caps, floors)
        spill = np.where(pos, 0.0, caps.astype(np.float64))
        return _water_fill(spill * (base < caps), base, caps, n)
    # sum of clip(lam w, floor, cap) is piecewise linear and non-decreasing in
    # lam with breakpoints at floor/w and cap/w; find the segment that hits n
    bps = np.unique(np.concatenate([floors[pos] / w[pos], caps[pos] / w[pos]]))
    totals = np.array([np.clip(b * w, floors, caps).sum() for b in bps])
    k = int(np.searchsorted(totals, n - 1e-9))
    lo = bps[k - 1] if k > 0 else 0.0
    hi = bps[min(k, bps.size - 1)]
    free = pos & (floors / np.where(pos, w, 1.0) <= lo) & (caps / np.where(pos, w, 1.0) >= hi)
    x = np.clip(lo * w, floors, caps).astype(np.float64)
    x = np.where(pos & (caps / np.where(pos, w, 1.0) <= lo), caps, x)
    if free.any() and hi > lo:
        lam = (n - x[~free].sum()) / w[free].sum()
        x[free] = lam * w[free]
    else:
        x = np.clip(hi * w, floors, caps).astype(np.float64)
    return x


def proportional_allocation(sizes: Sequence[int], n: int, min_per_stratum: int = 0) -> Allocation:
    """n_h proportional to N_h, largest-remainder rounded, capped at N_h."""
    sizes = np.asarray(sizes, dtype=np.int64)
    return Allocation(tuple(int(v) for v in _constrained_allocation(sizes, sizes, n, min_per_stratum)))


def neyman_allocation(sizes: Sequence[int], s: Sequence[float], n: int,
                      min_per_stratum: int = 2) -> Allocation:
    """n_h proportional to N_h s_h within [min_per_stratum, N_h].

    Falls back to proportional allocation when every N_h s_h is zero.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0):
        raise ValueError("stddevs must be non-negative")
    if len(sizes) * min_per_stratum > n:
        raise ValueError(f"{len(sizes)} strata with minimum {min_per_stratum} need more than {n} samples")
    w = sizes * s
    if not np.any(w > 0):
        w = sizes.astype(np.float64)
    return Allocation(tuple(int(v) for v in _constrained_allocation(w, sizes, n, min_per_stratum)))


def smoothed_stddevs(positives, samples) -> np.ndarray:
    """Allocation stddevs from add-one smoothed pilot proportions (c + 1) / (m + 2).

    A stratum whose few pilot labels happen to agree would otherwise get s = 0
    and only the minimum stage-2 sample, which starves it when it is impure.
    """
    c = np.asarray(positives, dtype=np.float64)
    m = np.asarray(samples, dtype=np.float64)
    p = (c + 1.0) / (m + 2.0)
    return np.sqrt(p * (1.0 - p))


def grid_stratify(dataset: Dataset, H: int) -> Stratification:
    """Equal-width sqrt(H) x sqrt(H) grid over the bounding box; empty cells dropped."""
    g = math.isqrt(H)
    if H < 1 or g * g != H:
        raise ValueError(f"H={H} is not a perfect square")
    if dataset.dimension != 2:
        raise ValueError("grid stratification needs 2-D data")

    def cell(v: np.ndarray) -> np.ndarray:
        lo, hi = v.min(), v.max()
        if hi <= lo:
            return np.zeros(v.size, dtype=np.int64)
        return np.minimum(np.floor((v - lo) / (hi - lo) * g).astype(np.int64), g - 1)

    col = cell(dataset.features[:, 0])
    row = cell(dataset.features[:, 1])
    ids = row * g + col
    members = [np.flatnonzero(ids == c) for c in range(H)]
    return Stratification(tuple(m for m in members if m.size))


def sample_frame(oracle, members: Sequence[np.ndarray], alloc: Sequence[int],
                 stream: Stream) -> FrameEstimate:
    """Draw alloc[h] objects from each stratum without replacement and estimate.

    Returns the count over the union of ``members`` with its variance
    Sum N_h^2 s_h^2 / n_h - Sum N_h s_h^2, where s_h^2 is the unbiased
    within-stratum sample variance. Strata with fewer than two samples
    contribute s_h = 0 and a warning.
    """
    H = len(members)
    sizes = np.array([len(m) for m in members], dtype=np.int64)
    alloc = np.asarray(alloc, dtype=np.int64)
    if alloc.size != H:
        raise ValueError("one allocation per stratum required")
    if np.any(alloc > sizes):
        raise ValueError("allocation exceeds stratum size")
    if np.any((alloc == 0) & (sizes > 0)):
        raise EstimatorError("empty allocation in a non-empty stratum")
    positives = np.zeros(H, dtype=np.int64)
    s2 = np.zeros(H)
    warnings: list[str] = []
    for h in range(H):
        if sizes[h] == 0:
            continue
        pick = stream.child("stratum", h).sample(int(sizes[h]), int(alloc[h]))
        labels = oracle.evaluate(np.asarray(members[h])[pick])
        c = int(labels.sum())
        positives[h] = c
        m = int(alloc[h])
        if m >= 2:
            s2[h] = c * (m - c) / (m * (m - 1))
        elif m < sizes[h]:
            warnings.append(f"stratum {h} has {m} sample(s); variance contribution set to 0")
    nz = sizes > 0
    p_h = np.zeros(H)
    p_h[nz] = positives[nz] / alloc[nz]
    count = float(np.sum(sizes * p_h))
    var = float(np.sum(np.where(nz, sizes.astype(float) ** 2 * s2 / np.maximum(alloc, 1), 0.0))
                - np.sum(sizes * s2))
    return FrameEstimate(count, max(var, 0.0), sizes, alloc, positives, np.sqrt(s2), warnings)


def _frame_to_estimate(frame: FrameEstimate, known: int, N: int, calls: int, alpha: float,
                       method: str, seed: int, extra_warnings=()) -> Estimate:
    count = known + frame.count
    half = z_value(alpha) * math.sqrt(frame.variance)
    total = int(frame.sizes.sum())
    ci = (max(float(known), count - half), min(float(known + total), count + half))
    return Estimate(count, count / N, frame.variance, ci, calls, method, seed,
                    tuple(extra_warnings) + tuple(frame.warnings))


def srs_estimate(oracle, dataset: Dataset, n: int, alpha: float = 0.05, seed: int = 0) -> Estimate:
    """Simple random sample of n objects; count = p_hat N with a Wald interval."""
    N = len(dataset)
    if not 1 <= n <= N:
        raise ValueError(f"sample size {n} outside [1, {N}]")
    start = oracle.calls
    pick = Stream(seed).child("srs").sample(N, n)
    p_hat = float(oracle.evaluate(pick).mean())
    lo, hi = wald_interval(p_hat, n, N, alpha)
    fpc = (N - n) / (N - 1) if N > 1 else 0.0
    var = N * N * p_hat * (1 - p_hat) / n * fpc
    return Estimate(p_hat * N, p_hat, var, (lo * N, hi * N), oracle.calls - start, "srs", seed)


def stratified_estimate(oracle, dataset: Dataset, strat: Stratification, alloc: Allocation,
                        alpha: float = 0.05, seed: int = 0, method: str = "stratified") -> Estimate:
    start = oracle.calls
    frame = sample_frame(oracle, strat.members, alloc.counts, Stream(seed).child("stratified"))
    return _frame_to_estimate(frame, 0, len(dataset), oracle.calls - start, alpha, method, seed)


def ssp_estimate(oracle, dataset: Dataset, n: int, H: int = 4, alpha: float = 0.05,
                 seed: int = 0) -> Estimate:
    """Proportional allocation over a surrogate-attribute grid.

    Every non-empty cell gets at least one sample when the budget allows,
    which keeps the estimator unbiased when a cell is tiny.
    """
    strat = grid_stratify(dataset, H)
    floor = 1 if n >= strat.H else 0
    alloc = proportional_allocation(strat.sizes, n, min_per_stratum=floor)
    return stratified_estimate(oracle, dataset, strat, alloc, alpha, seed, method="ssp")


def ssn_estimate(oracle, dataset: Dataset, strat: Stratification, n_total: int,
                 pilot_fraction: float = 0.25, alpha: float = 0.05, seed: int = 0,
                 min_per_stratum: int = 2, smooth: bool = True) -> Estimate:
    """Two-stage Neyman allocation.

    A proportional pilot estimates each stratum's standard deviation. Pilot
    objects leave the frame and their exact labels join the count; the rest
    of the budget is allocated by Neyman over the reduced frame. With
    ``smooth`` the allocation uses add-one smoothed pilot proportions.
    """
    N = len(dataset)
    H = strat.H
    n_pilot = int(round(pilot_fraction * n_total))
    if n_pilot < 2 * H:
        raise ValueError(f"pilot of {n_pilot} samples is below 2H = {2 * H}")
    if n_total > N:
        raise ValueError("budget exceeds dataset size")
    start = oracle.calls
    stream = Stream(seed).child("ssn")
    pilot_alloc = proportional_allocation(strat.sizes, n_pilot, min_per_stratum=2).counts
    known = 0
    s = np.zeros(H)
    pos = np.zeros(H)
    rest = []
    for h, members in enumerate(strat.members):
        pick = stream.child("pilot", h).sample(members.size, pilot_alloc[h])
        labels = oracle.evaluate(members[pick])
        c, m = int(labels.sum()), int(pilot_alloc[h])
        known += c
        pos[h] = c
        if m >= 2:
            s[h] = math.sqrt(c * (m - c) / (m * (m - 1)))
        keep = np.ones(members.size, dtype=bool)
        keep[pick] = False
        rest.append(members[keep])
    if smooth:
        s = smoothed_stddevs(pos, pilot_alloc)
    frame_sizes = np.array([r.size for r in rest], dtype=np.int64)
    n2 = min(n_total - n_pilot, int(frame_sizes.sum()))
    live = frame_sizes > 0
    alloc = np.zeros(H, dtype=np.int64)
    if n2 > 0 and live.any():
        floor = min_per_stratum if live.sum() * min_per_stratum <= n2 else 1
        alloc[live] = neyman_allocation(frame_sizes[live], s[live], n2, floor).counts
    frame = sample_frame(oracle, rest, alloc, stream.child("stage2"))
    return _frame_to_estimate(frame, known, N, oracle.calls - start, alpha, "ssn", seed)
