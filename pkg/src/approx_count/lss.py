"""Learned stratified sampling: learn a scorer, design strata on its ordering, sample."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .baselines import (FrameEstimate, neyman_allocation, proportional_allocation, sample_frame,
                        smoothed_stddevs)
from .core import Budget, Dataset, Estimate, z_value
from .learning import PhaseClock, complement, learn_sample
from .lss_design import (NEYMAN, PROPORTIONAL, DesignConstraints, DesignResult, InfeasibleDesign,
                         build_prefix_index, dirsol, dynpgm, dynpgmp, evaluate_design,
                         fixed_height_strata, fixed_width_strata, locate_sample_ranks, logbdr,
                         tick_strata)
from .rng import Stream
from .scorers import ScorerConfig

OPTIMIZERS = ("dirsol", "logbdr", "dynpgm", "dynpgmp", "fixed_width", "fixed_height", "ticks")


@dataclass(frozen=True)
class LSSConfig:
    H: int = 4
    optimizer: str = "ticks"
    allocation: str = NEYMAN
    N_floor: int | None = None  # defaults to the second-stage sample size
    m_floor: int = 5
    base: float = 2.0
    eps: float = 0.05
    spacing: float = 0.05
    smooth_allocation: bool = True  # Neyman weights from add-one smoothed pilot proportions

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.allocation not in (NEYMAN, PROPORTIONAL):
            raise ValueError(f"unknown allocation {self.allocation!r}")
        if self.optimizer == "dirsol" and self.H != 3:
            raise ValueError("dirsol designs exactly 3 strata")
        if self.optimizer == "dynpgmp" and self.allocation != PROPORTIONAL:
            raise ValueError("dynpgmp optimises for proportional allocation")


def lss_budget(total: int, learn_fraction: float = 0.25, design_share: float = 0.25) -> Budget:
    """Budget with ``design_share`` of the post-learning remainder spent on design."""
    return Budget(total, learn_fraction, (1 - learn_fraction) * design_share)


def design(optimizer: str, sorted_scores, ranks, gamma, con: DesignConstraints,
           cfg: LSSConfig) -> DesignResult:
    """Run one designer on a score-ordered frame."""
    N = len(sorted_scores)
    mode = cfg.allocation
    if optimizer == "dirsol":
        return dirsol(ranks, gamma, N, con)
    if optimizer == "logbdr":
        return logbdr(ranks, gamma, N, con, cfg.base)
    if optimizer == "dynpgm":
        return dynpgm(ranks, gamma, N, con, cfg.eps, cfg.base)
    if optimizer == "dynpgmp":
        return dynpgmp(ranks, gamma, N, con, cfg.base)
    if optimizer == "ticks":
        return tick_strata(sorted_scores, ranks, gamma, con, cfg.spacing, mode)
    if optimizer == "fixed_width":
        sizes = fixed_width_strata(sorted_scores, con.H)
    else:
        sizes = fixed_height_strata(N, con.H)
    return evaluate_design(sizes, ranks, gamma, N, con.n, mode, fallback_s=0.5)


def lss_estimate(oracle, dataset: Dataset, scorer: ScorerConfig, budget: Budget,
                 cfg: LSSConfig = LSSConfig(), alpha: float = 0.05, seed: int = 0) -> Estimate:
    """Two-stage stratified estimate over the score ordering of a learned scorer.

    Phase 1 labels a uniform sample S_L and trains the scorer. Stage 1 labels
    a uniform sample S_I of the remaining frame, locates it in the score
    order and designs strata. Stage 2 samples each stratum of the frame minus
    S_I. The estimate is C(S_L) + C(S_I) + the stratified stage-2 count of the
    frame minus S_I; conditioning on S_I makes it unbiased.
    """
    t0 = time.perf_counter()
    N = len(dataset)
    stream = Stream(seed)
    clock = PhaseClock(oracle)
    start = oracle.calls
    warnings: list[str] = []
    n_learn, n_design, n_est = budget.split()

    with clock.phase("learn"):
        idx, labels, model = learn_sample(oracle, dataset, n_learn, scorer, stream.child("learn"))
    known = int(labels.sum())

    with clock.phase("apply"):
        frame = complement(N, idx)
        scores = model.score_indices(dataset, frame)
        order = np.lexsort((dataset.ids[frame], scores))
        ordered = frame[order]
        sorted_scores = scores[order]
    M = frame.size

    with clock.phase("design"):
        n_design = min(n_design, M)
        first = stream.child("design").sample(M, n_design)
        first_labels = oracle.evaluate(frame[first])
        ranks = locate_sample_ranks(scores, dataset.ids[frame], first)
        by_pos = dict(zip(first.tolist(), first_labels.tolist()))
        gamma = build_prefix_index([by_pos[p] for p in ranks.positions.tolist()])
        known += int(first_labels.sum())
        n_est = min(n_est, M - n_design)
        m_floor = cfg.m_floor
        if n_design < cfg.H * m_floor and n_design // cfg.H >= 2:
            m_floor = n_design // cfg.H
            warnings.append(f"first-stage sample of {n_design} too small for m_floor={cfg.m_floor}; "
                            f"using {m_floor}")
        result = None
        if n_est >= 1 and n_design >= 2 * cfg.H:
            con = DesignConstraints(cfg.H, cfg.N_floor or n_est, m_floor, n_est)
            try:
                result = design(cfg.optimizer, sorted_scores, ranks, gamma, con, cfg)
            except InfeasibleDesign as err:
                warnings.append(f"{cfg.optimizer}: {err}; falling back to fixed_height")
        elif n_est >= 1:
            warnings.append("first-stage sample too small to design; using fixed_height")
        if result is None:
            H = max(1, min(cfg.H, M))
            result = evaluate_design(fixed_height_strata(M, H), ranks, gamma, M, max(n_est, 1),
                                     cfg.allocation, fallback_s=0.5)
        bounds = np.concatenate([[0], np.cumsum(result.sizes)])
        in_first = np.zeros(M, dtype=bool)
        in_first[ranks.iota - 1] = True
        members = [ordered[bounds[h]:bounds[h + 1]][~in_first[bounds[h]:bounds[h + 1]]]
                   for h in range(len(result.sizes))]
        sizes = np.array([m.size for m in members], dtype=np.int64)
        pilot_pos = np.zeros(M, dtype=np.int64)
        pilot_pos[ranks.iota - 1] = np.diff(gamma.gamma)
        c = np.add.reduceat(pilot_pos, bounds[:-1]) if M else np.zeros(0)
        s_alloc = smoothed_stddevs(c, result.sample_counts) if cfg.smooth_allocation \
            else np.asarray(result.stddevs)
        alloc = _allocate(sizes, s_alloc, n_est, cfg.allocation)

    with clock.phase("apply"):
        est = sample_frame(oracle, members, alloc, stream.child("stage2")) if n_est > 0 else \
            FrameEstimate(0.0, 0.0, sizes, alloc, np.zeros_like(sizes), np.zeros(sizes.size), [])

    count = known + est.count
    half = z_value(alpha) * math.sqrt(est.variance)
    timings = clock.report(1000.0 * (time.perf_counter() - t0))
    return Estimate(count, count / N, est.variance, (count - half, count + half),
                    oracle.calls - start, "lss", seed, tuple(warnings + est.warnings), timings)


def _allocate(sizes: np.ndarray, s: np.ndarray, n: int, mode: str) -> np.ndarray:
    alloc = np.zeros(sizes.size, dtype=np.int64)
    live = sizes > 0
    if n <= 0 or not live.any():
        return alloc
    if n >= sizes.sum():
        return sizes.copy()
    floor = 2 if 2 * live.sum() <= n else 1
    if mode == NEYMAN:
        alloc[live] = neyman_allocation(sizes[live], s[live], n, floor).counts
    else:
        alloc[live] = proportional_allocation(sizes[live], n, floor).counts
    return alloc
