"""Stratification design over a score-ordered universe.

Objects are ordered by (score, id) and given ranks 1..N. A first-stage sample
of m objects sits at ranks iota_1 < ... < iota_m with known labels. A
stratification is a list of sizes N_1..N_H of contiguous rank blocks; a
boundary b_h = N_1 + ... + N_h is the rank of the last object of stratum h.
The sample variance s_h^2 of each stratum is estimated from the first-stage
labels that fall inside it, and the designers below minimise the resulting
estimated variance of the stratified count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

NEYMAN = "neyman"
PROPORTIONAL = "proportional"
_EVAL_CHUNK = 1 << 20


class InfeasibleDesign(ValueError):
    pass


@dataclass(frozen=True)
class SampleRanks:
    """1-based ranks of the first-stage samples and their universe positions."""

    iota: np.ndarray
    positions: Optional[np.ndarray] = None

    def __post_init__(self):
        iota = np.asarray(self.iota, dtype=np.int64)
        if iota.size and (iota[0] < 1 or np.any(np.diff(iota) <= 0)):
            raise ValueError("ranks must be positive and strictly increasing")
        object.__setattr__(self, "iota", iota)

    @property
    def m(self) -> int:
        return int(self.iota.size)


@dataclass(frozen=True)
class PrefixSumIndex:
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=np.int64))


@dataclass(frozen=True)
class DesignConstraints:
    H: int
    N_floor: int
    m_floor: int
    n: int

    def __post_init__(self):
        if self.H < 2:
            raise ValueError("need at least 2 strata")
        if self.N_floor < 1 or self.m_floor < 2 or self.n < 1:
            raise ValueError("need N_floor >= 1, m_floor >= 2 and n >= 1")


@dataclass(frozen=True)
class DesignResult:
    sizes: tuple
    objective: float
    allocation_mode: str
    stddevs: tuple = ()
    sample_counts: tuple = ()


def locate_sample_ranks(scores, ids, sample) -> SampleRanks:
    """Ranks of the sampled positions in the (score, id) order of the universe.

    One bucket-counting pass: every unsampled object is assigned to the gap
    between consecutive sorted samples it falls into, and the ranks follow
    from cumulative bucket counts. O(N log m); the universe is never sorted.
    """
    scores = np.asarray(scores, dtype=np.float64)
    ids = np.asarray(ids, dtype=np.int64)
    sample = np.asarray(sample, dtype=np.int64)
    m = sample.size
    if m == 0:
        return SampleRanks(np.zeros(0, dtype=np.int64), sample)
    # complex numbers compare lexicographically (real, then imaginary) when
    # sorted, which gives the (score, id) order in one key; ids < 2^53 are exact
    keys = scores + 1j * ids.astype(np.float64)
    skeys = keys[sample]
    order = np.argsort(skeys, kind="stable")
    sorted_keys = skeys[order]
    is_sample = np.zeros(scores.size, dtype=bool)
    is_sample[sample] = True
    bucket = np.searchsorted(sorted_keys, keys[~is_sample], side="left")
    counts = np.bincount(bucket, minlength=m + 1)
    iota = np.arange(1, m + 1) + np.cumsum(counts)[:m]
    return SampleRanks(iota, sample[order])


def build_prefix_index(sorted_sample_labels) -> PrefixSumIndex:
    labels = np.asarray(sorted_sample_labels, dtype=np.int64).reshape(-1)
    return PrefixSumIndex(np.concatenate([[0], np.cumsum(labels)]))


def _svar(c, m):
    """Unbiased Bernoulli sample variance c (m - c) / (m (m - 1)); needs m >= 2."""
    c = np.asarray(c, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(m >= 2, c * (m - c) / (m * (m - 1)), np.nan)


def stratum_variance(gamma: PrefixSumIndex, lo: int, hi: int) -> float:
    """s^2 of the samples lo+1..hi (sorted positions, 1-based)."""
    m = hi - lo
    if m < 2:
        raise ValueError("too few samples in stratum")
    c = int(gamma.gamma[hi] - gamma.gamma[lo])
    return c * (m - c) / (m * (m - 1))


def neyman_objective(sizes, s, n: int) -> float:
    """(1/n) (sum N_h s_h)^2 - sum N_h s_h^2, reported without clamping."""
    sizes = np.asarray(sizes, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    return float(np.sum(sizes * s) ** 2 / n - np.sum(sizes * s * s))


def proportional_objective(sizes, s, n: int, N: int) -> float:
    """((N - n) / n) sum N_h s_h^2."""
    sizes = np.asarray(sizes, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    return float((N - n) / n * np.sum(sizes * s * s))


class _Instance:
    """Precomputed lookups shared by the designers."""

    def __init__(self, ranks: SampleRanks, gamma: PrefixSumIndex, N: int):
        self.iota = ranks.iota
        self.m = ranks.m
        self.gamma = gamma.gamma
        if self.gamma.size != self.m + 1:
            raise ValueError("prefix index length must be m + 1")
        if self.m and self.iota[-1] > N:
            raise ValueError("a rank exceeds N")
        self.N = int(N)
        # ell[b] = number of samples with rank <= b
        self.ell = np.searchsorted(self.iota, np.arange(N + 1), side="right")

    def stats(self, bounds: np.ndarray):
        """Sizes, sample counts and s for rows of boundaries (.., H-1)."""
        shape = bounds.shape[:-1]
        full = np.concatenate([np.zeros(shape + (1,), dtype=np.int64), bounds,
                               np.full(shape + (1,), self.N, dtype=np.int64)], axis=-1)
        sizes = np.diff(full, axis=-1)
        ell = self.ell[full]
        m = np.diff(ell, axis=-1)
        c = np.diff(self.gamma[ell], axis=-1)
        return sizes, m, np.sqrt(_svar(c, m))


def _objective(sizes, s, n: int, N: int, mode: str):
    sizes = np.asarray(sizes, dtype=np.float64)
    if mode == NEYMAN:
        return np.sum(sizes * s, axis=-1) ** 2 / n - np.sum(sizes * s * s, axis=-1)
    if mode == PROPORTIONAL:
        return (N - n) / n * np.sum(sizes * s * s, axis=-1)
    raise ValueError(f"unknown allocation mode {mode!r}")


def evaluate_design(sizes: Sequence[int], ranks: SampleRanks, gamma: PrefixSumIndex, N: int,
                    n: int, mode: str = NEYMAN, fallback_s: Optional[float] = None) -> DesignResult:
    """Objective of an explicit stratification.

    Strata holding fewer than two first-stage samples have no variance
    estimate; they raise unless ``fallback_s`` supplies one.
    """
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.sum() != N or np.any(sizes < 1):
        raise ValueError("sizes must be positive and sum to N")
    inst = _Instance(ranks, gamma, N)
    _, m, s = inst.stats(np.cumsum(sizes)[:-1])
    if np.any(m < 2):
        if fallback_s is None:
            raise ValueError("too few samples in stratum")
        s = np.where(m < 2, fallback_s, s)
    v = float(_objective(sizes, s, n, N, mode))
    return DesignResult(tuple(int(x) for x in sizes), v, mode,
                        tuple(float(x) for x in s), tuple(int(x) for x in m))


def _pick_best(bounds: np.ndarray, values: np.ndarray):
    """Lowest value; exact ties go to the lexicographically smallest sizes."""
    if values.size == 0:
        return None
    best = np.min(values)
    if not np.isfinite(best):
        return None
    rows = np.flatnonzero(values == best)
    # sizes are prefix differences of the bounds, so both orders agree
    for h in range(bounds.shape[-1]):
        if rows.size == 1:
            break
        col = bounds[rows, h]
        rows = rows[col == col.min()]
    return bounds[rows[0]], float(values[rows[0]])


def _finish(inst: _Instance, bounds, n: int, mode: str) -> DesignResult:
    sizes = np.diff(np.concatenate([[0], np.asarray(bounds, dtype=np.int64), [inst.N]]))
    return evaluate_design(sizes, SampleRanks(inst.iota), PrefixSumIndex(inst.gamma), inst.N, n, mode)


def _feasible(inst: _Instance, bounds: np.ndarray, con: DesignConstraints):
    sizes, m, s = inst.stats(bounds)
    ok = np.all(sizes >= con.N_floor, axis=-1) & np.all(m >= con.m_floor, axis=-1)
    return ok, sizes, s


def _check(con: DesignConstraints, inst: _Instance) -> None:
    if con.H * con.N_floor > inst.N or con.H * con.m_floor > inst.m:
        raise InfeasibleDesign("no feasible stratification")


def brute_force_design(ranks: SampleRanks, gamma: PrefixSumIndex, N: int,
                       constraints: DesignConstraints, mode: str = NEYMAN) -> DesignResult:
    """Exact optimum over every integer stratification (N <= 400, H <= 4)."""
    con = constraints
    if N > 400 or con.H > 4:
        raise ValueError("brute force limited to N <= 400 and H <= 4")
    inst = _Instance(ranks, gamma, N)
    _check(con, inst)
    H, Nf = con.H, con.N_floor
    best = None

    def consider(bounds: np.ndarray):
        nonlocal best
        ok, sizes, s = _feasible(inst, bounds, con)
        if not ok.any():
            return
        vals = np.where(ok, _objective(sizes, np.nan_to_num(s), con.n, N, mode), np.inf)
        got = _pick_best(bounds, vals)
        if got is not None and (best is None or got[1] < best[1]
                                or (got[1] == best[1] and tuple(got[0]) < tuple(best[0]))):
            best = got

    first = np.arange(Nf, N - (H - 1) * Nf + 1)
    if H == 2:
        consider(first[:, None])
    elif H == 3:
        b1, b2 = np.meshgrid(first, first, indexing="ij")
        keep = b2 - b1 >= Nf
        consider(np.stack([b1[keep], b2[keep]], axis=-1))
    else:
        for b1 in first:
            rest = np.arange(b1 + Nf, N - (H - 2) * Nf + 1)
            b2, b3 = np.meshgrid(rest, rest, indexing="ij")
            keep = b3 - b2 >= Nf
            k = int(keep.sum())
            if k:
                consider(np.stack([np.full(k, b1), b2[keep], b3[keep]], axis=-1))
    if best is None:
        raise InfeasibleDesign("no feasible stratification")
    return _finish(inst, best[0], con.n, mode)


# ---------------------------------------------------------------- DirSol


def _clip_polygon(l1, u1, l3, u3, S):
    rect = [(l1, l3), (u1, l3), (u1, u3), (l1, u3)]
    out = []
    for k in range(4):
        p, q = rect[k], rect[(k + 1) % 4]
        pin, qin = p[0] + p[1] <= S, q[0] + q[1] <= S
        if pin:
            out.append(p)
        if pin != qin:
            t = (S - p[0] - p[1]) / ((q[0] - p[0]) + (q[1] - p[1]))
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _quadratic_candidates(a, poly):
    """Real minimiser candidates of f over a convex polygon."""
    a1, a2, a3, a4, a5, _ = a
    cands = list(poly)
    det = 4 * a1 * a2 - a3 * a3
    if abs(det) > 1e-12 * max(1.0, abs(4 * a1 * a2)):
        cands.append(((-2 * a2 * a4 + a3 * a5) / det, (-2 * a1 * a5 + a3 * a4) / det))
    for k in range(len(poly)):
        p, q = poly[k], poly[(k + 1) % len(poly)]
        d1, d3 = q[0] - p[0], q[1] - p[1]
        A = a1 * d1 * d1 + a2 * d3 * d3 + a3 * d1 * d3
        B = (2 * a1 * p[0] + a3 * p[1] + a4) * d1 + (2 * a2 * p[1] + a3 * p[0] + a5) * d3
        if A > 0:
            t = min(max(-B / (2 * A), 0.0), 1.0)
            cands.append((p[0] + t * d1, p[1] + t * d3))
    return cands


def dirsol(ranks: SampleRanks, gamma: PrefixSumIndex, N: int,
           constraints: DesignConstraints) -> DesignResult:
    """Three strata: exact real optimum per sample partition, then rounding.

    For each admissible pair (i, j), where sample i is the last one in
    stratum 1 and sample j the first in stratum 3, the Neyman objective is a
    quadratic f(N_1, N_3) over a polygon of at most five sides. Candidates
    are the interior critical point, the minimum along each edge and the
    vertices; each is rounded to the integer points around it that lie in
    the polygon.
    """
    con = constraints
    if con.H != 3:
        raise ValueError("dirsol handles exactly 3 strata")
    inst = _Instance(ranks, gamma, N)
    _check(con, inst)
    iota, g, m, n, mf = inst.iota, inst.gamma, inst.m, con.n, con.m_floor
    best_key = None
    best_sizes = None
    S = N - con.N_floor
    for i in range(mf, m - 2 * mf + 1):
        s1 = math.sqrt(c_var(g[i], i))
        for j in range(i + mf + 1, m - mf + 2):
            s2 = math.sqrt(c_var(g[j - 1] - g[i], j - 1 - i))
            s3 = math.sqrt(c_var(g[m] - g[j - 1], m - j + 1))
            l1 = max(con.N_floor, int(iota[i - 1]))
            u1 = int(iota[i]) - 1
            l3 = max(con.N_floor, N - int(iota[j - 1]) + 1)
            u3 = N - int(iota[j - 2])
            if l1 > u1 or l3 > u3 or l1 + l3 > S:
                continue
            a = ((s1 - s2) ** 2 / n, (s3 - s2) ** 2 / n, 2 * (s1 - s2) * (s3 - s2) / n,
                 2 * (s1 - s2) * N * s2 / n - (s1 * s1 - s2 * s2),
                 2 * (s3 - s2) * N * s2 / n - (s3 * s3 - s2 * s2),
                 N * N * s2 * s2 / n - N * s2 * s2)
            pts = []
            for x, y in _quadratic_candidates(a, _clip_polygon(l1, u1, l3, u3, S)):
                rx = min(max(int(math.floor(x + 0.5)), l1), u1)
                ry = min(max(int(math.floor(y + 0.5)), l3), u3)
                pts.append((rx, ry))
                for fx in (math.floor(x), math.ceil(x)):
                    for fy in (math.floor(y), math.ceil(y)):
                        pts.append((int(fx), int(fy)))
            for x, y in set(pts):
                if not (l1 <= x <= u1 and l3 <= y <= u3 and x + y <= S):
                    continue
                v = (a[0] * x * x + a[1] * y * y + a[2] * x * y + a[3] * x + a[4] * y + a[5])
                sizes = (x, N - x - y, y)
                key = (v, sizes)
                if best_key is None or key < best_key:
                    best_key, best_sizes = key, sizes
    if best_sizes is None:
        raise InfeasibleDesign("no feasible stratification")
    return _finish(inst, np.cumsum(best_sizes)[:-1], n, NEYMAN)


def c_var(c, m) -> float:
    return float(c * (m - c) / (m * (m - 1)))


# ---------------------------------------------------------------- LogBdr


def _offsets(gap: int, base: float) -> np.ndarray:
    """floor(base^t) for t = 0, 1, ... while below ``gap``."""
    if gap <= 1:
        return np.zeros(0, dtype=np.int64)
    t_max = int(math.ceil(math.log(gap) / math.log(base))) + 2
    off = np.floor(base ** np.arange(t_max + 1)).astype(np.int64)
    return np.unique(off[off < gap])


def log_boundaries(ranks: SampleRanks, N: int, base: float = 2.0) -> list[np.ndarray]:
    """Candidate boundaries B_k between samples k and k+1, for k = 1..m-1.

    B_k = {iota_k} + {iota_k + floor(base^t) < iota_(k+1)} + {iota_(k+1) - 1}.
    """
    if base < 1 + 1e-6:
        raise ValueError("base must be at least 1 + 1e-6")
    iota = ranks.iota
    out = []
    for k in range(iota.size - 1):
        lo, hi = int(iota[k]), int(iota[k + 1])
        cand = np.concatenate([[lo], lo + _offsets(hi - lo, base), [hi - 1]])
        out.append(np.unique(cand[(cand >= lo) & (cand < hi)]))
    return out


def _sample_partitions(m: int, H: int, m_floor: int) -> np.ndarray:
    """Group ends e_1 < .. < e_(H-1) with every group holding >= m_floor samples."""
    lo, hi = m_floor, m - m_floor
    if hi < lo:
        return np.zeros((0, H - 1), dtype=np.int64)
    combos = np.array(list(itertools.combinations(range(lo, hi + 1), H - 1)), dtype=np.int64)
    if combos.size == 0:
        return combos.reshape(0, H - 1)
    gaps = np.diff(combos, axis=1)
    keep = np.all(gaps >= m_floor, axis=1) if H > 2 else np.ones(len(combos), dtype=bool)
    return combos[keep]


def logbdr(ranks: SampleRanks, gamma: PrefixSumIndex, N: int, constraints: DesignConstraints,
           base: float = 2.0) -> DesignResult:
    """Best Neyman design over sample partitions x logarithmic boundary candidates."""
    con = constraints
    inst = _Instance(ranks, gamma, N)
    _check(con, inst)
    cand = log_boundaries(ranks, N, base)
    L = max(len(c) for c in cand)
    pad = np.full((len(cand) + 1, L), -1, dtype=np.int64)  # row k holds B_k (1-based)
    for k, c in enumerate(cand, start=1):
        pad[k, : len(c)] = c
    parts = _sample_partitions(inst.m, con.H, con.m_floor)
    H1 = con.H - 1
    grid = np.array(list(itertools.product(range(L), repeat=H1)), dtype=np.int64)
    # every boundary in B_k lies between samples k and k+1, so a partition
    # fixes each stratum's samples and s_h; only the sizes vary over the grid
    ends = np.concatenate([np.zeros((len(parts), 1), dtype=np.int64), parts,
                           np.full((len(parts), 1), inst.m, dtype=np.int64)], axis=1)
    part_s = np.sqrt(_svar(np.diff(inst.gamma[ends], axis=1), np.diff(ends, axis=1)))
    # with s fixed, sum N_h s_h and sum N_h s_h^2 are linear in the boundaries
    lin1 = part_s[:, :-1] - part_s[:, 1:]
    lin2 = part_s[:, :-1] ** 2 - part_s[:, 1:] ** 2
    per = max(1, _EVAL_CHUNK // len(grid))
    best = None
    for start in range(0, len(parts), per):
        stop = start + per
        bounds = pad[parts[start:stop, None, :], grid[None, :, :]]  # (P, G, H-1)
        # padding entries (-1) always violate one of the floors below
        ok = (bounds[..., 0] >= con.N_floor) & (bounds[..., -1] <= N - con.N_floor)
        for h in range(1, H1):
            ok &= bounds[..., h] - bounds[..., h - 1] >= con.N_floor
        a = np.einsum("pgh,ph->pg", bounds, lin1[start:stop]) + N * part_s[start:stop, -1:]
        b = np.einsum("pgh,ph->pg", bounds, lin2[start:stop]) + N * part_s[start:stop, -1:] ** 2
        vals = np.where(ok, a * a / con.n - b, np.inf).reshape(-1)
        got = _pick_best(bounds.reshape(-1, H1), vals)
        if got is not None and (best is None or got[1] < best[1]
                                or (got[1] == best[1] and tuple(got[0]) < tuple(best[0]))):
            best = got
    if best is None:
        raise InfeasibleDesign("no feasible stratification")
    return _finish(inst, best[0], con.n, NEYMAN)


# ---------------------------------------------------------------- DP designers


def dp_candidates(ranks: SampleRanks, N: int, base: float = 2.0) -> np.ndarray:
    """Offsets floor(base^t) up from each iota_k (below iota_(k+1)) and down
    from it (above iota_(k-1)), plus the sample ranks themselves and N."""
    iota = ranks.iota
    padded = np.concatenate([[0], iota, [N + 1]])
    out = [iota, np.array([N])]
    for k in range(1, padded.size - 1):
        r = int(padded[k])
        up = _offsets(int(padded[k + 1]) - r, base)
        down = _offsets(r - int(padded[k - 1]), base)
        out.append(r + up)
        out.append(r - down)
    b = np.unique(np.concatenate(out).astype(np.int64))
    return b[(b >= 1) & (b <= N)]


def _dp_tables(inst: _Instance, B: np.ndarray, con: DesignConstraints):
    nodes = np.concatenate([[0], B])
    ell = inst.ell[nodes]
    gam = inst.gamma[ell]
    return nodes, ell, gam


def _row(nodes, ell, gam, i, con):
    """Sizes, validity and s for every stratum ending at node i."""
    size = nodes[i] - nodes[:i]
    m = ell[i] - ell[:i]
    c = gam[i] - gam[:i]
    ok = (size >= con.N_floor) & (m >= con.m_floor)
    s = np.sqrt(np.nan_to_num(_svar(c, m)))
    return size.astype(np.float64), ok, s


def _backtrack(parent, K, H, nodes, t=None):
    bounds = []
    i = K
    for h in range(H, 0, -1):
        j = parent[h, i] if t is None else parent[t, h, i]
        if h > 1:
            bounds.append(int(nodes[j]))
        i = j
    return bounds[::-1]


def dynpgm(ranks: SampleRanks, gamma: PrefixSumIndex, N: int, constraints: DesignConstraints,
           eps: float = 0.05, base: float = 2.0) -> DesignResult:
    """Neyman design by dynamic programming under per-stratum caps N_h s_h <= t.

    The cross term of the objective couples strata through the running sum
    X = sum N_h s_h, so for each cap t in T the DP stores the best value A
    and the X it was reached with; the true objective of every resulting
    design is recomputed and the best is returned.
    """
    con = constraints
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    inst = _Instance(ranks, gamma, N)
    _check(con, inst)
    n, H = con.n, con.H
    nodes, ell, gam = _dp_tables(inst, dp_candidates(ranks, N, base), con)
    K = nodes.size - 1
    top = int(math.ceil(math.log2(max(inst.m * H * N, 2))))
    T = np.unique(np.concatenate([2.0 ** np.arange(top + 1),
                                  eps * np.arange(int(math.floor(1 / eps + 1e-9)) + 1)]))
    tcap = T * (1 + 1e-12)
    nt = T.size
    A = np.full((nt, H + 1, K + 1), np.inf)
    X = np.zeros((nt, H + 1, K + 1))
    parent = np.full((nt, H + 1, K + 1), -1, dtype=np.int64)
    A[:, 0, 0] = 0.0
    for i in range(1, K + 1):
        size, ok, s = _row(nodes, ell, gam, i, con)
        if not ok.any():
            continue
        w = size * s
        cost = size * size * s * s / n - size * s * s
        allowed = ok[None, :] & (w[None, :] <= tcap[:, None])
        for h in range(1, H + 1):
            val = A[:, h - 1, :i] + cost[None, :] + (2.0 / n) * w[None, :] * X[:, h - 1, :i]
            val = np.where(allowed, val, np.inf)
            j = np.argmin(val, axis=1)
            v = val[np.arange(nt), j]
            A[:, h, i] = v
            X[:, h, i] = np.where(np.isfinite(v), X[np.arange(nt), h - 1, j] + w[j], 0.0)
            parent[:, h, i] = np.where(np.isfinite(v), j, -1)
    best = None
    for t in range(nt):
        if not np.isfinite(A[t, H, K]):
            continue
        res = _finish(inst, _backtrack(parent, K, H, nodes, t), n, NEYMAN)
        if best is None or (res.objective, res.sizes) < (best.objective, best.sizes):
            best = res
    if best is None:
        raise InfeasibleDesign("no feasible stratification")
    return best


def dynpgmp(ranks: SampleRanks, gamma: PrefixSumIndex, N: int, constraints: DesignConstraints,
            base: float = 2.0) -> DesignResult:
    """Exact proportional-allocation optimum over the candidate boundaries."""
    con = constraints
    inst = _Instance(ranks, gamma, N)
    _check(con, inst)
    n, H = con.n, con.H
    nodes, ell, gam = _dp_tables(inst, dp_candidates(ranks, N, base), con)
    K = nodes.size - 1
    A = np.full((H + 1, K + 1), np.inf)
    parent = np.full((H + 1, K + 1), -1, dtype=np.int64)
    A[0, 0] = 0.0
    for i in range(1, K + 1):
        size, ok, s = _row(nodes, ell, gam, i, con)
        cost = np.where(ok, (N - n) / n * size * s * s, np.inf)
        for h in range(1, H + 1):
            val = A[h - 1, :i] + cost
            j = int(np.argmin(val))
            A[h, i] = val[j]
            parent[h, i] = j if np.isfinite(val[j]) else -1
    if not np.isfinite(A[H, K]):
        raise InfeasibleDesign("no feasible stratification")
    return _finish(inst, _backtrack(parent, K, H, nodes), n, PROPORTIONAL)


# ---------------------------------------------------------------- layouts


def fixed_height_strata(N: int, H: int) -> tuple[int, ...]:
    """H sizes differing by at most one, larger ones first."""
    if H < 1 or N < H:
        raise ValueError("need 1 <= H <= N")
    q, r = divmod(N, H)
    return tuple(q + 1 if h < r else q for h in range(H))


def fixed_width_strata(sorted_scores, H: int) -> tuple[int, ...]:
    """Sizes of equal-width score bins [h/H, (h+1)/H) over [0, 1]; empty bins dropped."""
    if H < 1:
        raise ValueError("H must be positive")
    scores = np.asarray(sorted_scores, dtype=np.float64)
    bins = np.minimum(np.floor(scores * H).astype(np.int64), H - 1)
    counts = np.bincount(np.clip(bins, 0, H - 1), minlength=H)
    return tuple(int(c) for c in counts if c > 0)


def tick_strata(sorted_scores, ranks: SampleRanks, gamma: PrefixSumIndex,
                constraints: DesignConstraints, spacing: float = 0.05,
                mode: str = NEYMAN) -> DesignResult:
    """Best design whose cuts sit at score ticks spacing, 2 spacing, ... < 1.

    A cut at tick c separates scores below c from the rest. Each tick cut
    also yields two widened cuts: moved down until the part above it meets
    the floors, and up until the part below it does. This keeps a small
    high-score region usable as a stratum when few pilot samples fall in it.
    Up to H-1 cuts are chosen; ticks that produce the same split collapse,
    so coarse score distributions may yield fewer than H strata.
    """
    if not 0 < spacing < 1:
        raise ValueError("spacing must lie in (0, 1)")
    con = constraints
    scores = np.asarray(sorted_scores, dtype=np.float64)
    N = scores.size
    inst = _Instance(ranks, gamma, N)
    ticks = spacing * np.arange(1, int(math.ceil(1 / spacing)))
    ticks = ticks[ticks < 1 - 1e-12]
    cuts = np.unique(np.searchsorted(scores, ticks, side="left"))
    cuts = cuts[(cuts >= 1) & (cuts <= N - 1)]
    if inst.m >= con.m_floor and con.m_floor >= 1 and cuts.size:
        top = min(N - con.N_floor, int(inst.iota[inst.m - con.m_floor]) - 1)
        bottom = max(con.N_floor, int(inst.iota[con.m_floor - 1]))
        cuts = np.unique(np.concatenate([cuts, np.minimum(cuts, top), np.maximum(cuts, bottom)]))
        cuts = cuts[(cuts >= 1) & (cuts <= N - 1)]
    best = None
    for r in range(1, min(con.H - 1, cuts.size) + 1):
        bounds = np.array(list(itertools.combinations(cuts.tolist(), r)), dtype=np.int64)
        ok, sizes, s = _feasible(inst, bounds, con)
        vals = np.where(ok, _objective(sizes, np.nan_to_num(s), con.n, N, mode), np.inf)
        got = _pick_best(bounds, vals)
        if got is None:
            continue
        res = _finish(inst, got[0], con.n, mode)
        if best is None or (res.objective, res.sizes) < (best.objective, best.sizes):
            best = res
    if best is None:
        raise InfeasibleDesign("no feasible tick stratification")
    return best
