"""Finite-stage unstable pressure on discretized leaves.

P_n (separated/packing) and Q_n (spanning/covering) are computed exactly on
the sample by dynamic programming over the sorted parameter line, with a
greedy maximal-separated construction bracketed between them (Q_n <= greedy
<= P_n row by row).  All weights live in the log domain; sums of weights use
shifted log-sum-exp accumulation.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_left, insort
from dataclasses import dataclass, field
from statistics import median

import numpy as np
from scipy.special import logsumexp

from .errors import (
    JoinSizeError,
    OracleRefusalError,
    UnderResolvedError,
    UnsupportedStructureError,
)
from .leaf import BowenDistanceEvaluator, sample_leaf

# Boundary ties: "at least eps" separation is closed, Bowen balls are closed;
# exact comparisons carry this slack toward admitting separation/coverage.
SEP_SLACK = 1e-12
DENSITY_FACTOR = 10  # sample points per conflict width
SAMPLE_CAP = 300_000  # refuse rows whose density rule wants more points
ORACLE_CAP = 20

NEG_INF = float("-inf")


def _lse2(a, b):
    """log(e^a + e^b) for scalars, tolerant of -inf."""
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def required_sample_size(sys, delta, n, eps):
    """Density rule: DENSITY_FACTOR sample points per conflict width.

    m - 1 = floor(DENSITY_FACTOR * 2 delta Lambda^(n-1) / eps) keeps the
    effective separation scale pinned at exactly DENSITY_FACTOR grid steps,
    so count ratios between stages carry O(Lambda^-n) quantization error
    instead of oscillating by a full grid step.
    """
    rate = sys.unstable_rate * (1.0 + 4.0 * getattr(sys, "magnitude", 0.0))
    width = eps / rate ** (n - 1)
    return max(32, int(math.floor(DENSITY_FACTOR * 2.0 * delta / width)) + 1)


@dataclass
class ConflictStructure:
    """Interval conflict relation of the Bowen metric on a leaf sample.

    Point i conflicts with j iff d^u_n(i, j) < eps (up to the tie slack);
    for monotone 1-D Bowen metrics that relation is the index interval
    [conflict_lo[i], conflict_hi[i]].  cover_lo/hi are the closed-ball
    (d^u_n <= eps) index ranges used by spanning covers.
    """

    sample: object
    depth: int
    epsilon: float
    positions: np.ndarray  # (depth, m) leafwise positions per step
    conflict_lo: np.ndarray
    conflict_hi: np.ndarray
    cover_lo: np.ndarray
    cover_hi: np.ndarray

    @property
    def m(self):
        return self.positions.shape[1]

    def halfwidths(self):
        """Per-point half-width of the d^u_n ball in parameter units."""
        params = self.sample.params
        left = params - params[self.cover_lo]
        right = params[self.cover_hi] - params
        return np.maximum(left, right)

    def distance(self, i, j):
        return float(np.max(np.abs(self.positions[:, i] - self.positions[:, j])))


def conflicts_from_positions(sample, positions, eps, depth=None):
    """Interval conflict structure from per-step leafwise positions.

    Each row of `positions` must be strictly increasing (monotone Bowen
    metric); violations raise UnsupportedStructureError.
    """
    positions = np.atleast_2d(np.asarray(positions, float))
    if np.any(np.diff(positions, axis=1) <= 0):
        raise UnsupportedStructureError(
            "leafwise positions are not strictly increasing; conflict relation "
            "is not interval-structured"
        )
    depth = depth if depth is not None else positions.shape[0]
    sep = eps - SEP_SLACK
    cov = eps + SEP_SLACK
    los, his, clos, chis = [], [], [], []
    for row in positions:
        los.append(np.searchsorted(row, row - sep, side="right"))
        his.append(np.searchsorted(row, row + sep, side="left") - 1)
        clos.append(np.searchsorted(row, row - cov, side="left"))
        chis.append(np.searchsorted(row, row + cov, side="right") - 1)
    return ConflictStructure(
        sample=sample,
        depth=depth,
        epsilon=eps,
        positions=positions,
        conflict_lo=np.max(los, axis=0),
        conflict_hi=np.min(his, axis=0),
        cover_lo=np.max(clos, axis=0),
        cover_hi=np.min(chis, axis=0),
    )


def build_conflicts(ev, sample, eps, enforce_density=True):
    """Conflict structure for a Bowen evaluator and leaf sample at scale eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if enforce_density:
        required = required_sample_size(
            ev.system, ev.chart.radius, ev.depth, eps
        )
        if len(sample.params) < required:
            raise UnderResolvedError(
                "sample too coarse for the density rule; increase m",
                required=required,
                have=len(sample.params),
            )
    positions = ev.positions(sample.params)
    return conflicts_from_positions(sample, positions, eps, depth=ev.depth)


@dataclass
class PackingSolution:
    indices: list
    log_total: float
    method: str
    spanning: bool = False  # greedy maximal packings double as spanning sets


@dataclass
class CoveringSolution:
    indices: list
    log_total: float
    method: str = "dp"


def greedy_max_separated(cs, log_weights):
    """Greedy packing: descending weight, ties broken by smallest parameter.

    The result is maximal, hence also an (n, eps) u-spanning set of the sample.
    """
    lw = np.asarray(log_weights, float)
    order = np.lexsort((np.arange(cs.m), -lw))
    picked = []
    for k in order:
        pos = bisect_left(picked, int(cs.conflict_lo[k]))
        if pos < len(picked) and picked[pos] <= cs.conflict_hi[k]:
            continue
        insort(picked, int(k))
    return PackingSolution(
        indices=picked,
        log_total=float(logsumexp(lw[picked])),
        method="greedy",
        spanning=True,
    )


def max_weight_separated_dp(cs, log_weights):
    """Exact maximum-weight (n, eps) u-separated subset of the sample.

    Weighted-interval DP over the sorted parameters; O(m) given the
    precomputed conflict ranges.
    """
    lw = np.asarray(log_weights, float)
    m = cs.m
    lo = cs.conflict_lo
    best = np.empty(m + 1)
    best[0] = NEG_INF
    take = np.zeros(m + 1, dtype=bool)
    for i in range(1, m + 1):
        cand = _lse2(lw[i - 1], best[lo[i - 1]])
        if cand > best[i - 1]:
            best[i] = cand
            take[i] = True
        else:
            best[i] = best[i - 1]
    indices = []
    i = m
    while i > 0:
        if take[i]:
            indices.append(i - 1)
            i = int(lo[i - 1])
        else:
            i -= 1
    indices.reverse()
    return PackingSolution(indices=indices, log_total=float(best[m]), method="dp")


def ball_sup_weights(cs, log_weights):
    """Per-point sup of g_n over its closed Bowen ball within the sample."""
    lw = np.asarray(log_weights, float)
    m = cs.m
    out = np.empty(m)
    deque_idx = []  # indices with decreasing lw
    head = 0
    hi_ptr = 0
    for i in range(m):
        while hi_ptr <= cs.cover_hi[i]:
            while deque_idx and head < len(deque_idx) and lw[deque_idx[-1]] <= lw[hi_ptr]:
                deque_idx.pop()
            deque_idx.append(hi_ptr)
            hi_ptr += 1
        while deque_idx[0] < cs.cover_lo[i]:
            deque_idx.pop(0)
        out[i] = lw[deque_idx[0]]
    return out


def _min_interval_cover(cover_lo, cover_hi, weights, m):
    """Minimum log-sum-exp weight cover of points 0..m-1 by index intervals.

    Candidate k covers the contiguous point range [cover_lo[k], cover_hi[k]].
    Returns (log_total, chosen candidate indices).  Lazy-deletion heap keeps
    the cheapest valid candidate per point; O((K + m) log K).
    """
    order = np.argsort(cover_lo, kind="stable")
    cost = np.empty(m + 1)
    cost[0] = NEG_INF
    choice = np.full(m + 1, -1, dtype=np.int64)
    heap = []
    ptr = 0
    K = len(order)
    for p in range(m):
        while ptr < K and cover_lo[order[ptr]] <= p:
            k = int(order[ptr])
            val = _lse2(float(weights[k]), float(cost[cover_lo[k]]))
            heapq.heappush(heap, (val, int(cover_hi[k]), k))
            ptr += 1
        while heap and heap[0][1] < p:
            heapq.heappop(heap)
        if not heap:
            raise UnsupportedStructureError(f"point {p} is coverable by no candidate")
        cost[p + 1] = heap[0][0]
        choice[p + 1] = heap[0][2]
    chosen = []
    p = m
    while p > 0:
        k = int(choice[p])
        chosen.append(k)
        p = int(cover_lo[k])
    chosen.reverse()
    return float(cost[m]), chosen


def min_weight_spanning_dp(cs, weights_sup):
    """Exact minimum-weight spanning cover: closed Bowen balls centered at
    sample points must cover every sample point."""
    log_total, chosen = _min_interval_cover(
        cs.cover_lo, cs.cover_hi, np.asarray(weights_sup, float), cs.m
    )
    return CoveringSolution(indices=chosen, log_total=log_total)


def brute_force_oracle(cs, log_weights, mode="packing"):
    """Exhaustive-enumeration optimum for validation; refuses m > 20."""
    m = cs.m
    if m > ORACLE_CAP:
        raise OracleRefusalError(f"brute force refuses m={m} > {ORACLE_CAP}")
    if mode not in ("packing", "covering"):
        raise ValueError("mode must be packing or covering")
    lw = np.asarray(log_weights, float)
    dist = np.max(
        np.abs(cs.positions[:, :, None] - cs.positions[:, None, :]), axis=0
    )
    masks = np.arange(1, 2**m, dtype=np.int64)
    chosen = ((masks[:, None] >> np.arange(m)) & 1).astype(float)
    shift = float(np.max(lw))
    # log-sum of selected weights via one matmul in the shifted linear domain
    totals = shift + np.log(chosen @ np.exp(lw - shift))
    if mode == "packing":
        feasible = np.ones(len(masks), dtype=bool)
        for i in range(m):
            for j in range(i + 1, m):
                if dist[i, j] < cs.epsilon - SEP_SLACK:
                    pair = (1 << i) | (1 << j)
                    feasible &= (masks & pair) != pair
        totals = np.where(feasible, totals, NEG_INF)
        k = int(np.argmax(totals))
        idx = [i for i in range(m) if (masks[k] >> i) & 1]
        return PackingSolution(indices=idx, log_total=float(totals[k]), method="brute")
    covers = dist <= cs.epsilon + SEP_SLACK  # covers[i, p]: ball i covers point p
    sup = np.where(covers, lw[None, :], NEG_INF).max(axis=1)
    shift = float(np.max(sup))
    ball_totals = shift + np.log(chosen @ np.exp(sup - shift))
    feasible = np.all(chosen @ covers > 0, axis=1)
    ball_totals = np.where(feasible, ball_totals, np.inf)
    k = int(np.argmin(ball_totals))
    idx = [i for i in range(m) if (masks[k] >> i) & 1]
    return CoveringSolution(indices=idx, log_total=float(ball_totals[k]), method="brute")


@dataclass
class PressureRow:
    n: int
    epsilon: float
    m: int
    log_packing: float
    log_spanning: float
    log_greedy: float
    packing_count: int
    spanning_count: int


@dataclass
class PressureTable:
    rows: list
    delta: float
    potential: str
    system: str = ""

    def rows_for_eps(self, eps):
        return sorted((r for r in self.rows if abs(r.epsilon - eps) < 1e-15), key=lambda r: r.n)

    @property
    def epsilons(self):
        return sorted({r.epsilon for r in self.rows}, reverse=True)


def finite_stage_row(sys, chart, G, n, eps, m=None, ev=None, sample=None):
    """One (n, eps) row: DP packing, DP spanning cover, greedy bracket."""
    if ev is None:
        ev = BowenDistanceEvaluator(sys, chart, depth=n)
    if m is None:
        m = required_sample_size(sys, chart.radius, n, eps)
    if m > SAMPLE_CAP:
        raise UnderResolvedError(
            "under-resolved: density rule wants m=%d samples at n=%d, "
            "eps=%g (cap %d); coarsen eps or lower n" % (m, n, eps, SAMPLE_CAP)
        )
    if sample is None or len(sample.params) < m:
        sample = sample_leaf(chart, m)
    cs = build_conflicts(ev, sample, eps)
    lw = np.asarray(G.log_gn_batch(sys, sample.points, n), float)
    packing = max_weight_separated_dp(cs, lw)
    greedy = greedy_max_separated(cs, lw)
    spanning = min_weight_spanning_dp(cs, ball_sup_weights(cs, lw))
    row = PressureRow(
        n=n,
        epsilon=eps,
        m=len(sample.params),
        log_packing=packing.log_total,
        log_spanning=spanning.log_total,
        log_greedy=greedy.log_total,
        packing_count=len(packing.indices),
        spanning_count=len(spanning.indices),
    )
    if not (
        row.log_spanning <= row.log_greedy + 1e-9
        and row.log_greedy <= row.log_packing + 1e-9
    ):
        raise AssertionError(f"bracket Q <= greedy <= P violated on row {row}")
    return row


def build_pressure_table(sys, chart, G, n_values, eps_values, jobs=1):
    """Rows over the (n, eps) grid; per-n Bowen data shared across eps."""
    rows = []
    for n in sorted(n_values):
        ev = BowenDistanceEvaluator(sys, chart, depth=n)
        for eps in sorted(eps_values, reverse=True):
            rows.append(finite_stage_row(sys, chart, G, n, eps, ev=ev))
    return PressureTable(
        rows=rows, delta=chart.radius, potential=G.describe(), system=type(sys).__name__
    )


@dataclass
class EstimateReport:
    estimate: float | None
    q_estimate: float | None
    per_eps: dict
    ok: bool
    diagnostics: dict = field(default_factory=dict)


def estimate_pressure(table, min_stages=4):
    """Growth-rate estimate per eps: median of successive log-differences over
    the largest stages (robust to the additive O(1) intercept)."""
    per_eps = {}
    ok = True
    for eps in table.epsilons:
        rows = table.rows_for_eps(eps)
        if len(rows) < min_stages:
            ok = False
            per_eps[eps] = {"estimate": None, "reason": "under-resolved"}
            continue
        logp = [r.log_packing for r in rows]
        logq = [r.log_spanning for r in rows]
        diffs_p = [b - a for a, b in zip(logp, logp[1:])]
        diffs_q = [b - a for a, b in zip(logq, logq[1:])]
        top = max(1, len(diffs_p) // 2)
        per_eps[eps] = {
            "estimate": float(median(diffs_p[-top:])),
            "q_estimate": float(median(diffs_q[-top:])),
            "diffs": diffs_p,
        }
    if not ok:
        return EstimateReport(
            estimate=None, q_estimate=None, per_eps=per_eps, ok=False,
            diagnostics={"reason": "under-resolved"},
        )
    smallest = min(per_eps)
    resolved = [per_eps[e]["estimate"] for e in sorted(per_eps, reverse=True)]
    monotone = all(b >= a - 0.02 for a, b in zip(resolved, resolved[1:]))
    return EstimateReport(
        estimate=per_eps[smallest]["estimate"],
        q_estimate=per_eps[smallest]["q_estimate"],
        per_eps=per_eps,
        ok=True,
        diagnostics={"eps_monotone_within_noise": monotone, "eps_trend": resolved},
    )


def pressure_estimate(sys, chart, G, n_values, eps_values, jobs=1):
    table = build_pressure_table(sys, chart, G, n_values, eps_values, jobs=jobs)
    return table, estimate_pressure(table)


# --- open-cover pressure (small n) -------------------------------------------


def _join_members(chart, open_cover, n, rate, cap=100_000):
    """Intervals of the join U_0^{n-1} on the leaf parameter line.

    The cover pattern is tiled with period 2*delta to extend over the
    pushed-forward range; level-i members pull back by the factor rate^i.
    """
    delta = chart.radius
    period = 2.0 * delta
    members = [(-delta, delta)]
    for i in range(n):
        factor = rate**i
        new = []
        for lo, hi in members:
            for a, b in open_cover:
                k_min = int(math.ceil((lo * factor - b) / period))
                k_max = int(math.floor((hi * factor - a) / period))
                for k in range(k_min, k_max + 1):
                    cut_lo = max(lo, (a + k * period) / factor)
                    cut_hi = min(hi, (b + k * period) / factor)
                    if cut_hi > cut_lo + 1e-15:
                        new.append((cut_lo, cut_hi))
            if len(new) > cap:
                raise JoinSizeError(f"cover join exceeds {cap} members at depth {i}")
        members = new
    return members


def cover_pressure_small(sys, chart, G, open_cover, n, m=None):
    """Exact minimal Borel-refinement sum for an open parameter cover at
    depth n, on the discretized leaf (linear charts only)."""
    if chart.kind != "exact-linear":
        raise UnsupportedStructureError("cover pressure is implemented for linear charts")
    if not open_cover:
        raise ValueError("open cover must be nonempty")
    delta = chart.radius
    pts = sorted(x for lo, hi in open_cover for x in (lo, hi))
    if open_cover and (min(lo for lo, _ in open_cover) > -delta or max(hi for _, hi in open_cover) < delta):
        raise ValueError("cover does not span [-delta, delta]")
    rate = sys.unstable_rate
    members = _join_members(chart, open_cover, n, rate)
    if m is None:
        width = min(hi - lo for lo, hi in open_cover)
        m = max(64, DENSITY_FACTOR * int(math.ceil(2 * delta * rate ** (n - 1) / width)))
    sample = sample_leaf(chart, m)
    params = sample.params
    lw = np.asarray(G.log_gn_batch(sys, sample.points, n), float)
    lo_idx, hi_idx, weights = [], [], []
    for lo, hi in members:
        p_lo = int(np.searchsorted(params, lo - 1e-12, side="left"))
        p_hi = int(np.searchsorted(params, hi + 1e-12, side="right")) - 1
        if p_hi < p_lo:
            continue
        lo_idx.append(p_lo)
        hi_idx.append(p_hi)
        weights.append(float(np.max(lw[p_lo : p_hi + 1])))
    log_total, _ = _min_interval_cover(
        np.asarray(lo_idx), np.asarray(hi_idx), np.asarray(weights), len(params)
    )
    return log_total


@dataclass
class CoverPressureReport:
    values: dict  # n -> log p_n
    subadd_defects: list  # (n, m, defect)
    max_defect: float
    fekete_bound: float


def cover_pressure_report(sys, chart, G, open_cover, n_max, m=None):
    """log p_n for n <= n_max with sub-additivity defects and Fekete bound."""
    values = {n: cover_pressure_small(sys, chart, G, open_cover, n, m=m) for n in range(1, n_max + 1)}
    defects = []
    for n in range(1, n_max):
        for k in range(1, n_max - n + 1):
            defects.append((n, k, values[n + k] - values[n] - values[k]))
    max_defect = max((d for _, _, d in defects), default=NEG_INF)
    fekete = min(values[n] / n for n in values)
    return CoverPressureReport(
        values=values, subadd_defects=defects, max_defect=max_defect, fekete_bound=fekete
    )


def additive_stage_pressure(sys, chart, G, n_stage, n_values, eps_values, jobs=1):
    """Pressure of the additive potential (log g_{n_stage}) / n_stage."""
    from .potentials import AdditiveBirkhoff

    if n_stage < 1:
        raise ValueError("n_stage must be >= 1")

    def phi(pts):
        return G.log_gn_batch(sys, np.atleast_2d(pts), n_stage) / n_stage

    stage_pot = AdditiveBirkhoff(phi=phi, name=f"stage{n_stage}({G.describe()})")
    table, report = pressure_estimate(sys, chart, stage_pot, n_values, eps_values, jobs=jobs)
    return table, report
