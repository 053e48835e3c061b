"""Exact solvers for all eight routing variants.

Single-robot variants run a bitmask dynamic program (Held-Karp and its
bottleneck, k-subset and cluster relatives). Multi-robot variants build a
table of optimal single-route costs per customer subset with the same
dynamic program, then search customer-to-robot partitions by branch and
bound.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    DistanceMatrix,
    ObjectiveKind,
    ObjectiveValue,
    ProblemInstance,
    Route,
    Solution,
    VariantKind,
    build_distance_matrix,
    evaluate,
)
from .heuristics import multirobot_incumbent

MAX_DP_NODES = 24
MAX_MULTIROBOT_NODES = 23
MAX_CLUSTERS = 20
DEFAULT_TIME_BUDGET = 600.0
_CHUNK = 1 << 17


class SolverCapacityError(ValueError):
    """The instance is larger than the exact dynamic program can hold."""


class SolverParameterError(ValueError):
    """A solver parameter (k, clusters, variant) is out of range."""


class CertificateStatus(str, enum.Enum):
    PROVEN_OPTIMAL = "PROVEN_OPTIMAL"
    BOUND_ONLY = "BOUND_ONLY"


@dataclass(frozen=True)
class OptimalCertificate:
    value: ObjectiveValue
    solution: Solution
    status: CertificateStatus
    lower_bound: float
    solve_time: float
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def proven(self) -> bool:
        return self.status is CertificateStatus.PROVEN_OPTIMAL

    def to_dict(self) -> dict:
        return {
            "value": self.value.value,
            "objective": self.value.kind.value,
            "routes": self.solution.to_lists(),
            "status": self.status.value,
            "lower_bound": self.lower_bound,
            "solve_time": self.solve_time,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OptimalCertificate":
        return cls(
            value=ObjectiveValue(float(data["value"]), ObjectiveKind(data["objective"])),
            solution=Solution.of(*data["routes"]),
            status=CertificateStatus(data["status"]),
            lower_bound=float(data["lower_bound"]),
            solve_time=float(data["solve_time"]),
        )


# ---------------------------------------------------------------------------
# Layered Held-Karp engine
# ---------------------------------------------------------------------------


def _popcounts(nbits: int) -> np.ndarray:
    masks = np.arange(1 << nbits, dtype=np.int64)
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(masks).astype(np.int8)
    pc = np.zeros(1 << nbits, dtype=np.int8)
    for b in range(nbits):
        pc += ((masks >> b) & 1).astype(np.int8)
    return pc


@dataclass
class _HKTables:
    """Per-layer Held-Karp state over subsets of ``nbits`` non-start nodes.

    ``masks[k]`` lists the subsets of size k (ascending); ``values[k][r, j]``
    is the best path value from the start through subset ``masks[k][r]``
    ending at node j; ``parents[k][r, j]`` the predecessor node (-1 = start).
    """

    nbits: int
    index: np.ndarray
    masks: dict[int, np.ndarray]
    values: dict[int, np.ndarray]
    parents: dict[int, np.ndarray]

    def path(self, mask: int, last: int) -> list[int]:
        out = []
        k = bin(mask).count("1")
        while k > 0:
            out.append(last)
            prev = int(self.parents[k][self.index[mask], last])
            mask ^= 1 << last
            last, k = prev, k - 1
        return out[::-1]


def _held_karp(
    start: np.ndarray,
    inner: np.ndarray,
    *,
    bottleneck: bool = False,
    max_size: int | None = None,
    allowed: np.ndarray | None = None,
    keep: str = "all",
    on_layer: Callable[[int, np.ndarray, np.ndarray], None] | None = None,
    deadline: float | None = None,
) -> _HKTables:
    """Run the subset DP.

    ``start[j]`` is the cost from the start node to node j and ``inner[i, j]``
    the cost between non-start nodes. ``allowed`` (boolean over all masks)
    restricts the DP to a downward-closed family. ``keep="all"`` retains every
    layer for path reconstruction; ``keep="last"`` keeps only the final one.
    ``on_layer(k, masks, values)`` sees each finished layer.
    """
    nb = len(start)
    max_size = nb if max_size is None else max_size
    pc = _popcounts(nb)
    index = np.full(1 << nb, -1, dtype=np.int32)
    combine = np.maximum if bottleneck else np.add
    t = _HKTables(nb, index, {}, {}, {})

    prev_vals = None
    for k in range(1, max_size + 1):
        sel = pc == k
        if allowed is not None:
            sel &= allowed
        masks = np.flatnonzero(sel).astype(np.int64)
        index[masks] = np.arange(len(masks), dtype=np.int32)
        vals = np.full((len(masks), nb), np.inf)
        par = np.full((len(masks), nb), -1, dtype=np.int8)
        for j in range(nb):
            rows = np.flatnonzero((masks >> j) & 1)
            if len(rows) == 0:
                continue
            if k == 1:
                vals[rows, j] = start[j]
                continue
            col = inner[:, j]
            for c0 in range(0, len(rows), _CHUNK):
                r = rows[c0 : c0 + _CHUNK]
                pi = index[masks[r] ^ (1 << j)]
                cand = combine(prev_vals[pi], col[None, :])
                arg = cand.argmin(axis=1)
                vals[r, j] = cand[np.arange(len(r)), arg]
                par[r, j] = arg
        if on_layer is not None:
            on_layer(k, masks, vals)
        t.masks[k], t.values[k] = masks, vals
        if keep == "all":
            t.parents[k] = par
        else:
            t.masks.pop(k - 1, None)
            t.values.pop(k - 1, None)
        prev_vals = vals
        if deadline is not None and time.monotonic() > deadline:
            raise _Timeout
        if len(masks) == 0:
            break
    return t


class _Timeout(Exception):
    pass


def _closing_best(vals: np.ndarray, masks: np.ndarray, back: np.ndarray, bottleneck: bool):
    """Best (value, last, mask) over a layer, ties to smallest (last, mask)."""
    total = np.maximum(vals, back[None, :]) if bottleneck else vals + back[None, :]
    best = total.min()
    rows, cols = np.nonzero(total == best)
    order = np.lexsort((masks[rows], cols))
    r, j = rows[order[0]], cols[order[0]]
    return float(best), int(j), int(masks[r])


def _local_order(dm: DistanceMatrix, depot: int, nodes: Sequence[int] | None = None):
    others = [i for i in (range(dm.n) if nodes is None else nodes) if i != depot]
    d = dm.d
    return others, d[depot, others], d[np.ix_(others, others)], d[others, depot]


def _check_depot(dm: DistanceMatrix, depot: int) -> None:
    if not 0 <= depot < dm.n:
        raise SolverParameterError(f"depot {depot} outside 0..{dm.n - 1}")
    if dm.n > MAX_DP_NODES:
        raise SolverCapacityError(
            f"n={dm.n} exceeds the exact DP budget of {MAX_DP_NODES} nodes; "
            "use routebench.heuristics for larger instances"
        )


def _single_tour(
    dm: DistanceMatrix, depot: int, *, bottleneck: bool, size: int | None = None
) -> tuple[float, list[int]]:
    others, start, inner, back = _local_order(dm, depot)
    if not others:
        return 0.0, [depot, depot]
    size = len(others) if size is None else size
    t = _held_karp(start, inner, bottleneck=bottleneck, max_size=size)
    value, last, mask = _closing_best(t.values[size], t.masks[size], back, bottleneck)
    tour = [depot] + [others[i] for i in t.path(mask, last)] + [depot]
    return value, tour


def _certificate(value: float, kind: ObjectiveKind, routes, t0: float) -> OptimalCertificate:
    return OptimalCertificate(
        value=ObjectiveValue(value, kind),
        solution=Solution(tuple(Route(tuple(r)) for r in routes)),
        status=CertificateStatus.PROVEN_OPTIMAL,
        lower_bound=value,
        solve_time=time.monotonic() - t0,
    )


def solve_tsp(dm: DistanceMatrix, depot: int = 0) -> OptimalCertificate:
    t0 = time.monotonic()
    _check_depot(dm, depot)
    value, tour = _single_tour(dm, depot, bottleneck=False)
    return _certificate(value, ObjectiveKind.SUM, [tour], t0)


def solve_btsp(dm: DistanceMatrix, depot: int = 0) -> OptimalCertificate:
    t0 = time.monotonic()
    _check_depot(dm, depot)
    value, tour = _single_tour(dm, depot, bottleneck=True)
    return _certificate(value, ObjectiveKind.BOTTLENECK, [tour], t0)


def solve_ktsp(dm: DistanceMatrix, depot: int, k: int) -> OptimalCertificate:
    """Shortest depot tour through exactly ``k`` locations, depot included."""
    t0 = time.monotonic()
    if not 1 < k <= dm.n:
        raise SolverParameterError(f"k must satisfy 1 < k <= n={dm.n}, got {k}")
    _check_depot(dm, depot)
    value, tour = _single_tour(dm, depot, bottleneck=False, size=k - 1)
    return _certificate(value, ObjectiveKind.SUM, [tour], t0)


def solve_gtsp(dm: DistanceMatrix, depot: int, clusters: Sequence[Sequence[int]]) -> OptimalCertificate:
    """Shortest depot tour taking exactly one member of each cluster."""
    t0 = time.monotonic()
    _check_depot(dm, depot)
    members = [i for c in clusters for i in c]
    if (
        any(len(c) == 0 for c in clusters)
        or len(members) != len(set(members))
        or set(members) != set(range(dm.n)) - {depot}
    ):
        raise SolverParameterError("clusters must partition the non-depot locations")
    nc = len(clusters)
    if nc > MAX_CLUSTERS:
        raise SolverCapacityError(f"{nc} clusters exceeds the budget of {MAX_CLUSTERS}")
    if nc == 0:
        return _certificate(0.0, ObjectiveKind.SUM, [[depot, depot]], t0)

    d = dm.d
    nodes = sorted(members)
    pos = {v: i for i, v in enumerate(nodes)}
    owner = np.empty(len(nodes), dtype=np.int64)
    for ci, c in enumerate(clusters):
        for v in c:
            owner[pos[v]] = ci
    inner = d[np.ix_(nodes, nodes)]
    full = (1 << nc) - 1
    pc = _popcounts(nc)
    vals = np.full((1 << nc, len(nodes)), np.inf)
    par = np.full((1 << nc, len(nodes)), -1, dtype=np.int16)
    for v in range(len(nodes)):
        vals[1 << owner[v], v] = d[depot, nodes[v]]
    all_masks = np.arange(1 << nc, dtype=np.int64)
    for size in range(2, nc + 1):
        layer = all_masks[pc == size]
        for v in range(len(nodes)):
            bit = 1 << int(owner[v])
            m = layer[(layer & bit) != 0]
            if len(m) == 0:
                continue
            cand = vals[m ^ bit] + inner[:, v][None, :]
            arg = cand.argmin(axis=1)
            vals[m, v] = cand[np.arange(len(m)), arg]
            par[m, v] = arg
    back = d[nodes, depot]
    total = vals[full] + back
    last = int(np.flatnonzero(total == total.min())[0])
    value = float(total[last])
    path, mask = [], full
    while last >= 0:
        path.append(nodes[last])
        prev = int(par[mask, last])
        mask ^= 1 << int(owner[last])
        last = prev
    return _certificate(value, ObjectiveKind.SUM, [[depot, *path[::-1], depot]], t0)


def _route_order(dm: DistanceMatrix, depot: int, members: Sequence[int]) -> list[int]:
    if not members:
        return [depot, depot]
    _, tour = _single_tour(dm.sub([depot, *members]), 0, bottleneck=False)
    local = [depot, *members]
    return [local[i] for i in tour]


# ---------------------------------------------------------------------------
# Multi-robot branch and bound
# ---------------------------------------------------------------------------


@dataclass
class _Search:
    """Mutable state of one branch-and-bound run."""

    objective: ObjectiveKind
    deadline: float
    tol: float
    best: float = math.inf
    best_routes: list[tuple[int, int]] | None = None
    nodes: int = 0
    timed_out: bool = False
    memo: dict = field(default_factory=dict)


def _route_tables(
    dm: DistanceMatrix,
    depot: int,
    cust: list[int],
    allowed: np.ndarray | None,
    deadline: float,
) -> np.ndarray:
    """Optimal closed-route cost from ``depot`` for every customer subset (inf if not allowed)."""
    nb = len(cust)
    table = np.full(1 << nb, np.inf)
    table[0] = 0.0
    start = dm.d[depot, cust]
    inner = dm.d[np.ix_(cust, cust)]
    back = dm.d[cust, depot]

    def close(k, masks, vals):
        table[masks] = (vals + back[None, :]).min(axis=1)

    _held_karp(start, inner, allowed=allowed, keep="last", on_layer=close, deadline=deadline)
    return table


def _submask_matrix(mask: int) -> np.ndarray:
    bits = [1 << b for b in range(mask.bit_length()) if mask >> b & 1]
    k = len(bits)
    sel = (np.arange(1 << k, dtype=np.int64)[:, None] >> np.arange(k)) & 1
    return sel @ np.array(bits, dtype=np.int64) if k else np.zeros(1, dtype=np.int64)


class _MultiRobotProblem:
    """Precomputed tables shared by every node of the partition search."""

    def __init__(self, instance: ProblemInstance, dm: DistanceMatrix, deadline: float):
        v = instance.variant
        self.instance = instance
        self.dm = dm
        self.kind = v.kind
        self.objective = v.kind.objective
        self.cust = list(instance.customers)
        nb = len(self.cust)
        self.nb = nb
        self.full = (1 << nb) - 1
        self.depots = list(v.depot_ids)
        self.robots = [v.route_depots().count(dep) for dep in self.depots]
        self.m = v.robots
        self.nonempty = v.kind is not VariantKind.CVRP
        self.cap = v.capacity
        self.slack = 1.0 if dm.integral else 0.0
        masks = np.arange(1 << nb, dtype=np.int64)
        self.pc = _popcounts(nb)

        self.load = None
        allowed = None
        if self.cap is not None:
            dem = np.array([instance.demands[c] for c in self.cust], dtype=np.int64)
            self.load = np.zeros(1 << nb, dtype=np.int64)
            for b in range(nb):
                self.load += ((masks >> b) & 1) * dem[b]
            allowed = self.load <= self.cap

        # Route-cost tables per depot, and for single-depot variants the
        # capacity-free table that bounds any set of routes covering a subset.
        self.tables = [_route_tables(dm, dep, self.cust, allowed, deadline) for dep in self.depots]
        if allowed is None:
            self.merge_tables = self.tables
        else:
            self.merge_tables = [_route_tables(dm, dep, self.cust, None, deadline) for dep in self.depots]

        # Per-customer share: least cost-per-customer over routes containing it.
        share = np.full(nb, np.inf)
        for table in self.tables:
            finite = np.flatnonzero(np.isfinite(table))
            finite = finite[finite != 0]
            ratio = table[finite] / self.pc[finite]
            for b in range(nb):
                has = ((finite >> b) & 1).astype(bool)
                share[b] = min(share[b], ratio[has].min())
        self.share = share
        self.share_sum = np.zeros(1 << nb)
        for b in range(nb):
            self.share_sum += ((masks >> b) & 1) * share[b]
        out_back = [min(dm.d[dep, c] + dm.d[c, dep] for dep in self.depots) for c in self.cust]
        # Longest forced out-and-back among a subset's customers.
        self.far = np.zeros(1 << nb)
        for b in range(nb):
            self.far = np.where((masks >> b) & 1, np.maximum(self.far, out_back[b]), self.far)

        # Candidate routes grouped by lowest customer, sorted by (cost, mask).
        self.cands: list[list[tuple[np.ndarray, np.ndarray]]] = []
        low = np.full(1 << nb, -1, dtype=np.int64)
        nz = masks[1:]
        low[1:] = np.log2(nz & -nz).astype(np.int64)
        for table in self.tables:
            per_low = []
            finite = np.flatnonzero(np.isfinite(table))
            finite = finite[finite != 0]
            for b in range(nb):
                ms = finite[low[finite] == b]
                cs = table[ms]
                order = np.lexsort((ms, cs))
                per_low.append((ms[order], cs[order]))
            self.cands.append(per_low)
        self._pair_cache: dict[int, float] = {}

    # -- bounds ---------------------------------------------------------------

    def sum_bound(self, rest: int, robots_left: int) -> float:
        """Lower bound on the summed cost of covering ``rest`` with the robots left."""
        if rest == 0:
            return 0.0
        lb = float(self.share_sum[rest])
        k = min(robots_left, int(self.pc[rest]))
        if len(self.depots) == 1:
            merged = float(self.merge_tables[0][rest]) - (k - 1) * self.slack
        else:
            merged = self._two_depot_bound(rest, k)
        return max(lb, merged)

    def _two_depot_bound(self, rest: int, k: int) -> float:
        hit = self._pair_cache.get(rest)
        if hit is None:
            subs = _submask_matrix(rest)
            t0, t1 = self.merge_tables
            hit = float((t0[subs] + t1[rest & ~subs]).min())
            if len(self._pair_cache) < 2_000_000:
                self._pair_cache[rest] = hit
        return hit - max(k - 2, 0) * self.slack

    def sum_bounds(self, rests: np.ndarray, robots_left: int) -> np.ndarray:
        lb = self.share_sum[rests]
        if len(self.depots) == 1:
            k = np.minimum(robots_left, self.pc[rests]).astype(float)
            merged = self.merge_tables[0][rests] - np.maximum(k - 1, 0) * self.slack
            lb = np.maximum(lb, merged)
        lb[rests == 0] = 0.0
        return lb



def _search(
    p: _MultiRobotProblem,
    s: _Search,
    rest: int,
    robots: tuple[int, ...],
    g_sum: float,
    g_max: float,
    chosen: list[tuple[int, int]],
) -> None:
    s.nodes += 1
    if s.nodes & 0x3FF == 0 and time.monotonic() > s.deadline:
        s.timed_out = True
    if s.timed_out:
        return
    minmax = p.objective is ObjectiveKind.MINMAX
    left = sum(robots)
    if rest == 0:
        if p.nonempty and left:
            return
        val = g_max if minmax else g_sum
        if val < s.best - s.tol:
            s.best, s.best_routes = val, list(chosen)
        return
    if left == 0:
        return

    key = (rest, robots)
    entry_best = s.best
    if not minmax:
        memo = s.memo.get(key)
        if memo is not None and g_sum + memo >= s.best - s.tol:
            return
        if len(p.depots) > 1 and g_sum + p.sum_bound(rest, left) >= s.best - s.tol:
            return

    low = (rest & -rest).bit_length() - 1
    options = []
    for di, r in enumerate(robots):
        if r == 0:
            continue
        ms, cs = p.cands[di][low]
        fit = (ms & ~rest) == 0
        ms, cs = ms[fit], cs[fit]
        rests = rest & ~ms
        left_after = left - 1
        ok = np.ones(len(ms), dtype=bool)
        if p.nonempty:
            ok &= p.pc[rests] >= left_after
        if p.load is not None:
            ok &= p.load[rests] <= left_after * p.cap
        if left_after == 0:
            ok &= rests == 0
        ms, cs, rests = ms[ok], cs[ok], rests[ok]
        if len(ms) == 0:
            continue
        sums = g_sum + cs + p.sum_bounds(rests, left_after)
        if minmax:
            bound = np.maximum.reduce([np.full(len(ms), g_max), cs, p.far[rests], sums / p.m])
        else:
            bound = sums
        keep = bound < s.best - s.tol
        for m_, c_, b_ in zip(ms[keep], cs[keep], bound[keep]):
            options.append((float(b_), float(c_), int(m_), di))
    options.sort()

    for bound, cost, mask, di in options:
        if bound >= s.best - s.tol or s.timed_out:
            break
        nxt = list(robots)
        nxt[di] -= 1
        chosen.append((di, mask))
        _search(p, s, rest & ~mask, tuple(nxt), g_sum + cost, max(g_max, cost), chosen)
        chosen.pop()

    if not minmax and not s.timed_out:
        if s.best < entry_best:
            s.memo[key] = s.best - g_sum
        else:
            prev = s.memo.get(key, -math.inf)
            s.memo[key] = max(prev, entry_best - g_sum)


def _routes_to_masks(p: _MultiRobotProblem, sol: Solution) -> list[tuple[int, int]]:
    pos = {c: b for b, c in enumerate(p.cust)}
    out = []
    for route, dep in zip(sol.routes, p.instance.variant.route_depots()):
        mask = 0
        for c in route.interior:
            mask |= 1 << pos[c]
        out.append((p.depots.index(dep), mask))
    return out


def _assemble(p: _MultiRobotProblem, picks: list[tuple[int, int]]) -> Solution:
    """Turn (depot index, customer mask) picks into ordered routes, one per robot."""
    by_depot: dict[int, list[int]] = {di: [] for di in range(len(p.depots))}
    for di, mask in picks:
        if mask:
            by_depot[di].append(mask)
    routes = []
    for dep in p.instance.variant.route_depots():
        di = p.depots.index(dep)
        if by_depot[di]:
            mask = min(by_depot[di])
            by_depot[di].remove(mask)
            members = [p.cust[b] for b in range(p.nb) if mask >> b & 1]
            routes.append(Route(tuple(_route_order(p.dm, dep, members))))
        else:
            routes.append(Route((dep, dep)))
    return Solution(tuple(routes))


def _root_bound(p: _MultiRobotProblem) -> float:
    sum_lb = p.sum_bound(p.full, p.m)
    if p.objective is ObjectiveKind.MINMAX:
        return max(float(p.far[p.full]), sum_lb / p.m)
    return sum_lb


def solve_multirobot(
    instance: ProblemInstance,
    time_budget: float = DEFAULT_TIME_BUDGET,
    dm: DistanceMatrix | None = None,
) -> OptimalCertificate:
    """Optimal routes for MTSP, MINMAX_MTSP, MD_MTSP or CVRP.

    Returns BOUND_ONLY with the best incumbent and a valid lower bound if the
    wall-clock budget runs out first.
    """
    t0 = time.monotonic()
    v = instance.variant
    if not v.kind.multi_robot:
        raise SolverParameterError(f"{v.kind.value} is not a multi-robot variant")
    if instance.n > MAX_MULTIROBOT_NODES:
        raise SolverCapacityError(
            f"n={instance.n} exceeds the multi-robot budget of {MAX_MULTIROBOT_NODES}"
        )
    dm = dm if dm is not None else build_distance_matrix(instance)
    objective = v.kind.objective
    deadline = t0 + time_budget

    incumbent = multirobot_incumbent(instance, dm)
    inc_value = evaluate(instance, incumbent, dm).value if incumbent is not None else math.inf

    try:
        p = _MultiRobotProblem(instance, dm, deadline)
    except _Timeout:
        return _bound_only(instance, dm, incumbent, inc_value, 0.0, t0, {"phase": "tables"})

    s = _Search(objective, deadline, tol=dm.tolerance(inc_value if math.isfinite(inc_value) else 1.0))
    if incumbent is not None:
        s.best = inc_value
        s.best_routes = _routes_to_masks(p, incumbent)
    root_lb = _root_bound(p)
    _search(p, s, p.full, tuple(p.robots), 0.0, 0.0, [])
    stats = {"nodes": s.nodes}

    if s.best_routes is None:
        if s.timed_out:
            return _bound_only(instance, dm, None, math.inf, root_lb, t0, stats)
        raise SolverParameterError(f"{instance.name}: no feasible solution exists")
    solution = incumbent if s.best == inc_value and incumbent is not None else _assemble(p, s.best_routes)
    value = evaluate(instance, solution, dm).value
    if s.timed_out:
        return _bound_only(instance, dm, solution, value, root_lb, t0, stats)
    return OptimalCertificate(
        value=ObjectiveValue(value, objective),
        solution=solution,
        status=CertificateStatus.PROVEN_OPTIMAL,
        lower_bound=value,
        solve_time=time.monotonic() - t0,
        stats=stats,
    )


def _bound_only(instance, dm, solution, value, lower, t0, stats) -> OptimalCertificate:
    if solution is None:
        solution = Solution(tuple(Route((d, d)) for d in instance.variant.route_depots()))
    return OptimalCertificate(
        value=ObjectiveValue(value, instance.kind.objective),
        solution=solution,
        status=CertificateStatus.BOUND_ONLY,
        lower_bound=min(lower, value),
        solve_time=time.monotonic() - t0,
        stats=stats,
    )


def solve(instance: ProblemInstance, time_budget: float = DEFAULT_TIME_BUDGET) -> OptimalCertificate:
    """Dispatch to the exact solver for the instance's variant."""
    dm = build_distance_matrix(instance)
    v = instance.variant
    if v.kind is VariantKind.TSP:
        return solve_tsp(dm, v.depot)
    if v.kind is VariantKind.BTSP:
        return solve_btsp(dm, v.depot)
    if v.kind is VariantKind.KTSP:
        return solve_ktsp(dm, v.depot, v.k)
    if v.kind is VariantKind.GTSP:
        return solve_gtsp(dm, v.depot, v.clusters)
    return solve_multirobot(instance, time_budget=time_budget, dm=dm)


__all__ = [
    "CertificateStatus",
    "OptimalCertificate",
    "SolverCapacityError",
    "SolverParameterError",
    "solve",
    "solve_btsp",
    "solve_gtsp",
    "solve_ktsp",
    "solve_multirobot",
    "solve_tsp",
]
