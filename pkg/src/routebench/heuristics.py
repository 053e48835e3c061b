"""Constructive and local-search heuristics.

These give cheap feasible routes. The exact multi-robot search uses them as
its first incumbent, and reports use them as sanity baselines.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import (
    DistanceMatrix,
    ProblemInstance,
    Route,
    Solution,
    VariantKind,
    build_distance_matrix,
    route_length,
)


def nearest_neighbor(dm: DistanceMatrix, depot: int = 0, nodes: Sequence[int] | None = None) -> Solution:
    """Greedy tour from ``depot`` through ``nodes`` (default: every location).

    Ties go to the smallest id.
    """
    todo = set(range(dm.n) if nodes is None else nodes) - {depot}
    tour = [depot]
    while todo:
        here = tour[-1]
        nxt = min(todo, key=lambda j: (dm.d[here, j], j))
        tour.append(nxt)
        todo.remove(nxt)
    tour.append(depot)
    return Solution((Route(tuple(tour)),))


def _two_opt_tour(d: np.ndarray, tour: list[int]) -> list[int]:
    tour = list(tour)
    n = len(tour)
    while True:
        best_delta, best_ij = 0.0, None
        for i in range(n - 3):
            a, b = tour[i], tour[i + 1]
            for j in range(i + 2, n - 1):
                c, e = tour[j], tour[j + 1]
                delta = d[a, c] + d[b, e] - d[a, b] - d[c, e]
                if delta < best_delta - 1e-12:
                    best_delta, best_ij = delta, (i, j)
        if best_ij is None:
            return tour
        i, j = best_ij
        tour[i + 1 : j + 1] = reversed(tour[i + 1 : j + 1])


def two_opt(dm: DistanceMatrix, solution: Solution) -> Solution:
    """Best-improvement 2-opt applied to every route until no exchange improves."""
    routes = tuple(Route(tuple(_two_opt_tour(dm.d, list(r.visits)))) for r in solution.routes)
    return Solution(routes)


def savings_cvrp(instance: ProblemInstance, dm: DistanceMatrix | None = None) -> Solution:
    """Clarke-Wright parallel savings for a CVRP instance.

    The result always respects capacity. If more routes are needed than the
    fleet has robots, the smallest routes are merged while capacity allows;
    when that fails the solution keeps the extra routes and is only useful as
    a cost bound (it will not verify).
    """
    v = instance.variant
    if v.kind is not VariantKind.CVRP:
        raise ValueError("savings_cvrp needs a CVRP instance")
    dm = dm if dm is not None else build_distance_matrix(instance)
    d, depot, cap = dm.d, v.depot, v.capacity
    dem = instance.demands
    routes: dict[int, list[int]] = {c: [c] for c in instance.customers}
    owner = {c: c for c in instance.customers}
    load = {c: dem[c] for c in instance.customers}

    savings = []
    cust = instance.customers
    for a in range(len(cust)):
        for b in range(a + 1, len(cust)):
            i, j = cust[a], cust[b]
            savings.append((-(d[depot, i] + d[depot, j] - d[i, j]), i, j))
    savings.sort()
    for neg, i, j in savings:
        if neg >= 0:
            break
        ri, rj = owner[i], owner[j]
        if ri == rj or load[ri] + load[rj] > cap:
            continue
        pi, pj = routes[ri], routes[rj]
        if pi[-1] == i and pj[0] == j:
            merged = pi + pj
        elif pi[0] == i and pj[-1] == j:
            merged = pj + pi
        elif pi[0] == i and pj[0] == j:
            merged = pi[::-1] + pj
        elif pi[-1] == i and pj[-1] == j:
            merged = pi + pj[::-1]
        else:
            continue
        routes[ri] = merged
        load[ri] += load.pop(rj)
        del routes[rj]
        for c in pj:
            owner[c] = ri

    paths = [routes[k] for k in sorted(routes)]
    m = v.robots
    while len(paths) > m:
        paths.sort(key=lambda p: (sum(dem[c] for c in p), p))
        merged = False
        for a in range(len(paths)):
            for b in range(a + 1, len(paths)):
                if sum(dem[c] for c in paths[a] + paths[b]) <= cap:
                    pa, pb = paths[a], paths[b]
                    options = [pa + pb, pa + pb[::-1], pa[::-1] + pb, pb + pa]
                    best = min(options, key=lambda p: (route_length(dm, [depot, *p, depot]), p))
                    paths = [p for k, p in enumerate(paths) if k not in (a, b)] + [best]
                    merged = True
                    break
            if merged:
                break
        if not merged:
            break
    paths.sort(key=lambda p: p[0])
    out = [Route((depot, *p, depot)) for p in paths]
    out += [Route((depot, depot))] * (m - len(out))
    return Solution(tuple(out))


def _split_tour(d: np.ndarray, depot: int, order: list[int], parts: int, minmax: bool) -> list[list[int]]:
    """Optimally cut a customer sequence into ``parts`` nonempty consecutive routes."""
    n = len(order)
    inf = float("inf")

    def seg(i: int, j: int) -> float:
        p = order[i:j]
        return d[depot, p[0]] + sum(d[a, b] for a, b in zip(p, p[1:])) + d[p[-1], depot]

    best = [[inf] * (n + 1) for _ in range(parts + 1)]
    cut = [[0] * (n + 1) for _ in range(parts + 1)]
    best[0][0] = 0.0
    for k in range(1, parts + 1):
        for j in range(k, n + 1):
            for i in range(k - 1, j):
                if best[k - 1][i] == inf:
                    continue
                s = seg(i, j)
                val = max(best[k - 1][i], s) if minmax else best[k - 1][i] + s
                if val < best[k][j]:
                    best[k][j], cut[k][j] = val, i
    out, j = [], n
    for k in range(parts, 0, -1):
        i = cut[k][j]
        out.append(order[i:j])
        j = i
    return out[::-1]


def multirobot_incumbent(instance: ProblemInstance, dm: DistanceMatrix | None = None) -> Solution | None:
    """A feasible starting solution for any multi-robot variant, or None."""
    v = instance.variant
    dm = dm if dm is not None else build_distance_matrix(instance)
    if v.kind is VariantKind.CVRP:
        sol = savings_cvrp(instance, dm)
        return two_opt(dm, sol) if len(sol.routes) == v.robots else None
    cust = list(instance.customers)
    if v.kind in (VariantKind.MTSP, VariantKind.MINMAX_MTSP):
        if len(cust) < v.robots:
            return None
        tour = two_opt(dm, nearest_neighbor(dm, v.depot, cust)).routes[0].interior
        parts = _split_tour(dm.d, v.depot, list(tour), v.robots, v.kind is VariantKind.MINMAX_MTSP)
        return two_opt(dm, Solution(tuple(Route((v.depot, *p, v.depot)) for p in parts)))

    # MD_MTSP: nearest-depot assignment, then top up depots short of customers.
    robots = {dep: v.robot_depots.count(dep) for dep in v.depot_ids}
    if len(cust) < v.robots:
        return None
    groups: dict[int, list[int]] = {dep: [] for dep in v.depot_ids}
    for c in cust:
        groups[min(v.depot_ids, key=lambda dep: (dm.d[dep, c], dep))].append(c)
    for dep in v.depot_ids:
        while len(groups[dep]) < robots[dep]:
            donor = max(
                (o for o in v.depot_ids if len(groups[o]) > robots[o]),
                key=lambda o: len(groups[o]) - robots[o],
            )
            c = min(groups[donor], key=lambda c: (dm.d[dep, c], c))
            groups[donor].remove(c)
            groups[dep].append(c)
    per_depot: dict[int, list[list[int]]] = {}
    for dep in v.depot_ids:
        tour = two_opt(dm, nearest_neighbor(dm, dep, groups[dep])).routes[0].interior
        per_depot[dep] = _split_tour(dm.d, dep, list(tour), robots[dep], minmax=False)
    routes = [Route((dep, *per_depot[dep].pop(0), dep)) for dep in v.robot_depots]
    return two_opt(dm, Solution(tuple(routes)))


__all__ = ["multirobot_incumbent", "nearest_neighbor", "savings_cvrp", "two_opt"]
