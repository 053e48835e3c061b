"""Ground-truth feasibility checks for all eight variants."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .core import ProblemInstance, Solution, VariantKind

ROUTE_COUNT = "ROUTE_COUNT"
ENDPOINT = "ENDPOINT"
COVERAGE = "COVERAGE"
DEPOT_INTERIOR = "DEPOT_INTERIOR"
CAPACITY = "CAPACITY"
EMPTY_ROUTE = "EMPTY_ROUTE"
UNKNOWN_ID = "UNKNOWN_ID"
ROUTE_LENGTH = "ROUTE_LENGTH"

# Variants whose robots must each visit at least one location.
NONEMPTY_DEFAULT = {
    VariantKind.MTSP: True,
    VariantKind.MINMAX_MTSP: True,
    VariantKind.MD_MTSP: True,
    VariantKind.CVRP: False,
}


@dataclass(frozen=True)
class Violation:
    constraint: str
    detail: str


@dataclass(frozen=True)
class VerdictReport:
    violations: tuple[Violation, ...] = ()

    @property
    def feasible(self) -> bool:
        return not self.violations

    def constraints(self) -> set[str]:
        return {v.constraint for v in self.violations}

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "violations": [[v.constraint, v.detail] for v in self.violations],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VerdictReport":
        return cls(tuple(Violation(c, d) for c, d in data["violations"]))


def check_feasible(
    instance: ProblemInstance,
    solution: Solution,
    require_nonempty: bool | None = None,
) -> VerdictReport:
    """Check every constraint of the instance's variant and report all violations.

    ``require_nonempty`` overrides the per-variant default for whether each
    robot must visit at least one location.
    """
    v = instance.variant
    kind = v.kind
    out: list[Violation] = []

    def bad(cid: str, detail: str) -> None:
        out.append(Violation(cid, detail))

    expected_depots = v.route_depots()
    if len(solution.routes) != len(expected_depots):
        bad(ROUTE_COUNT, f"expected {len(expected_depots)} route(s), got {len(solution.routes)}")

    depots = set(v.depot_ids)
    visits: Counter[int] = Counter()
    for r, route in enumerate(solution.routes):
        seq = route.visits
        unknown = [i for i in seq if not 0 <= i < instance.n]
        if unknown:
            bad(UNKNOWN_ID, f"route {r} references unknown id(s) {sorted(set(unknown))}")
        if len(seq) < 2:
            bad(ROUTE_LENGTH, f"route {r} must list at least its start and end depot")
            continue
        want = expected_depots[r] if r < len(expected_depots) else None
        if seq[0] not in depots or seq[-1] not in depots:
            bad(ENDPOINT, f"route {r} must start and end at a depot, got {seq[0]}..{seq[-1]}")
        elif seq[0] != seq[-1]:
            bad(ENDPOINT, f"route {r} starts at depot {seq[0]} but ends at {seq[-1]}")
        elif want is not None and seq[0] != want:
            bad(ENDPOINT, f"route {r} belongs to depot {want}, not {seq[0]}")
        interior = seq[1:-1]
        stray = [i for i in interior if i in depots]
        if stray:
            bad(DEPOT_INTERIOR, f"route {r} passes through depot(s) {stray} mid-route")
        customers = [i for i in interior if i not in depots and 0 <= i < instance.n]
        visits.update(customers)
        if kind.multi_robot:
            nonempty = NONEMPTY_DEFAULT[kind] if require_nonempty is None else require_nonempty
            if nonempty and not interior:
                bad(EMPTY_ROUTE, f"robot {r} visits no location")
        if kind is VariantKind.CVRP:
            load = sum(instance.locations[i].demand for i in customers)
            if load > v.capacity:
                bad(CAPACITY, f"route {r} serves demand {load} > capacity {v.capacity}")

    repeated = sorted(i for i, c in visits.items() if c > 1)
    if repeated:
        bad(COVERAGE, f"location(s) {repeated} visited more than once")
    all_customers = set(instance.customers)
    if kind is VariantKind.KTSP:
        count = len(visits) + 1
        if count != v.k:
            bad(COVERAGE, f"tour visits {count} locations including the depot, expected k={v.k}")
    elif kind is VariantKind.GTSP:
        for c, members in enumerate(v.clusters):
            hit = [i for i in members if i in visits]
            if len(hit) != 1:
                bad(COVERAGE, f"cluster {c} visited {len(hit)} times ({hit}), expected exactly once")
    else:
        missing = sorted(all_customers - set(visits))
        if missing:
            bad(COVERAGE, f"location(s) {missing} never visited")
    return VerdictReport(tuple(out))


__all__ = ["VerdictReport", "Violation", "check_feasible"]
