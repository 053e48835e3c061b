"""Shared routing types: locations, variants, instances, distances, solutions."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class VariantKind(str, enum.Enum):
    TSP = "TSP"
    BTSP = "BTSP"
    KTSP = "KTSP"
    GTSP = "GTSP"
    MTSP = "MTSP"
    MINMAX_MTSP = "MINMAX_MTSP"
    MD_MTSP = "MD_MTSP"
    CVRP = "CVRP"

    @property
    def multi_robot(self) -> bool:
        return self in MULTI_ROBOT_KINDS

    @property
    def objective(self) -> "ObjectiveKind":
        if self is VariantKind.BTSP:
            return ObjectiveKind.BOTTLENECK
        if self is VariantKind.MINMAX_MTSP:
            return ObjectiveKind.MINMAX
        return ObjectiveKind.SUM


SINGLE_ROBOT_KINDS = (VariantKind.TSP, VariantKind.BTSP, VariantKind.KTSP, VariantKind.GTSP)
MULTI_ROBOT_KINDS = (
    VariantKind.MTSP,
    VariantKind.MINMAX_MTSP,
    VariantKind.MD_MTSP,
    VariantKind.CVRP,
)


class ObjectiveKind(str, enum.Enum):
    SUM = "SUM"
    BOTTLENECK = "BOTTLENECK"
    MINMAX = "MINMAX"


class Metric(str, enum.Enum):
    EXACT_EUCLIDEAN = "EXACT_EUCLIDEAN"
    TSPLIB_ROUNDED = "TSPLIB_ROUNDED"


class InstanceError(ValueError):
    """An instance or variant violates its structural invariants."""


class EvaluationError(ValueError):
    """A solution cannot be scored because its structure does not fit the variant."""


@dataclass(frozen=True)
class Location:
    id: int
    x: float
    y: float
    demand: int = 0


@dataclass(frozen=True)
class VariantSpec:
    kind: VariantKind
    depot_ids: tuple[int, ...] = (0,)
    k: int | None = None
    clusters: tuple[tuple[int, ...], ...] | None = None
    num_robots: int | None = None
    capacity: int | None = None
    # MD_MTSP only: depot id of each robot, in robot order.
    robot_depots: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", VariantKind(self.kind))
        object.__setattr__(self, "depot_ids", tuple(self.depot_ids))
        if self.clusters is not None:
            object.__setattr__(self, "clusters", tuple(tuple(c) for c in self.clusters))
        if self.robot_depots is not None:
            object.__setattr__(self, "robot_depots", tuple(self.robot_depots))
        self._check_parameters()

    def _check_parameters(self) -> None:
        kind = self.kind
        wants = {
            "k": kind is VariantKind.KTSP,
            "clusters": kind is VariantKind.GTSP,
            "num_robots": kind.multi_robot,
            "capacity": kind is VariantKind.CVRP,
            "robot_depots": kind is VariantKind.MD_MTSP,
        }
        for name, wanted in wants.items():
            present = getattr(self, name) is not None
            if present != wanted:
                state = "requires" if wanted else "does not take"
                raise InstanceError(f"{kind.value} {state} parameter {name!r}")
        if not self.depot_ids:
            raise InstanceError("depot_ids must be nonempty")
        if len(set(self.depot_ids)) != len(self.depot_ids):
            raise InstanceError("depot_ids contains duplicates")
        if self.num_robots is not None and self.num_robots < 1:
            raise InstanceError("num_robots must be >= 1")
        if self.capacity is not None and self.capacity <= 0:
            raise InstanceError("capacity must be positive")
        if kind is VariantKind.MD_MTSP:
            if not 1 <= len(self.depot_ids) <= self.num_robots:
                raise InstanceError("MD_MTSP needs 1 <= depots <= robots")
            if len(self.robot_depots) != self.num_robots:
                raise InstanceError("robot_depots must list one depot per robot")
            if not set(self.robot_depots) <= set(self.depot_ids):
                raise InstanceError("robot_depots references a non-depot id")
            if set(self.robot_depots) != set(self.depot_ids):
                raise InstanceError("every depot must host at least one robot")
        elif len(self.depot_ids) != 1:
            raise InstanceError(f"{kind.value} takes exactly one depot")

    @property
    def depot(self) -> int:
        return self.depot_ids[0]

    @property
    def robots(self) -> int:
        return self.num_robots or 1

    def route_depots(self) -> tuple[int, ...]:
        """Depot each route must start and end at, one entry per route."""
        if self.robot_depots is not None:
            return self.robot_depots
        return (self.depot,) * self.robots


@dataclass(frozen=True)
class ProblemInstance:
    name: str
    variant: VariantSpec
    locations: tuple[Location, ...]
    metric: Metric = Metric.EXACT_EUCLIDEAN
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "metric", Metric(self.metric))
        self.validate()

    def validate(self) -> None:
        n = len(self.locations)
        if n < 2:
            raise InstanceError("an instance needs at least 2 locations")
        if [loc.id for loc in self.locations] != list(range(n)):
            raise InstanceError("location ids must be unique and contiguous from 0")
        for loc in self.locations:
            if loc.demand < 0:
                raise InstanceError(f"location {loc.id} has negative demand")
        v = self.variant
        for d in v.depot_ids:
            if not 0 <= d < n:
                raise InstanceError(f"depot id {d} does not exist")
            if self.locations[d].demand != 0:
                raise InstanceError(f"depot {d} must have zero demand")
        if v.kind is not VariantKind.CVRP and any(loc.demand for loc in self.locations):
            raise InstanceError("only CVRP instances carry demands")
        if v.k is not None and not 1 < v.k <= n:
            raise InstanceError(f"k must satisfy 1 < k <= n, got k={v.k}, n={n}")
        if v.clusters is not None:
            members = [i for c in v.clusters for i in c]
            if any(len(c) == 0 for c in v.clusters):
                raise InstanceError("GTSP clusters must be nonempty")
            if len(members) != len(set(members)):
                raise InstanceError("GTSP clusters overlap")
            if set(members) != set(self.customers):
                raise InstanceError("GTSP clusters must cover exactly the non-depot ids")

    @property
    def n(self) -> int:
        return len(self.locations)

    @property
    def kind(self) -> VariantKind:
        return self.variant.kind

    @property
    def customers(self) -> tuple[int, ...]:
        depots = set(self.variant.depot_ids)
        return tuple(loc.id for loc in self.locations if loc.id not in depots)

    @property
    def demands(self) -> tuple[int, ...]:
        return tuple(loc.demand for loc in self.locations)

    def coords(self) -> np.ndarray:
        return np.array([(loc.x, loc.y) for loc in self.locations], dtype=float)


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    d: np.ndarray
    integral: bool = False

    def __post_init__(self) -> None:
        arr = np.array(self.d, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "d", arr)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __getitem__(self, ij: tuple[int, int]) -> float:
        return float(self.d[ij])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return self.integral == other.integral and np.array_equal(self.d, other.d)

    def sub(self, ids: Sequence[int]) -> "DistanceMatrix":
        idx = np.asarray(ids, dtype=int)
        return DistanceMatrix(self.d[np.ix_(idx, idx)], self.integral)

    def tolerance(self, value: float) -> float:
        """Absolute slack allowed when comparing objective values on this metric."""
        return 0.0 if self.integral else 1e-9 * max(1.0, abs(value))


@dataclass(frozen=True)
class Route:
    visits: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "visits", tuple(int(v) for v in self.visits))

    def hops(self) -> Iterable[tuple[int, int]]:
        return zip(self.visits, self.visits[1:])

    @property
    def interior(self) -> tuple[int, ...]:
        return self.visits[1:-1]


@dataclass(frozen=True)
class Solution:
    routes: tuple[Route, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "routes",
            tuple(r if isinstance(r, Route) else Route(tuple(r)) for r in self.routes),
        )

    @classmethod
    def of(cls, *routes: Sequence[int]) -> "Solution":
        return cls(tuple(Route(tuple(r)) for r in routes))

    def to_lists(self) -> list[list[int]]:
        return [list(r.visits) for r in self.routes]


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    kind: ObjectiveKind


def _nint(x: np.ndarray) -> np.ndarray:
    # TSPLIB nint: round half up, not numpy's banker's rounding.
    return np.floor(x + 0.5)


def build_distance_matrix(instance: ProblemInstance) -> DistanceMatrix:
    xy = instance.coords()
    diff = xy[:, None, :] - xy[None, :, :]
    d = np.sqrt((diff**2).sum(axis=-1))
    if instance.metric is Metric.TSPLIB_ROUNDED:
        return DistanceMatrix(_nint(d), integral=True)
    d = np.triu(d, 1)
    return DistanceMatrix(d + d.T)


def route_length(dm: DistanceMatrix, visits: Sequence[int]) -> float:
    return float(sum(dm.d[a, b] for a, b in zip(visits, visits[1:])))


def route_bottleneck(dm: DistanceMatrix, visits: Sequence[int]) -> float:
    return float(max((dm.d[a, b] for a, b in zip(visits, visits[1:])), default=0.0))


def check_structure(instance: ProblemInstance, solution: Solution) -> list[str]:
    """Return route-count and endpoint defects; an empty list means well formed."""
    expected = instance.variant.route_depots()
    defects = []
    if len(solution.routes) != len(expected):
        defects.append(f"expected {len(expected)} route(s), got {len(solution.routes)}")
        return defects
    n = instance.n
    for r, (route, depot) in enumerate(zip(solution.routes, expected)):
        v = route.visits
        if len(v) < 2:
            defects.append(f"route {r} has fewer than 2 visits")
            continue
        if not all(isinstance(i, int) and 0 <= i < n for i in v):
            defects.append(f"route {r} references an unknown location id")
            continue
        if v[0] != depot or v[-1] != depot:
            defects.append(f"route {r} must start and end at depot {depot}, got {v[0]}..{v[-1]}")
    return defects


def evaluate(
    instance: ProblemInstance, solution: Solution, dm: DistanceMatrix | None = None
) -> ObjectiveValue:
    defects = check_structure(instance, solution)
    if defects:
        raise EvaluationError("; ".join(defects))
    dm = dm if dm is not None else build_distance_matrix(instance)
    kind = instance.kind.objective
    if kind is ObjectiveKind.BOTTLENECK:
        value = max(route_bottleneck(dm, r.visits) for r in solution.routes)
    elif kind is ObjectiveKind.MINMAX:
        value = max(route_length(dm, r.visits) for r in solution.routes)
    else:
        value = sum(route_length(dm, r.visits) for r in solution.routes)
    return ObjectiveValue(value, kind)


def objectives_equal(a: float, b: float, integral: bool = False) -> bool:
    if integral:
        return a == b
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


__all__ = [
    "DistanceMatrix",
    "EvaluationError",
    "InstanceError",
    "Location",
    "Metric",
    "MULTI_ROBOT_KINDS",
    "ObjectiveKind",
    "ObjectiveValue",
    "ProblemInstance",
    "Route",
    "SINGLE_ROBOT_KINDS",
    "Solution",
    "VariantKind",
    "VariantSpec",
    "build_distance_matrix",
    "check_structure",
    "evaluate",
    "objectives_equal",
    "route_bottleneck",
    "route_length",
]
