"""Instance generation, TSPLIB/CVRPLIB parsing, variant derivation and persistence."""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .core import (
    MULTI_ROBOT_KINDS,
    SINGLE_ROBOT_KINDS,
    InstanceError,
    Location,
    Metric,
    ProblemInstance,
    VariantKind,
    VariantSpec,
    build_distance_matrix,
)

SCHEMA = "routebench.instance/1"
MANIFEST_SCHEMA = "routebench.manifest/1"
CVRPLIB_FILES = ("P-n16-k8", "P-n19-k2", "P-n21-k2", "E-n22-k4", "P-n23-k8")
DATASET_SIZES = (10, 15, 20)
SEEDS_PER_CELL = 5
_KIND_CODE = {k: i for i, k in enumerate(VariantKind)}


class GenerationError(ValueError):
    pass


class DerivationError(ValueError):
    pass


class InstanceLoadError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class TsplibParseError(ValueError):
    def __init__(self, line: int | None, message: str):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


@dataclass(frozen=True)
class GenerationRules:
    """Parameters the random generator attaches to k-TSP and GTSP instances."""

    k_fraction: float = 0.5  # k = ceil(k_fraction * n), depot included
    cluster_size: int = 5  # clusters = ceil(n / cluster_size)

    def k_for(self, n: int) -> int:
        return min(n, max(2, math.ceil(self.k_fraction * n)))

    def clusters_for(self, n: int) -> int:
        return max(1, math.ceil(n / self.cluster_size))


def _polar_clusters(xy: np.ndarray, ids: list[int], count: int) -> tuple[tuple[int, ...], ...]:
    pts = xy[ids]
    cx, cy = pts.mean(axis=0)
    angles = {i: math.atan2(xy[i, 1] - cy, xy[i, 0] - cx) for i in ids}
    ordered = sorted(ids, key=lambda i: (angles[i], i))
    groups: list[list[int]] = [[] for _ in range(min(count, len(ids)))]
    for pos, i in enumerate(ordered):
        groups[pos % len(groups)].append(i)
    return tuple(tuple(sorted(g)) for g in groups)


def generate_random_instance(
    kind: VariantKind | str, n: int, seed: int, rules: GenerationRules = GenerationRules()
) -> ProblemInstance:
    """Uniform random single-robot instance on [0, 100]^2 with depot 0."""
    kind = VariantKind(kind)
    if kind not in SINGLE_ROBOT_KINDS:
        raise GenerationError(f"{kind.value} is multi-robot; derive it from a CVRPLIB file instead")
    if n < 3:
        raise GenerationError(f"n must be >= 3, got {n}")
    rng = np.random.default_rng([seed, n, _KIND_CODE[kind]])
    xy = rng.uniform(0.0, 100.0, size=(n, 2))
    locations = tuple(Location(i, float(x), float(y)) for i, (x, y) in enumerate(xy))
    extra: dict[str, Any] = {}
    if kind is VariantKind.KTSP:
        extra["k"] = rules.k_for(n)
    elif kind is VariantKind.GTSP:
        extra["clusters"] = _polar_clusters(xy, list(range(1, n)), rules.clusters_for(n))
    variant = VariantSpec(kind, depot_ids=(0,), **extra)
    return ProblemInstance(f"{kind.value}-n{n}-s{seed}", variant, locations, Metric.EXACT_EUCLIDEAN, seed)


# ---------------------------------------------------------------------------
# TSPLIB
# ---------------------------------------------------------------------------

_SECTIONS = {"NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION"}
_KEYWORD = re.compile(r"^\s*([A-Z_]+)\s*(?::\s*(.*?))?\s*$")


def _number(tok: str, line: int, kind=float):
    try:
        return kind(tok)
    except ValueError:
        raise TsplibParseError(line, f"malformed number {tok!r}") from None


def parse_tsplib(text: str) -> ProblemInstance:
    """Parse a TSPLIB/CVRPLIB EUC_2D file into an instance with rounded distances.

    The fleet size comes from the ``-k<m>`` suffix of NAME (CVRPLIB naming).
    """
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    demands: dict[int, int] = {}
    depots: list[int] = []
    seen_sections: set[str] = set()
    section = None
    header_lines: dict[str, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        head = line.split()[0].rstrip(":")
        if head in _SECTIONS:
            section = head
            seen_sections.add(head)
            continue
        match = _KEYWORD.match(line)
        if match and not line[0].isdigit() and not line[0] == "-":
            key, value = match.group(1), (match.group(2) or "").strip()
            header[key] = value
            header_lines[key] = lineno
            section = None
            continue
        toks = line.split()
        if section == "NODE_COORD_SECTION":
            if len(toks) != 3:
                raise TsplibParseError(lineno, "expected 'id x y'")
            coords[_number(toks[0], lineno, int)] = (_number(toks[1], lineno), _number(toks[2], lineno))
        elif section == "DEMAND_SECTION":
            if len(toks) != 2:
                raise TsplibParseError(lineno, "expected 'id demand'")
            demands[_number(toks[0], lineno, int)] = _number(toks[1], lineno, int)
        elif section == "DEPOT_SECTION":
            for tok in toks:
                val = _number(tok, lineno, int)
                if val == -1:
                    section = None
                    break
                depots.append(val)
        else:
            raise TsplibParseError(lineno, f"unexpected content {line!r}")

    for key in ("NAME", "TYPE", "DIMENSION", "EDGE_WEIGHT_TYPE"):
        if key not in header:
            raise TsplibParseError(None, f"missing mandatory keyword {key}")
    if header["EDGE_WEIGHT_TYPE"] != "EUC_2D":
        raise TsplibParseError(
            header_lines["EDGE_WEIGHT_TYPE"],
            f"unsupported EDGE_WEIGHT_TYPE {header['EDGE_WEIGHT_TYPE']} (only EUC_2D)",
        )
    name = header["NAME"]
    ftype = header["TYPE"]
    n = _number(header["DIMENSION"], header_lines["DIMENSION"], int)
    if "NODE_COORD_SECTION" not in seen_sections:
        raise TsplibParseError(None, "missing NODE_COORD_SECTION")
    if sorted(coords) != list(range(1, n + 1)):
        raise TsplibParseError(None, f"NODE_COORD_SECTION must list ids 1..{n}")

    if ftype == "TSP":
        locs = tuple(Location(i - 1, *coords[i]) for i in range(1, n + 1))
        return ProblemInstance(name, VariantSpec(VariantKind.TSP), locs, Metric.TSPLIB_ROUNDED)
    if ftype != "CVRP":
        raise TsplibParseError(header_lines["TYPE"], f"unsupported TYPE {ftype}")
    for key, sec in (("CAPACITY", None), (None, "DEMAND_SECTION"), (None, "DEPOT_SECTION")):
        if key and key not in header:
            raise TsplibParseError(None, f"missing mandatory keyword {key}")
        if sec and sec not in seen_sections:
            raise TsplibParseError(None, f"missing {sec}")
    if sorted(demands) != list(range(1, n + 1)):
        raise TsplibParseError(None, f"DEMAND_SECTION must list ids 1..{n}")
    if len(depots) != 1:
        raise TsplibParseError(None, f"expected exactly one depot, got {len(depots)}")
    match = re.search(r"-k(\d+)$", name)
    if not match:
        raise TsplibParseError(header_lines["NAME"], f"cannot read fleet size from NAME {name!r}")
    capacity = _number(header["CAPACITY"], header_lines["CAPACITY"], int)
    depot = depots[0] - 1
    locs = tuple(
        Location(i - 1, *coords[i], demand=0 if i - 1 == depot else demands[i]) for i in range(1, n + 1)
    )
    variant = VariantSpec(
        VariantKind.CVRP, depot_ids=(depot,), num_robots=int(match.group(1)), capacity=capacity
    )
    return ProblemInstance(name, variant, locs, Metric.TSPLIB_ROUNDED)


def published_optimum(text: str) -> float | None:
    """The optimum CVRPLIB records in the COMMENT line, if any."""
    match = re.search(r"Optimal value:\s*([0-9.]+)", text)
    return float(match.group(1)) if match else None


def vendored_cvrplib(name: str) -> str:
    """Text of a CVRPLIB fixture bundled with the package."""
    ref = resources.files("routebench") / "data" / "cvrplib" / f"{name}.vrp"
    if not ref.is_file():
        raise FileNotFoundError(f"CVRPLIB fixture {name}.vrp is not bundled (looked in {ref})")
    return ref.read_text()


def derive_variant_instance(base: ProblemInstance, kind: VariantKind | str) -> ProblemInstance:
    """Reuse a CVRPLIB base instance for another multi-robot variant."""
    kind = VariantKind(kind)
    if base.kind is not VariantKind.CVRP:
        raise DerivationError(f"base must be a CVRP instance, got {base.kind.value}")
    if kind not in MULTI_ROBOT_KINDS:
        raise DerivationError(f"{kind.value} is not a multi-robot variant")
    if kind is VariantKind.CVRP:
        return base
    m = base.variant.num_robots
    depot = base.variant.depot
    locs = tuple(Location(loc.id, loc.x, loc.y) for loc in base.locations)
    name = f"{base.name}-{kind.value}"
    if kind in (VariantKind.MTSP, VariantKind.MINMAX_MTSP):
        variant = VariantSpec(kind, depot_ids=(depot,), num_robots=m)
        return ProblemInstance(name, variant, locs, base.metric)
    dm = build_distance_matrix(base)
    depots = [depot]
    if m >= 2:
        far = max(base.customers, key=lambda c: (dm.d[depot, c], -c))
        depots.append(far)
    robot_depots = tuple(depots[r % len(depots)] for r in range(m))
    variant = VariantSpec(kind, depot_ids=tuple(depots), num_robots=m, robot_depots=robot_depots)
    return ProblemInstance(name, variant, locs, base.metric)


# ---------------------------------------------------------------------------
# JSON persistence
# ---------------------------------------------------------------------------


def instance_to_dict(instance: ProblemInstance) -> dict:
    v = instance.variant
    variant = {"kind": v.kind.value, "depot_ids": list(v.depot_ids)}
    if v.k is not None:
        variant["k"] = v.k
    if v.clusters is not None:
        variant["clusters"] = [list(c) for c in v.clusters]
    if v.num_robots is not None:
        variant["num_robots"] = v.num_robots
    if v.capacity is not None:
        variant["capacity"] = v.capacity
    if v.robot_depots is not None:
        variant["robot_depots"] = list(v.robot_depots)
    return {
        "schema": SCHEMA,
        "name": instance.name,
        "metric": instance.metric.value,
        "seed": instance.seed,
        "variant": variant,
        "locations": [asdict(loc) for loc in instance.locations],
    }


def _need(data: dict, key: str, where: str, types) -> Any:
    if key not in data:
        raise InstanceLoadError(f"{where}{key}", "missing")
    value = data[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise InstanceLoadError(f"{where}{key}", f"expected {types}, got {type(value).__name__}")
    return value


def instance_from_dict(data: dict) -> ProblemInstance:
    if data.get("schema") != SCHEMA:
        raise InstanceLoadError("schema", f"expected {SCHEMA!r}, got {data.get('schema')!r}")
    name = _need(data, "name", "", str)
    metric = _need(data, "metric", "", str)
    if metric not in Metric.__members__:
        raise InstanceLoadError("metric", f"unknown metric {metric!r}")
    seed = data.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool)):
        raise InstanceLoadError("seed", "expected integer or null")
    raw_locs = _need(data, "locations", "", list)
    locs = []
    seen = set()
    for i, loc in enumerate(raw_locs):
        where = f"locations[{i}]."
        if not isinstance(loc, dict):
            raise InstanceLoadError(f"locations[{i}]", "expected an object")
        lid = _need(loc, "id", where, int)
        if lid in seen:
            raise InstanceLoadError(f"{where}id", f"duplicate id {lid}")
        seen.add(lid)
        x = _need(loc, "x", where, (int, float))
        y = _need(loc, "y", where, (int, float))
        demand = _need(loc, "demand", where, int)
        if demand < 0:
            raise InstanceLoadError(f"{where}demand", f"negative demand {demand}")
        locs.append(Location(lid, float(x), float(y), demand))
    raw_v = _need(data, "variant", "", dict)
    kind = _need(raw_v, "kind", "variant.", str)
    if kind not in VariantKind.__members__:
        raise InstanceLoadError("variant.kind", f"unknown kind {kind!r}")
    fields = {"depot_ids": tuple(_need(raw_v, "depot_ids", "variant.", list))}
    for key in ("k", "num_robots", "capacity"):
        if raw_v.get(key) is not None:
            fields[key] = _need(raw_v, key, "variant.", int)
    if raw_v.get("clusters") is not None:
        fields["clusters"] = tuple(tuple(c) for c in _need(raw_v, "clusters", "variant.", list))
    if raw_v.get("robot_depots") is not None:
        fields["robot_depots"] = tuple(_need(raw_v, "robot_depots", "variant.", list))
    try:
        variant = VariantSpec(VariantKind(kind), **fields)
        return ProblemInstance(name, variant, tuple(locs), Metric(metric), seed)
    except InstanceError as exc:
        raise InstanceLoadError("variant" if "variant" in str(exc) else "locations", str(exc)) from exc


def dumps_instance(instance: ProblemInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1, sort_keys=True) + "\n"


def save_instance(instance: ProblemInstance, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_instance(instance))
    return path


def load_instance(path: str | Path) -> ProblemInstance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceLoadError("<document>", f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InstanceLoadError("<document>", "expected a JSON object")
    return instance_from_dict(data)


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    kind: str
    n: int
    seed: int | None
    source: str | None
    path: str


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    rules: GenerationRules
    seed_base: int

    def to_dict(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "seed_base": self.seed_base,
            "rules": asdict(self.rules),
            "entries": [asdict(e) for e in self.entries],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        return cls(
            entries=tuple(ManifestEntry(**e) for e in data["entries"]),
            rules=GenerationRules(**data["rules"]),
            seed_base=data["seed_base"],
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def build_dataset(
    seed_base: int = 0,
    rules: GenerationRules = GenerationRules(),
    cvrplib_dir: str | Path | None = None,
    generated: bool = True,
) -> list[tuple[ProblemInstance, str | None]]:
    """All 80 benchmark instances, each paired with its source file name (or None).

    ``generated=False`` keeps only the 20 instances derived from CVRPLIB files.
    """
    out: list[tuple[ProblemInstance, str | None]] = []
    for kind in SINGLE_ROBOT_KINDS if generated else ():
        for n in DATASET_SIZES:
            for i in range(SEEDS_PER_CELL):
                out.append((generate_random_instance(kind, n, seed_base + i, rules), None))
    for fname in CVRPLIB_FILES:
        if cvrplib_dir is None:
            text = vendored_cvrplib(fname)
        else:
            path = Path(cvrplib_dir) / f"{fname}.vrp"
            if not path.is_file():
                raise FileNotFoundError(f"missing CVRPLIB file {path}")
            text = path.read_text()
        base = parse_tsplib(text)
        for kind in MULTI_ROBOT_KINDS:
            out.append((derive_variant_instance(base, kind), f"{fname}.vrp"))
    out.sort(key=lambda pair: (list(VariantKind).index(pair[0].kind), pair[0].n, pair[0].name))
    return out


def write_dataset(
    out_dir: str | Path,
    seed_base: int = 0,
    rules: GenerationRules = GenerationRules(),
    cvrplib_dir: str | Path | None = None,
    generated: bool = True,
) -> DatasetManifest:
    out_dir = Path(out_dir)
    entries = []
    for inst, source in build_dataset(seed_base, rules, cvrplib_dir, generated):
        rel = f"instances/{inst.name}.json"
        save_instance(inst, out_dir / rel)
        entries.append(ManifestEntry(inst.name, inst.kind.value, inst.n, inst.seed, source, rel))
    manifest = DatasetManifest(tuple(entries), rules, seed_base)
    (out_dir / "manifest.json").write_text(manifest.dumps())
    return manifest


def load_manifest(dataset_dir: str | Path) -> DatasetManifest:
    return DatasetManifest.from_dict(json.loads((Path(dataset_dir) / "manifest.json").read_text()))


def load_dataset(dataset_dir: str | Path) -> list[ProblemInstance]:
    dataset_dir = Path(dataset_dir)
    return [load_instance(dataset_dir / e.path) for e in load_manifest(dataset_dir).entries]
