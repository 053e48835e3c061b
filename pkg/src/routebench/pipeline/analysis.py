"""Post-hoc analyses of generated programs: verifier confusion, library use, approach."""

from __future__ import annotations

import ast
import enum
import json
import re
from pathlib import Path
from typing import Iterable, Mapping

from ..verifier import VerdictReport
from .frameworks import RunRecord


class ConfusionLabel(str, enum.Enum):
    TRUE_POSITIVE = "TRUE_POSITIVE"
    TRUE_NEGATIVE = "TRUE_NEGATIVE"
    FALSE_POSITIVE = "FALSE_POSITIVE"
    FALSE_NEGATIVE = "FALSE_NEGATIVE"


def classify_verifier_outcome(llm_accepts: bool, ground_truth: VerdictReport) -> ConfusionLabel:
    """Positive means "solution is correct"; ground truth decides which side is right."""
    if ground_truth.feasible:
        return ConfusionLabel.TRUE_POSITIVE if llm_accepts else ConfusionLabel.FALSE_NEGATIVE
    return ConfusionLabel.FALSE_POSITIVE if llm_accepts else ConfusionLabel.TRUE_NEGATIVE


def verification_events(record: RunRecord) -> list[ConfusionLabel]:
    """One label per attempt that was both unit-tested and ground-truth checked."""
    return [
        classify_verifier_outcome(a.llm_verifier.passed, a.ground_truth)
        for a in record.attempts
        if a.llm_verifier is not None and a.ground_truth is not None
    ]


# Top-level module names per library tag.
LIBRARY_MODULES = {
    "Gurobi": ("gurobipy",),
    "PuLP": ("pulp",),
    "OR-Tools": ("ortools",),
    "Pyomo": ("pyomo",),
    "MIP": ("mip",),
    "Docplex": ("docplex",),
}
_MODULE_TAG = {m: tag for tag, mods in LIBRARY_MODULES.items() for m in mods}
_IMPORT_RE = re.compile(r"^\s*(?:from\s+([\w.]+)\s+import|import\s+([\w., ]+))", re.M)


def _imported_modules(source: str) -> set[str]:
    try:
        tree = ast.parse(source)
    except SyntaxError:
        # Broken programs still count; fall back to a line scan.
        found = set()
        for frm, names in _IMPORT_RE.findall(source):
            for name in [frm] if frm else names.split(","):
                name = name.strip().split(" ")[0]
                if name:
                    found.add(name)
        return found
    found = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            found.update(alias.name for alias in node.names)
        elif isinstance(node, ast.ImportFrom) and node.module and not node.level:
            found.add(node.module)
        elif (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id == "__import__"
            and node.args
            and isinstance(node.args[0], ast.Constant)
            and isinstance(node.args[0].value, str)
        ):
            found.add(node.args[0].value)
    return found


def scan_imports(source: str) -> set[str]:
    """Optimization-library tags imported by ``source``."""
    tags = set()
    for module in _imported_modules(source):
        tag = _MODULE_TAG.get(module.split(".")[0])
        if tag:
            tags.add(tag)
    return tags


class Approach(str, enum.Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"
    APPROXIMATION = "approximation"
    UNKNOWN = "unknown"


DEFAULT_KEYWORDS: Mapping[Approach, tuple[str, ...]] = {
    Approach.EXACT: (
        "held-karp", "held_karp", "dynamic programming", "bitmask", "branch and bound",
        "branch_and_bound", "itertools.permutations", "permutations(", "brute force",
        "brute_force", "milp", "linprog", "optimal",
    ),
    Approach.HEURISTIC: (
        "nearest neighbor", "nearest_neighbor", "nearest neighbour", "greedy", "2-opt",
        "two_opt", "2opt", "simulated annealing", "annealing", "genetic", "tabu",
        "local search", "savings", "clarke", "insertion", "random.", "local_search",
    ),
    Approach.APPROXIMATION: (
        "christofides", "minimum spanning tree", "spanning_tree", "mst", "approximation",
        "approx", "matching",
    ),
}


def classify_approach(
    source: str,
    keywords: Mapping[Approach, Iterable[str]] = DEFAULT_KEYWORDS,
    overrides: Mapping[str, str] | None = None,
    key: str | None = None,
) -> Approach:
    """Tag a program by keyword counts; a manual override for ``key`` wins.

    Solver-library imports count as exact. Ties between categories, or no
    hits at all, give UNKNOWN.
    """
    if overrides and key is not None and key in overrides:
        return Approach(overrides[key])
    text = source.lower()
    scores = {a: sum(text.count(w) for w in words) for a, words in keywords.items()}
    if scan_imports(source):
        scores[Approach.EXACT] = scores.get(Approach.EXACT, 0) + 10
    best = max(scores.values(), default=0)
    winners = [a for a, s in scores.items() if s == best]
    if best == 0 or len(winners) != 1:
        return Approach.UNKNOWN
    return winners[0]


def load_overrides(path: str | Path) -> dict[str, str]:
    """Override file: JSON object mapping a record key string to an approach tag."""
    data = json.loads(Path(path).read_text())
    for k, v in data.items():
        Approach(v)
    return dict(data)


def override_key(record: RunRecord) -> str:
    return "|".join(str(p) for p in record.key)
