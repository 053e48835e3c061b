"""Success rate, optimality gap, time and cost tables, plus the verifier and library tables.

Undefined values (empty denominators, cells with no feasible run) are None
and render as "-". Optimality gaps average over feasible records only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .exact import CertificateStatus, OptimalCertificate
from .pipeline.analysis import LIBRARY_MODULES, ConfusionLabel, classify_approach, scan_imports, verification_events
from .pipeline.frameworks import FinalStatus, RunRecord

MISSING = "-"
GAP_FOOTER = "Optimality gap is averaged over feasible runs only; '-' marks cells without one."
BOUND_FOOTER = "Rows with gap_vs_bound True measure the gap against a lower bound because optimality was not proven."


class AggregationError(ValueError):
    pass


def percentage(successes: int, total: int) -> float | None:
    if total < 0 or successes < 0 or successes > total:
        raise ValueError(f"invalid ratio {successes}/{total}")
    if total == 0:
        return None
    return 100.0 * successes / total


def _counted(records: Iterable[RunRecord]) -> list[RunRecord]:
    return [r for r in records if r.budgets.count_aborted or not r.aborted]


def success_rate(records: Sequence[RunRecord]) -> float | None:
    """100 * feasible / total; None for an empty set.

    Aborted runs stay in the denominator unless their budgets say otherwise.
    """
    counted = _counted(records)
    return percentage(sum(r.final_status is FinalStatus.FEASIBLE for r in counted), len(counted))


@dataclass(frozen=True)
class Gap:
    value: float
    against_bound: bool = False


def optimality_gap(value: float, certificate: OptimalCertificate) -> Gap | None:
    """100 * (V - V*) / V*; measured against the lower bound, and flagged, when unproven."""
    if certificate.status is CertificateStatus.PROVEN_OPTIMAL:
        ref, flagged = certificate.value.value, False
    else:
        ref, flagged = certificate.lower_bound, True
    if ref == 0 or not math.isfinite(ref):
        return None
    return Gap(100.0 * (value - ref) / ref, flagged)


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


@dataclass
class Table:
    title: str
    columns: list[str]
    rows: list[list]
    notes: list[str] = field(default_factory=list)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def to_dict(self) -> dict:
        return {"title": self.title, "columns": self.columns, "rows": self.rows, "notes": self.notes}


GROUP_KEYS = {
    "task": lambda r: r.variant,
    "framework": lambda r: r.framework.value,
    "context": lambda r: r.context.label,
    "model": lambda r: r.model["model_name"],
}
METRIC_COLUMNS = ["success_rate", "optimality_gap", "exec_time", "cost", "runs", "gap_vs_bound"]


def _experiment(records: Sequence[RunRecord]) -> str | None:
    ids = {r.experiment_id for r in records}
    if len(ids) > 1:
        raise AggregationError(f"records mix experiment ids {sorted(ids)}")
    return next(iter(ids), None)


def _cell(records: list[RunRecord], certificates: Mapping[str, OptimalCertificate]) -> list:
    counted = _counted(records)
    gaps, flagged = [], False
    for r in counted:
        if r.final_status is not FinalStatus.FEASIBLE or r.objective is None:
            continue
        cert = certificates.get(r.instance)
        if cert is None:
            continue
        gap = optimality_gap(r.objective, cert)
        if gap is not None:
            gaps.append(gap.value)
            flagged |= gap.against_bound
    row = [
        success_rate(counted),
        _mean(gaps),
        _mean(r.exec_time for r in counted),
        _mean(r.cost for r in counted),
        len(counted),
        flagged,
    ]
    return row


def aggregate(
    records: Sequence[RunRecord],
    certificates: Mapping[str, OptimalCertificate] | None = None,
    group_by: Sequence[str] = ("task", "framework", "context", "model"),
    title: str = "Results",
) -> Table:
    """Mean metrics per group, followed by one Mean row per setting of the non-task keys.

    A Mean row averages the cell values above it (cells count equally).
    """
    for key in group_by:
        if key not in GROUP_KEYS:
            raise AggregationError(f"unknown group key {key!r}; choose from {sorted(GROUP_KEYS)}")
    _experiment(records)
    certificates = certificates or {}
    cells: dict[tuple, list[RunRecord]] = defaultdict(list)
    for r in records:
        cells[tuple(GROUP_KEYS[k](r) for k in group_by)].append(r)
    rows = [list(key) + _cell(cells[key], certificates) for key in sorted(cells)]
    table_rows = list(rows)
    if "task" in group_by and rows:
        t = list(group_by).index("task")
        others = defaultdict(list)
        for r in rows:
            others[tuple(v for i, v in enumerate(r[: len(group_by)]) if i != t)].append(r)
        for rest, members in sorted(others.items()):
            label = list(rest)
            label.insert(t, "Mean")
            g = len(group_by)
            metrics = [_mean(m[g + j] for m in members) for j in range(4)]
            table_rows.append(label + metrics + [sum(m[g + 4] for m in members), any(m[g + 5] for m in members)])
    notes = [GAP_FOOTER]
    if any(r[-1] for r in table_rows):
        notes.append(BOUND_FOOTER)
    return Table(title, list(group_by) + METRIC_COLUMNS, table_rows, notes)


CONFUSION_COLUMNS = ["task", "false_negative", "feasible_checked", "false_positive", "infeasible_checked"]


def confusion_table(records: Sequence[RunRecord]) -> Table:
    """Verifier misclassifications per task, each with the count it was drawn from.

    FN counts feasible solutions the generated tests rejected; FP counts
    infeasible ones they accepted.
    """
    counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0, 0])
    for r in records:
        for label in verification_events(r):
            c = counts[r.variant]
            if label in (ConfusionLabel.TRUE_POSITIVE, ConfusionLabel.FALSE_NEGATIVE):
                c[1] += 1
                c[0] += label is ConfusionLabel.FALSE_NEGATIVE
            else:
                c[3] += 1
                c[2] += label is ConfusionLabel.FALSE_POSITIVE
    rows = [[task] + counts[task] for task in sorted(counts)]
    total = [sum(r[i] for r in rows) for i in range(1, 5)]
    rows.append(["Total"] + total)
    return Table(
        "LLM-generated verifier",
        CONFUSION_COLUMNS,
        rows,
        ["FN: feasible solutions rejected by the generated tests. FP: infeasible solutions accepted."],
    )


def _final_source(record: RunRecord) -> str | None:
    parsed = [a for a in record.attempts if a.parsed is not None]
    chosen = parsed[-1] if parsed else (record.attempts[-1] if record.attempts else None)
    return chosen.generated_source if chosen else None


def library_usage_table(records: Sequence[RunRecord]) -> Table:
    """Share of runs (in %) whose final program imports each optimization library."""
    libs = list(LIBRARY_MODULES)
    per_task: dict[str, list[set[str]]] = defaultdict(list)
    for r in records:
        src = _final_source(r)
        if src is not None:
            per_task[r.variant].append(scan_imports(src))
    rows = []
    for task in sorted(per_task):
        tags = per_task[task]
        rows.append([task] + [percentage(sum(lib in t for t in tags), len(tags)) for lib in libs] + [len(tags)])
    every = [t for tags in per_task.values() for t in tags]
    rows.append(["Total"] + [percentage(sum(lib in t for t in every), len(every)) for lib in libs] + [len(every)])
    return Table("Optimization library usage (%)", ["task"] + libs + ["programs"], rows)


def approach_table(records: Sequence[RunRecord], overrides: Mapping[str, str] | None = None) -> Table:
    from .pipeline.analysis import Approach, override_key

    kinds = [a.value for a in Approach]
    counts: dict[str, dict[str, int]] = defaultdict(lambda: dict.fromkeys(kinds, 0))
    for r in records:
        src = _final_source(r)
        if src is None:
            continue
        tag = classify_approach(src, overrides=overrides, key=override_key(r))
        counts[r.variant][tag.value] += 1
    rows = [[task] + [counts[task][k] for k in kinds] for task in sorted(counts)]
    return Table("Solution approach (programs)", ["task"] + kinds, rows)


def _display(value) -> str:
    if value is None:
        return MISSING
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def to_markdown(table: Table) -> str:
    width = len(table.columns)
    lines = [f"### {table.title}", "", "| " + " | ".join(table.columns) + " |", "|" + "---|" * width]
    for row in table.rows:
        cells = [_display(v) for v in row]
        lines.append("| " + " | ".join(cells) + " |")
    if table.notes:
        lines.append("")
        lines.extend(f"_{n}_" for n in table.notes)
    return "\n".join(lines) + "\n"


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([MISSING if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def to_json(table: Table) -> str:
    return json.dumps(table.to_dict(), indent=2) + "\n"


def _cell_value(text: str):
    if text == MISSING:
        return None
    if text in ("True", "False"):
        return text == "True"
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def from_csv(text: str, title: str = "") -> Table:
    reader = list(csv.reader(io.StringIO(text)))
    return Table(title, reader[0], [[_cell_value(c) for c in row] for row in reader[1:]])


FORMATS = {"markdown": (to_markdown, ".md"), "csv": (to_csv, ".csv"), "json": (to_json, ".json")}


def export(table: Table, fmt: str, path: str | Path) -> Path:
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {sorted(FORMATS)}")
    render, _ = FORMATS[fmt]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(table))
    return path
