"""Prompt construction: task text with embedded instance data, plus optional context."""

from __future__ import annotations

import json
import re

from ..core import Metric, ProblemInstance, VariantKind
from ..llm import ChatMessage, Role
from .assets import AssetRegistry, ContextKind, ContextSpec

SYSTEM_PROMPT = (
    "You are an expert in combinatorial optimization and robot routing. "
    "You write correct, self-contained Python 3 programs."
)

_TASKS = {
    VariantKind.TSP: (
        "A single robot starts at the depot (location {depot}). Plan one closed tour that "
        "visits every other location exactly once and comes back to the depot. "
        "Make the total travelled distance as small as possible."
    ),
    VariantKind.BTSP: (
        "A single robot starts at the depot (location {depot}). Plan one closed tour that "
        "visits every other location exactly once and comes back to the depot. "
        "Make the longest single hop between two consecutive stops (including the final "
        "hop back to the depot) as short as possible."
    ),
    VariantKind.KTSP: (
        "A single robot starts at the depot (location {depot}). Plan one closed tour that "
        "visits exactly {k} distinct locations counting the depot itself, so {k_minus} "
        "other locations, each at most once, and returns to the depot. Choose which "
        "locations to visit and in what order so the total distance is as small as possible."
    ),
    VariantKind.GTSP: (
        "A single robot starts at the depot (location {depot}). The other locations are "
        "split into groups, listed below. Plan one closed tour that visits exactly one "
        "location from every group and returns to the depot. Choose the representative "
        "of each group and the order so the total distance is as small as possible."
    ),
    VariantKind.MTSP: (
        "{m} robots all start at the depot (location {depot}). Give every robot its own "
        "closed tour that starts and ends at the depot and visits at least one location. "
        "Every non-depot location must be visited exactly once by exactly one robot. "
        "Minimise the sum of the distances travelled by all robots."
    ),
    VariantKind.MINMAX_MTSP: (
        "{m} robots all start at the depot (location {depot}). Give every robot its own "
        "closed tour that starts and ends at the depot and visits at least one location. "
        "Every non-depot location must be visited exactly once by exactly one robot. "
        "Minimise the length of the longest robot tour."
    ),
    VariantKind.MD_MTSP: (
        "{m} robots are stationed at {d} depots: {robot_list}. Each robot's tour must start "
        "and end at its own depot and visit at least one location. Every non-depot location "
        "must be visited exactly once by exactly one robot, and tours never pass through a "
        "depot mid-route. Minimise the sum of the distances travelled by all robots."
    ),
    VariantKind.CVRP: (
        "A fleet of {m} robots, each able to carry {capacity} units, is based at the depot "
        "(location {depot}). Every other location is a customer with the demand listed "
        "below. Give each robot a tour that starts and ends at the depot (a robot may stay "
        "idle, written as [{depot}, {depot}]). Every customer is visited exactly once, and "
        "the total demand on one tour may not exceed the capacity. Minimise the total "
        "distance travelled by all robots."
    ),
}

OUTPUT_INSTRUCTIONS = (
    "Write a complete Python 3 program that solves this instance. The data above must be "
    "embedded in the program; it reads no input and no files. When it finishes it must "
    'print one JSON object on its last line, of the form {{"routes": [[...], ...]}}: '
    "{route_hint} Each route lists location ids in visiting order, starting and ending "
    "with the robot's depot. Return only the program, in a single ```python code block."
)


def _fmt(x: float) -> str:
    return f"{x:g}" if float(x).is_integer() else f"{x:.6f}".rstrip("0")


def describe_task(instance: ProblemInstance) -> str:
    """Natural-language task with the instance data embedded."""
    v = instance.variant
    fields = {
        "depot": v.depot,
        "k": v.k,
        "k_minus": (v.k or 1) - 1,
        "m": v.num_robots,
        "d": len(v.depot_ids),
        "capacity": v.capacity,
        "robot_list": ", ".join(f"robot {r} at location {dep}" for r, dep in enumerate(v.route_depots())),
    }
    lines = [_TASKS[v.kind].format(**fields), ""]
    lines.append(f"There are {instance.n} locations with ids 0 to {instance.n - 1}. Coordinates (id: x, y):")
    for loc in instance.locations:
        lines.append(f"{loc.id}: {_fmt(loc.x)}, {_fmt(loc.y)}")
    if v.kind is VariantKind.CVRP:
        lines.append("")
        lines.append("Demands (id: demand): " + ", ".join(f"{loc.id}: {loc.demand}" for loc in instance.locations))
    if v.kind is VariantKind.GTSP:
        lines.append("")
        lines.append("Groups:")
        for c, members in enumerate(v.clusters):
            lines.append(f"group {c}: {list(members)}")
    lines.append("")
    if instance.metric is Metric.TSPLIB_ROUNDED:
        lines.append(
            "The distance between two locations is their Euclidean distance rounded to the "
            "nearest integer (TSPLIB EUC_2D convention)."
        )
    else:
        lines.append("The distance between two locations is their exact Euclidean distance.")
    return "\n".join(lines)


def output_instructions(instance: ProblemInstance) -> str:
    routes = len(instance.variant.route_depots())
    hint = "a list holding the single route." if routes == 1 else f"a list of exactly {routes} routes, one per robot in robot order."
    return OUTPUT_INSTRUCTIONS.format(route_hint=hint)


def _context_block(context: ContextSpec, instance: ProblemInstance, assets: AssetRegistry) -> str | None:
    if context.kind is ContextKind.NONE:
        return None
    text = assets.context_text(context, instance.kind)
    heading = {
        ContextKind.MATH_FORMULATION: "Mathematical formulation of this problem class",
        ContextKind.PSEUDO_CODE: "Pseudo-code of an algorithm for this problem class",
        ContextKind.PAPER_SUMMARY: "Summary of a research paper on this problem class",
    }[context.kind]
    return f"{heading}:\n\n{text.strip()}"


def build_prompt(
    instance: ProblemInstance, context: ContextSpec, assets: AssetRegistry
) -> list[ChatMessage]:
    parts = [describe_task(instance)]
    block = _context_block(context, instance, assets)
    if block:
        parts.append(block)
    parts.append(output_instructions(instance))
    return [
        ChatMessage(Role.SYSTEM, SYSTEM_PROMPT),
        ChatMessage(Role.USER, "\n\n".join(parts)),
    ]


def constraint_prompt(instance: ProblemInstance) -> list[ChatMessage]:
    body = (
        describe_task(instance)
        + "\n\nList every constraint that a valid solution to this task must satisfy, one per "
        "line, as precise checkable statements. Do not write code and do not solve the task."
    )
    return [ChatMessage(Role.SYSTEM, SYSTEM_PROMPT), ChatMessage(Role.USER, body)]


def unit_test_prompt(instance: ProblemInstance, constraints: str) -> list[ChatMessage]:
    body = (
        describe_task(instance)
        + "\n\nConstraints a valid solution must satisfy:\n"
        + constraints.strip()
        + "\n\nWrite a Python 3 program of unit tests that checks a candidate solution against "
        "every constraint above. The candidate is already bound to the global variable "
        '`solution`, a dict of the form {"routes": [[...], ...]}; do not redefine it. Embed any '
        "instance data you need. Use assert statements so that any violated constraint ends "
        "the program with a nonzero exit status, and print PASS when every check succeeds. "
        "Return only the program, in a single ```python code block."
    )
    return [ChatMessage(Role.SYSTEM, SYSTEM_PROMPT), ChatMessage(Role.USER, body)]


_TAIL = 4000


def _tail(text: str) -> str:
    return text if len(text) <= _TAIL else "...\n" + text[-_TAIL:]


def execution_feedback(status: str, stderr: str, stdout: str, parse_error: str | None) -> str:
    if parse_error is not None:
        return (
            "The program ran, but its output did not contain a solution in the required "
            f"format ({parse_error}). Its standard output was:\n{_tail(stdout) or '(empty)'}\n\n"
            "Fix the program and return the complete corrected program in a single ```python code block."
        )
    return (
        f"Running the program failed (status {status}). Error output:\n{_tail(stderr) or '(empty)'}\n\n"
        "Fix the program and return the complete corrected program in a single ```python code block."
    )


def verification_feedback(test_stdout: str, test_stderr: str) -> str:
    report = "\n".join(s for s in (_tail(test_stdout).strip(), _tail(test_stderr).strip()) if s)
    return (
        "Your program ran, but its solution failed the unit tests written for this task:\n"
        f"{report or '(no output)'}\n\n"
        "Revise the program so its solution satisfies every constraint, and return the "
        "complete program in a single ```python code block."
    )


_FENCE = re.compile(r"```([A-Za-z0-9_+-]*)[ \t]*\n(.*?)```", re.S)


def extract_code(text: str) -> str:
    """The first ```python block of a reply, else the first fenced block, else the reply."""
    blocks = _FENCE.findall(text)
    for lang, body in blocks:
        if lang.lower() in ("python", "py", "python3"):
            return body.strip() + "\n"
    if blocks:
        return blocks[0][1].strip() + "\n"
    return text.strip() + "\n"


def unit_test_program(test_source: str, solution_routes: list[list[int]]) -> str:
    payload = json.dumps({"routes": solution_routes})
    return f"import json as _rb_json\nsolution = _rb_json.loads({payload!r})\n" + test_source
