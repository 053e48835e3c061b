"""Author the replay transcripts under tests/fixtures/replay.

Each scripted reply is run through the real pipeline with a RecordingClient,
so the transcripts carry the exact prompts the harness sends (including
execution feedback). Re-run after any prompt change:

    python tests/fixtures/build_fixtures.py && python tests/fixtures/build_fixtures.py --goldens
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import tempfile
from pathlib import Path

from routebench import cli
from routebench.instances import write_dataset
from routebench.llm import ModelConfig, RecordingClient, ScriptedClient, record_transcript
from routebench.pipeline import AssetRegistry, Budgets, ContextSpec, FrameworkKind, run_framework

HERE = Path(__file__).parent
REPLAY = HERE / "replay"
MODEL = "fixture-model"
FAKE_STEP = 0.25

# Held-Karp over the embedded coordinates; prints the optimal closed tour.
TSP_PROGRAM = """import json, math
pts = {pts}
n = len(pts)
d = [[math.dist(a, b) for b in pts] for a in pts]
best = {{(1 << j, j): (d[0][j], None) for j in range(1, n)}}
for mask in range(1, 1 << n):
    if mask & 1:
        continue
    for j in range(1, n):
        if (mask, j) not in best:
            continue
        cost = best[(mask, j)][0]
        for k in range(1, n):
            if mask >> k & 1:
                continue
            key = (mask | 1 << k, k)
            if key not in best or cost + d[j][k] < best[key][0]:
                best[key] = (cost + d[j][k], j)
full = (1 << n) - 2
last = min(range(1, n), key=lambda j: best[(full, j)][0] + d[j][0])
tour, mask = [], full
while last is not None:
    tour.append(last)
    mask, last = mask & ~(1 << last), best[(mask, last)][1]
print(json.dumps({{"routes": [[0] + tour[::-1] + [0]]}}))
"""

SKIP_ONE = """import json
print("greedy tour")
print(json.dumps({{"routes": [[0] + list(range(1, {n} - 1)) + [0]]}}))
"""

CRASH = """import numpy as np
coords = np.array({pts})
order = np.argsort(coords[:, 0]
print(order)
"""

RUNTIME_CRASH = """import json
routes = [[0, 1, 2]]
print(json.dumps({"routes": routes[3]}))
"""

GARBLED = """print("I computed the best tour, its length is about 300.")
"""

STRICT_TEST = """routes = solution["routes"]
assert len(routes) == 1, "FAIL: exactly one route"
tour = routes[0]
assert tour[0] == 0 and tour[-1] == 0, "FAIL: depot at both ends"
# Misread requirement: also insists the tour visits locations in increasing id order.
assert tour[1:-1] == sorted(tour[1:-1]), "FAIL: visit order"
print("PASS")
"""

LAX_TEST = """routes = solution["routes"]
assert len(routes) == 1
assert routes[0][0] == 0 and routes[0][-1] == 0
print("PASS")
"""

GOOD_TEST = """routes = solution["routes"]
assert len(routes) == 1, "one route"
tour = routes[0]
assert tour[0] == tour[-1] == 0, "depot ends"
assert sorted(tour[1:-1]) == list(range(1, {n})), "every location once"
print("PASS")
"""

CVRP_TEST_REJECT = """print("checking capacity")
print("FAIL: route loads not verified")
"""

CONSTRAINTS = """1. There is exactly one route.
2. The route starts and ends at location 0.
3. Every other location appears exactly once."""

CVRP_CONSTRAINTS = """1. Every route starts and ends at the depot.
2. Every customer is served exactly once.
3. Route demand does not exceed the capacity."""


def fence(code: str) -> str:
    return f"Here is the program.\n\n```python\n{code}```\n"


def _pts(inst) -> str:
    return repr([(loc.x, loc.y) for loc in inst.locations])


def cvrp_program(routes: list[list[int]]) -> str:
    return f"import json\nroutes = {routes!r}\nprint(json.dumps({{'routes': routes}}))\n"


def scenarios(instances: dict) -> list[tuple]:
    """(instance, framework, context, repeat, scripted replies, note)."""
    tsp = instances["TSP-n10-s0"]
    cvrp = instances["P-n16-k8"]
    pts, n = _pts(tsp), tsp.n
    good = fence(TSP_PROGRAM.format(pts=pts))
    from routebench.exact import solve

    cvrp_good = fence(cvrp_program(solve(cvrp).solution.to_lists()))
    none, math_ctx = ContextSpec(), ContextSpec.parse("MATH_FORMULATION")
    sa, sd, sv = FrameworkKind.SINGLE_ATTEMPT, FrameworkKind.SELF_DEBUG, FrameworkKind.SELF_DEBUG_VERIFY
    crash = fence(CRASH.format(pts=pts))
    return [
        (tsp, sa, none, 0, [fence(SKIP_ONE.format(n=n))], "single attempt, infeasible route"),
        (tsp, sa, none, 1, [good], "single attempt, optimal tour"),
        (tsp, sd, none, 0, [crash, good], "syntax error fixed on the second attempt"),
        (tsp, sd, none, 1, [crash, fence(RUNTIME_CRASH), fence(GARBLED), crash], "debug budget exhausted"),
        (
            tsp, sv, none, 0,
            [good, CONSTRAINTS, fence(STRICT_TEST), good, CONSTRAINTS, fence(STRICT_TEST),
             good, CONSTRAINTS, fence(GOOD_TEST.format(n=n))],
            "feasible tour rejected twice by generated tests (two false negatives)",
        ),
        (
            tsp, sv, none, 1,
            [fence(SKIP_ONE.format(n=n)), CONSTRAINTS, fence(LAX_TEST)],
            "infeasible tour accepted by generated tests (false positive)",
        ),
        (
            cvrp, sv, math_ctx, 0,
            [crash, crash, crash, fence(GARBLED)],
            "every debug round fails: no solution",
        ),
        (
            cvrp, sv, math_ctx, 1,
            ([crash, crash, crash, cvrp_good, CVRP_CONSTRAINTS, fence(CVRP_TEST_REJECT)] * 3),
            "all budgets used: 12 generations, tests never pass",
        ),
    ]


def build_transcripts(dataset: Path) -> None:
    from routebench.instances import load_dataset

    instances = {i.name: i for i in load_dataset(dataset)}
    if REPLAY.exists():
        shutil.rmtree(REPLAY)
    (REPLAY / "transcripts").mkdir(parents=True)
    notes = {}
    for inst, fw, ctx, rep, replies, note in scenarios(instances):
        name = cli.transcript_name(inst.name, fw, ctx, rep)
        scripted = ScriptedClient(replies)
        session = RecordingClient(scripted)
        config = ModelConfig(MODEL)
        record = run_framework(inst, fw, ctx, config, session, Budgets(), AssetRegistry(), repeat=rep)
        if scripted.calls != len(replies):
            raise SystemExit(f"{name}: used {scripted.calls} of {len(replies)} replies")
        record_transcript(session, REPLAY / "transcripts" / name)
        notes[name] = {"note": note, "final_status": record.final_status.value}
        print(f"{name}: {record.final_status.value} ({note})")
    (REPLAY / "scenarios.json").write_text(json.dumps(notes, indent=1, sort_keys=True) + "\n")
    (REPLAY / "pricing.json").write_text(json.dumps({MODEL: {"prompt": 10.0, "completion": 30.0}}, indent=1) + "\n")


GRID = [
    # (instances, framework, context, repeats)
    (["TSP-n10-s0"], "all", ["NONE"], 2),
    (["P-n16-k8"], "SELF_DEBUG_VERIFY", ["MATH_FORMULATION"], 2),
]


def replay_args(dataset: Path, out: Path, instances, framework, contexts, repeats) -> list[str]:
    return [
        "run", "--dataset", str(dataset), "--out", str(out), "--experiment", "fixtures",
        "--model", MODEL, "--provider", "replay", "--transcripts", str(REPLAY / "transcripts"),
        "--framework", framework, "--context", *contexts, "--repeats", str(repeats),
        "--pricing", str(REPLAY / "pricing.json"), "--fake-clock", str(FAKE_STEP),
        "--instances", *instances,
    ]


def build_goldens(dataset: Path) -> None:
    out = Path(tempfile.mkdtemp())
    for instances, framework, contexts, repeats in GRID:
        code = cli.main(replay_args(dataset, out, instances, framework, contexts, repeats))
        if code != 0:
            raise SystemExit(f"replay run failed with exit code {code}")
    golden = REPLAY / "golden"
    if golden.exists():
        shutil.rmtree(golden)
    golden.mkdir()
    # Records are appended as runs finish; the golden keeps them sorted by key.
    lines = sorted((out / cli.RECORDS_FILE).read_text().splitlines())
    (golden / "records.jsonl").write_text("\n".join(lines) + "\n")
    report = golden / "report"
    certs = Path(tempfile.mkdtemp())
    cli.main(["solve", "--dataset", str(dataset), "--store", str(certs), "--instances", "TSP-n10-s0", "P-n16-k8"])
    cli.main(["report", "--records", str(golden / "records.jsonl"), "--out", str(report), "--certificates", str(certs)])
    shutil.rmtree(out)
    shutil.rmtree(certs)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--goldens", action="store_true", help="regenerate golden records from the transcripts")
    args = ap.parse_args()
    dataset = Path(tempfile.mkdtemp()) / "ds"
    write_dataset(dataset)
    if args.goldens:
        build_goldens(dataset)
    else:
        build_transcripts(dataset)


if __name__ == "__main__":
    sys.exit(main())
