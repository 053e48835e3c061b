import json
import re

import pytest

from conftest import REPLAY, SQUARE, make_instance
from routebench import cli
from routebench.core import Solution, VariantKind
from routebench.exact import solve
from routebench.llm import FixtureError, ModelConfig, RecordingClient, ScriptedClient
from routebench.pipeline import (
    Approach,
    AssetError,
    AssetRegistry,
    Budgets,
    CallPurpose,
    ConfusionLabel,
    ContextKind,
    ContextSpec,
    FinalStatus,
    FrameworkKind,
    RunRecord,
    classify_approach,
    classify_verifier_outcome,
    run_framework,
    scan_imports,
    verification_events,
)
from routebench.pipeline.assets import summarize_paper
from routebench.pipeline.prompts import build_prompt, extract_code, unit_test_program
from routebench.verifier import check_feasible

TSP = make_instance("TSP", SQUARE, name="sq")
CFG = ModelConfig("m")
NONE = ContextSpec()
ASSETS = AssetRegistry()

GOOD = '```python\nimport json\nprint(json.dumps({"routes": [[0, 1, 2, 3, 0]]}))\n```'
BAD = '```python\nimport json\nprint(json.dumps({"routes": [[0, 1, 2, 0]]}))\n```'
CRASH = "```python\nraise SystemExit(3)\n```"
CONSTRAINTS = "1. one route"
PASS_TEST = '```python\nassert solution["routes"]\nprint("PASS")\n```'
FAIL_TEST = '```python\nprint("FAIL: nope")\n```'


def _run(framework, replies, budgets=None, instance=TSP, context=NONE):
    client = ScriptedClient(replies)
    record = run_framework(instance, framework, context, CFG, client, budgets, ASSETS)
    return record, client


# prompts and assets

def test_none_context_has_no_block():
    text = build_prompt(TSP, NONE, ASSETS)[1].content
    assert "formulation" not in text.lower() and "pseudo-code" not in text.lower()
    assert "0: 0, 0" in text and "3: 10, 0" in text


def test_formulation_included_verbatim():
    text = build_prompt(TSP, ContextSpec(ContextKind.MATH_FORMULATION), ASSETS)[1].content
    assert ASSETS.formulation(VariantKind.TSP).strip() in text


def test_pseudo_code_included():
    ids = ASSETS.asset_ids(ContextKind.PSEUDO_CODE, VariantKind.TSP)
    assert len(ids) == 2
    for asset_id in ids:
        body = ASSETS.pseudo_code(VariantKind.TSP, asset_id)["text"].strip()
        assert body in build_prompt(TSP, ContextSpec(ContextKind.PSEUDO_CODE, asset_id), ASSETS)[1].content


def test_every_variant_has_assets():
    for kind in VariantKind:
        assert ASSETS.formulation(kind).strip()
        assert len(ASSETS.asset_ids(ContextKind.PSEUDO_CODE, kind)) == 2
        assert len(ASSETS.asset_ids(ContextKind.PAPER_SUMMARY, kind)) == 2


def test_prompt_is_deterministic():
    ctx = ContextSpec(ContextKind.MATH_FORMULATION)
    assert build_prompt(TSP, ctx, ASSETS) == build_prompt(TSP, ctx, ASSETS)


def test_missing_asset_is_a_config_error():
    with pytest.raises(AssetError):
        build_prompt(TSP, ContextSpec(ContextKind.PSEUDO_CODE, "nope"), ASSETS)
    with pytest.raises(AssetError, match="summarize"):
        build_prompt(TSP, ContextSpec(ContextKind.PAPER_SUMMARY, "paper-1"), ASSETS)


def test_context_spec_parse():
    spec = ContextSpec.parse("pseudo_code:held-karp")
    assert spec.kind is ContextKind.PSEUDO_CODE and spec.label == "PSEUDO_CODE:held-karp"
    assert ContextSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(ValueError):
        ContextSpec.parse("PSEUDO_CODE")
    with pytest.raises(ValueError):
        ContextSpec.parse("NONE:x")


def test_summary_is_cached(tmp_path):
    client = ScriptedClient(["short summary"])
    first = summarize_paper("a long paper", client, CFG, tmp_path)
    again = summarize_paper("a long paper", client, CFG, tmp_path)
    assert (first.cached, again.cached) == (False, True)
    assert again.summary == "short summary" and client.calls == 1
    assert AssetRegistry(summary_cache=tmp_path).cached_summary("a long paper") == "short summary"


def test_summary_of_empty_text(tmp_path):
    with pytest.raises(ValueError):
        summarize_paper("  ", ScriptedClient([]), CFG, tmp_path)


def test_paper_slot_with_cached_summary(tmp_path):
    root = tmp_path / "assets"
    slot = root / "papers" / "TSP"
    slot.mkdir(parents=True)
    (slot / "p.json").write_text(json.dumps({"paper_text": "body", "summary": None}))
    summarize_paper("body", ScriptedClient(["the gist"]), CFG, tmp_path / "cache")
    reg = AssetRegistry(root, tmp_path / "cache")
    assert "the gist" in build_prompt(TSP, ContextSpec(ContextKind.PAPER_SUMMARY, "p"), reg)[1].content


def test_extract_code():
    assert extract_code("x\n```\nA\n```\n```python\nB\n```") == "B\n"
    assert extract_code("```js\nA\n```") == "A\n"
    assert extract_code("print(1)") == "print(1)\n"


def test_unit_test_program_binds_solution():
    src = unit_test_program("print(solution['routes'])", [[0, 1, 0]])
    ns = {}
    import contextlib
    import io

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        exec(src, ns)
    assert buf.getvalue().strip() == "[[0, 1, 0]]"


# framework traces

def test_single_attempt_feasible():
    record, client = _run(FrameworkKind.SINGLE_ATTEMPT, [GOOD])
    assert record.final_status is FinalStatus.FEASIBLE and record.objective == 40.0
    assert client.calls == 1 and len(record.attempts) == 1
    assert record.exec_time is not None and record.usage.prompt_tokens > 0


def test_single_attempt_never_retries():
    record, client = _run(FrameworkKind.SINGLE_ATTEMPT, [CRASH, GOOD])
    assert record.final_status is FinalStatus.NO_SOLUTION and client.calls == 1


def test_single_attempt_infeasible():
    record, _ = _run(FrameworkKind.SINGLE_ATTEMPT, [BAD])
    assert record.final_status is FinalStatus.INFEASIBLE and record.objective is None


def test_self_debug_recovers_and_sends_feedback():
    rec = RecordingClient(ScriptedClient([CRASH, GOOD]))
    record = run_framework(TSP, FrameworkKind.SELF_DEBUG, NONE, CFG, rec, None, ASSETS)
    assert record.final_status is FinalStatus.FEASIBLE and len(record.attempts) == 2
    second = rec.entries[1].messages
    assert [m.role.value for m in second] == ["system", "user", "assistant", "user"]
    assert "NONZERO_EXIT" in second[-1].content


def test_self_debug_budget():
    record, client = _run(FrameworkKind.SELF_DEBUG, [CRASH] * 10, Budgets(debug_rounds=2))
    assert client.calls == 3 and record.final_status is FinalStatus.NO_SOLUTION


def test_infeasible_parse_ends_debugging():
    # debugging only reacts to crashes and unparsable output, not to infeasibility
    record, client = _run(FrameworkKind.SELF_DEBUG, [BAD, GOOD])
    assert client.calls == 1 and record.final_status is FinalStatus.INFEASIBLE


def test_verify_accepts_first_solution():
    record, client = _run(FrameworkKind.SELF_DEBUG_VERIFY, [GOOD, CONSTRAINTS, PASS_TEST])
    assert client.calls == 3 and record.final_status is FinalStatus.FEASIBLE
    assert [c.purpose for c in record.calls] == [CallPurpose.SOLUTION, CallPurpose.CONSTRAINTS, CallPurpose.UNIT_TEST]
    assert verification_events(record) == [ConfusionLabel.TRUE_POSITIVE]


def test_verify_rejection_regenerates():
    replies = [BAD, CONSTRAINTS, FAIL_TEST, GOOD, CONSTRAINTS, PASS_TEST]
    record, client = _run(FrameworkKind.SELF_DEBUG_VERIFY, replies)
    assert client.calls == 6 and record.final_status is FinalStatus.FEASIBLE
    assert verification_events(record) == [ConfusionLabel.TRUE_NEGATIVE, ConfusionLabel.TRUE_POSITIVE]


def test_verify_budget_is_hard():
    budgets = Budgets()
    replies = ([CRASH] * 3 + [GOOD, CONSTRAINTS, FAIL_TEST]) * 5
    record, _ = _run(FrameworkKind.SELF_DEBUG_VERIFY, replies, budgets)
    assert record.generation_calls == budgets.max_generations(FrameworkKind.SELF_DEBUG_VERIFY) == 12
    assert record.final_status is FinalStatus.FEASIBLE
    assert verification_events(record) == [ConfusionLabel.FALSE_NEGATIVE] * 3


@pytest.mark.parametrize("debug, verify", [(0, 0), (1, 1), (2, 3)])
def test_generation_bound(debug, verify):
    budgets = Budgets(debug_rounds=debug, verify_rounds=verify)
    replies = ([CRASH] * debug + [GOOD, CONSTRAINTS, FAIL_TEST]) * (verify + 2)
    record, _ = _run(FrameworkKind.SELF_DEBUG_VERIFY, replies, budgets)
    assert record.generation_calls == (1 + debug) * (1 + verify)


def test_final_solution_is_last_parsed():
    # the regenerated chain never parses, so the earlier infeasible solution stands
    replies = [BAD, CONSTRAINTS, FAIL_TEST] + [CRASH] * 4
    record, _ = _run(FrameworkKind.SELF_DEBUG_VERIFY, replies, Budgets(verify_rounds=1))
    assert record.final_status is FinalStatus.INFEASIBLE


def test_llm_failure_aborts_run():
    record, _ = _run(FrameworkKind.SELF_DEBUG, [CRASH])
    assert record.aborted and "FixtureError" in record.abort_reason
    assert record.final_status is FinalStatus.NO_SOLUTION


def test_record_round_trip():
    record, _ = _run(FrameworkKind.SELF_DEBUG_VERIFY, [BAD, CONSTRAINTS, FAIL_TEST, GOOD, CONSTRAINTS, PASS_TEST])
    line = record.dumps()
    assert RunRecord.loads(line).dumps() == line
    assert "\n" not in line


def test_prompts_never_leak_ground_truth():
    inst = make_instance("TSP", [(0, 0), (0, 7), (9, 9), (13, 1), (4, 3)], name="leak")
    optimum = solve(inst).value.value
    rec = RecordingClient(ScriptedClient([BAD.replace("[0, 1, 2, 0]", "[0, 1, 2, 3, 4, 0]"), CONSTRAINTS, FAIL_TEST, CRASH, BAD, CONSTRAINTS, FAIL_TEST]))
    run_framework(inst, FrameworkKind.SELF_DEBUG_VERIFY, ContextSpec(ContextKind.MATH_FORMULATION), CFG, rec,
                  Budgets(verify_rounds=1), ASSETS)
    text = "\n".join(m.content for e in rec.entries for m in e.messages)
    assert "COVERAGE" not in text and "feasib" not in text.lower()
    for digits in {f"{optimum:.2f}", f"{optimum:.4f}", repr(optimum)}:
        assert digits not in text


# analysis

def test_confusion_labels():
    ok = check_feasible(TSP, Solution.of([0, 1, 2, 3, 0]))
    bad = check_feasible(TSP, Solution.of([0, 1, 0]))
    assert classify_verifier_outcome(True, ok) is ConfusionLabel.TRUE_POSITIVE
    assert classify_verifier_outcome(False, ok) is ConfusionLabel.FALSE_NEGATIVE
    assert classify_verifier_outcome(True, bad) is ConfusionLabel.FALSE_POSITIVE
    assert classify_verifier_outcome(False, bad) is ConfusionLabel.TRUE_NEGATIVE


@pytest.mark.parametrize("source, tags", [
    ("import gurobipy as gp", {"Gurobi"}),
    ("from pulp import LpProblem", {"PuLP"}),
    ("from ortools.constraint_solver import pywrapcp", {"OR-Tools"}),
    ("import numpy, pyomo.environ as pyo", {"Pyomo"}),
    ("m = __import__('mip')", {"MIP"}),
    ("from docplex.mp.model import Model\ndef broken(:", {"Docplex"}),
    ("# import pulp\nprint('import gurobipy')", set()),
    ("import numpy as np", set()),
])
def test_scan_imports(source, tags):
    assert scan_imports(source) == tags


def test_classify_approach():
    assert classify_approach("# Held-Karp dynamic programming over bitmask subsets") is Approach.EXACT
    assert classify_approach("def nearest_neighbor(): pass  # then 2-opt") is Approach.HEURISTIC
    assert classify_approach("print(1)") is Approach.UNKNOWN
    assert classify_approach("import pulp") is Approach.EXACT
    assert classify_approach("greedy", overrides={"k": "exact"}, key="k") is Approach.EXACT


# golden replay

def _replay(dataset, out):
    from fixtures.build_fixtures import GRID, replay_args

    for instances, framework, contexts, repeats in GRID:
        assert cli.main(replay_args(dataset, out, instances, framework, contexts, repeats)) == 0
    return sorted((out / cli.RECORDS_FILE).read_text().splitlines())


def test_golden_records_replay_exactly(dataset_dir, tmp_path):
    golden = (REPLAY / "golden" / "records.jsonl").read_text().splitlines()
    assert _replay(dataset_dir, tmp_path / "out") == golden


def test_golden_scenarios_match_notes():
    notes = json.loads((REPLAY / "scenarios.json").read_text())
    records = [RunRecord.loads(l) for l in (REPLAY / "golden" / "records.jsonl").read_text().splitlines()]
    assert len(records) == len(notes) == 8
    for r in records:
        name = cli.transcript_name(r.instance, r.framework, r.context, r.repeat)
        assert notes[name]["final_status"] == r.final_status.value
        assert r.generation_calls <= r.budgets.max_generations(r.framework)


def test_replay_drift_is_detected(dataset_dir, tmp_path):
    from routebench.instances import load_instance

    inst = load_instance(next(dataset_dir.rglob("TSP-n10-s0.json")))
    path = REPLAY / "transcripts" / cli.transcript_name(inst.name, FrameworkKind.SINGLE_ATTEMPT, NONE, 1)
    from routebench.llm import ReplayClient

    cfg = ModelConfig("fixture-model", provider="replay", transcript=str(path))
    record = run_framework(inst, FrameworkKind.SINGLE_ATTEMPT, ContextSpec(ContextKind.MATH_FORMULATION), cfg,
                           ReplayClient(path))
    assert record.aborted and "mismatch" in record.abort_reason
