"""Acceptance suite. Each test is one criterion; the run ends with a PASS/FAIL line per criterion."""

import json
import math
import random
import time
from pathlib import Path

import pytest

import oracles
from conftest import REPLAY, SQUARE, make_instance
from records import table1_records
from routebench import cli
from routebench.exact import CertificateStatus, solve, solve_multirobot
from routebench.instances import published_optimum, vendored_cvrplib
from routebench.metrics import aggregate, confusion_table, percentage
from routebench.pipeline import Budgets, ConfusionLabel, FinalStatus, FrameworkKind, RunRecord, verification_events
from routebench.sandbox import ExecStatus, execute_program

ROOT = Path(__file__).resolve().parents[1]


def _points(rng, n):
    return [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n)]


@pytest.mark.criterion("exact solvers match brute force on 20 instances per single-robot variant in under 10 s")
def test_oracle_equivalence():
    start = time.perf_counter()
    for seed in range(20):
        rng = random.Random(7000 + seed)
        n = rng.randint(3, 8)
        pts = _points(rng, n)
        ids = list(range(1, n))
        rng.shuffle(ids)
        groups = rng.randint(1, min(4, n - 1))
        cases = [
            (make_instance("TSP", pts), oracles.brute_tsp),
            (make_instance("BTSP", pts), oracles.brute_btsp),
            (make_instance("KTSP", pts, k=rng.randint(2, n)), oracles.brute_ktsp),
            (make_instance("GTSP", pts, clusters=tuple(tuple(sorted(ids[g::groups])) for g in range(groups))), oracles.brute_gtsp),
        ]
        for inst, oracle in cases:
            assert math.isclose(solve(inst).value.value, oracle(inst), rel_tol=1e-9, abs_tol=1e-9), (inst.kind, seed)
    assert time.perf_counter() - start < 10.0


@pytest.mark.criterion("k-TSP with k = n, singleton GTSP and 1-robot m-TSP equal the TSP optimum on 10 instances")
def test_reductions():
    for seed in range(10):
        rng = random.Random(8000 + seed)
        n = rng.randint(3, 10)
        pts = _points(rng, n)
        base = solve(make_instance("TSP", pts)).value.value
        others = [
            make_instance("KTSP", pts, k=n),
            make_instance("GTSP", pts, clusters=tuple((i,) for i in range(1, n))),
            make_instance("MTSP", pts, num_robots=1),
        ]
        for inst in others:
            assert math.isclose(solve(inst).value.value, base, rel_tol=1e-9, abs_tol=1e-9), (inst.kind, seed)


@pytest.mark.criterion("unit-10 square gives TSP 40.0 and BTSP 10.0")
def test_square():
    assert solve(make_instance("TSP", SQUARE)).value.value == 40.0
    assert solve(make_instance("BTSP", SQUARE)).value.value == 10.0


@pytest.mark.criterion("CVRP optima proven on P-n16-k8 and E-n22-k4, matching set partitioning and published values")
@pytest.mark.parametrize("name", ["P-n16-k8", "E-n22-k4"])
def test_cvrp_ground_truth(cvrplib, name):
    inst = cvrplib[name]
    cert = solve_multirobot(inst, time_budget=600.0)
    assert cert.status is CertificateStatus.PROVEN_OPTIMAL
    assert cert.value.value == oracles.cvrp_set_partitioning(inst)
    assert cert.value.value == published_optimum(vendored_cvrplib(name))


@pytest.mark.criterion("dataset gen emits the 80-instance layout, identically on two runs")
def test_dataset_shape(tmp_path):
    from routebench.instances import load_dataset

    trees = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["dataset", "gen", "--out", str(out)]) == 0
        trees.append({p.relative_to(out).as_posix(): p.read_bytes() for p in out.rglob("*") if p.is_file()})
    assert trees[0] == trees[1]
    instances = load_dataset(tmp_path / "a")
    assert len(instances) == 80
    by_kind = {}
    for inst in instances:
        by_kind.setdefault(inst.kind.value, []).append(inst.n)
    for kind in ("TSP", "BTSP", "KTSP", "GTSP"):
        assert sorted(by_kind[kind]) == [10] * 5 + [15] * 5 + [20] * 5
    for kind in ("MTSP", "MINMAX_MTSP", "MD_MTSP", "CVRP"):
        assert len(by_kind[kind]) == 5


@pytest.mark.criterion("success rate 22/75 = 29.33 and the single-attempt Mean row = 28.00")
def test_metric_formulas():
    assert abs(percentage(22, 75) - 29.33) <= 0.005
    table = aggregate(table1_records(), group_by=("task", "framework"))
    mean = next(r for r in table.rows if r[0] == "Mean")
    assert abs(mean[table.columns.index("success_rate")] - 28.00) <= 0.005


def _replayed(dataset, out):
    from fixtures.build_fixtures import GRID, replay_args

    for instances, framework, contexts, repeats in GRID:
        assert cli.main(replay_args(dataset, out, instances, framework, contexts, repeats)) == 0
    return sorted((out / cli.RECORDS_FILE).read_text().splitlines())


@pytest.mark.criterion("replay fixtures reproduce the golden records byte for byte, FN and FP chains counted")
def test_pipeline_determinism(dataset_dir, tmp_path):
    lines = _replayed(dataset_dir, tmp_path / "out")
    assert lines == (REPLAY / "golden" / "records.jsonl").read_text().splitlines()
    records = [RunRecord.loads(l) for l in lines]
    assert {r.framework for r in records} == set(FrameworkKind)
    events = {r.key: verification_events(r) for r in records}
    assert any(ConfusionLabel.FALSE_NEGATIVE in e for e in events.values())
    assert any(ConfusionLabel.FALSE_POSITIVE in e for e in events.values())
    rows = {row[0]: row[1:] for row in confusion_table(records).rows}
    fn = sum(e.count(ConfusionLabel.FALSE_NEGATIVE) for e in events.values())
    fp = sum(e.count(ConfusionLabel.FALSE_POSITIVE) for e in events.values())
    assert rows["Total"] == [fn, 6, fp, 1] == [5, 6, 1, 1]
    assert rows["TSP"] == [2, 3, 1, 1]


@pytest.mark.criterion("budgets 3/2 cap generation calls; the exhausting fixture ends NO_SOLUTION")
def test_budget_enforcement():
    records = [RunRecord.loads(l) for l in (REPLAY / "golden" / "records.jsonl").read_text().splitlines()]
    budgets = Budgets(debug_rounds=3, verify_rounds=2)
    assert budgets.max_generations(FrameworkKind.SELF_DEBUG_VERIFY) == 12
    for r in records:
        assert r.budgets == budgets
        assert r.generation_calls <= budgets.max_generations(r.framework)
    by_key = {(r.instance, r.framework, r.repeat): r for r in records}
    exhausted = by_key[("TSP-n10-s0", FrameworkKind.SELF_DEBUG, 1)]
    assert exhausted.generation_calls == 4 and exhausted.final_status is FinalStatus.NO_SOLUTION
    assert by_key[("P-n16-k8", FrameworkKind.SELF_DEBUG_VERIFY, 1)].generation_calls == 12


@pytest.mark.criterion("sandbox: sleep-forever times out under 3 s; syntax error is NONZERO_EXIT with stderr")
def test_sandbox():
    start = time.perf_counter()
    res = execute_program("import time\nwhile True:\n    time.sleep(1)\n", timeout=2.0)
    assert res.status is ExecStatus.TIMEOUT and time.perf_counter() - start < 3.0
    res = execute_program("def f(:\n")
    assert res.status is ExecStatus.NONZERO_EXIT and res.stderr.strip()


@pytest.mark.criterion("README states that published LLM success rates and gaps are not reproducible")
def test_non_reproducibility_note():
    text = (ROOT / "README.md").read_text().lower()
    assert "not reproducible" in text
    for reason in ("sampling", "model versions", "cost"):
        assert reason in text
