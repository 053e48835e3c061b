"""Synthetic run records for metric tests."""

from routebench.llm import Usage
from routebench.pipeline import Budgets, ContextSpec, FinalStatus, FrameworkKind, RunRecord

# Single-attempt success rates per task, with the feasible/total counts behind them.
TABLE1_SINGLE = {
    "TSP": (22, 75),
    "BTSP": (14, 75),
    "GTSP": (47, 75),
    "KTSP": (31, 75),
    "MTSP": (6, 25),
    "MINMAX_MTSP": (10, 25),
    "MD_MTSP": (0, 25),
    "CVRP": (2, 25),
}


def fake_record(variant="TSP", status=FinalStatus.FEASIBLE, *, instance=None, repeat=0,
                framework=FrameworkKind.SINGLE_ATTEMPT, objective=None, exec_time=None,
                cost=None, aborted=False, experiment="exp", model="m", count_aborted=True):
    status = FinalStatus(status)
    if status is FinalStatus.FEASIBLE and objective is None:
        objective = 100.0
    return RunRecord(
        experiment_id=experiment,
        instance=instance or f"{variant}-i",
        variant=variant,
        framework=FrameworkKind(framework),
        context=ContextSpec(),
        model={"model_name": model, "temperature": 0.2, "max_tokens": 10},
        repeat=repeat,
        budgets=Budgets(count_aborted=count_aborted),
        attempts=(),
        calls=(),
        final_status=status,
        objective=objective if status is FinalStatus.FEASIBLE else None,
        aborted=aborted,
        abort_reason="boom" if aborted else None,
        exec_time=exec_time,
        usage=Usage(),
        cost=cost,
    )


def table1_records():
    out = []
    for variant, (ok, total) in TABLE1_SINGLE.items():
        for i in range(total):
            status = FinalStatus.FEASIBLE if i < ok else FinalStatus.INFEASIBLE
            out.append(fake_record(variant, status, repeat=i))
    return out
