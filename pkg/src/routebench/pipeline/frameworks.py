"""The three code-generation frameworks and the RunRecord they produce.

SINGLE_ATTEMPT generates, runs and parses once. SELF_DEBUG feeds execution
and parse failures back to the model. SELF_DEBUG_VERIFY additionally asks the
model for the task's constraints and a unit-test program, runs the tests on
each parsed solution and regenerates on rejection.

Ground-truth verdicts are computed for every parsed solution but are only
ever stored for scoring; nothing derived from them enters a prompt.
"""

from __future__ import annotations

import enum
import json
import re
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..core import ProblemInstance, Solution, build_distance_matrix, evaluate
from ..llm import ChatClient, ChatMessage, LLMError, ModelConfig, PricingTable, Role, Usage, cost
from ..sandbox import DEFAULT_TIMEOUT, ExecStatus, ExecutionResult, SolutionParseError, execute_program, parse_solution
from ..verifier import VerdictReport, check_feasible
from . import prompts
from .assets import AssetRegistry, ContextSpec

RECORD_SCHEMA = "routebench.run/1"


class FrameworkKind(str, enum.Enum):
    SINGLE_ATTEMPT = "SINGLE_ATTEMPT"
    SELF_DEBUG = "SELF_DEBUG"
    SELF_DEBUG_VERIFY = "SELF_DEBUG_VERIFY"


class FinalStatus(str, enum.Enum):
    FEASIBLE = "FEASIBLE"
    INFEASIBLE = "INFEASIBLE"
    NO_SOLUTION = "NO_SOLUTION"


class CallPurpose(str, enum.Enum):
    SOLUTION = "solution"
    CONSTRAINTS = "constraints"
    UNIT_TEST = "unit_test"


@dataclass(frozen=True)
class Budgets:
    debug_rounds: int = 3
    verify_rounds: int = 2
    count_aborted: bool = True
    timeout: float = DEFAULT_TIMEOUT
    test_timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.debug_rounds < 0 or self.verify_rounds < 0:
            raise ValueError("budgets must be nonnegative")
        if self.timeout <= 0 or self.test_timeout <= 0:
            raise ValueError("timeouts must be positive")

    def max_generations(self, framework: FrameworkKind) -> int:
        if framework is FrameworkKind.SINGLE_ATTEMPT:
            return 1
        if framework is FrameworkKind.SELF_DEBUG:
            return 1 + self.debug_rounds
        return (1 + self.debug_rounds) * (1 + self.verify_rounds)

    def to_dict(self) -> dict:
        return {
            "debug_rounds": self.debug_rounds,
            "verify_rounds": self.verify_rounds,
            "count_aborted": self.count_aborted,
            "timeout": self.timeout,
            "test_timeout": self.test_timeout,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Budgets":
        return cls(**data)


@dataclass(frozen=True)
class LLMCall:
    purpose: CallPurpose
    messages: tuple[ChatMessage, ...]
    response: str
    usage: Usage
    cost: float | None

    def to_dict(self) -> dict:
        return {
            "purpose": self.purpose.value,
            "messages": [m.to_dict() for m in self.messages],
            "response": self.response,
            "usage": self.usage.to_dict(),
            "cost": self.cost,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LLMCall":
        return cls(
            CallPurpose(data["purpose"]),
            tuple(ChatMessage.from_dict(m) for m in data["messages"]),
            data["response"],
            Usage.from_dict(data["usage"]),
            data["cost"],
        )


@dataclass(frozen=True)
class LLMVerification:
    constraints: str
    test_source: str
    execution: ExecutionResult
    passed: bool

    def to_dict(self) -> dict:
        return {
            "constraints": self.constraints,
            "test_source": self.test_source,
            "execution": self.execution.to_dict(),
            "passed": self.passed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LLMVerification":
        return cls(
            data["constraints"],
            data["test_source"],
            ExecutionResult.from_dict(data["execution"]),
            bool(data["passed"]),
        )


@dataclass(frozen=True)
class AttemptTrace:
    attempt_index: int
    chain: int
    generated_source: str
    execution: ExecutionResult
    parsed: Solution | None = None
    parse_error: str | None = None
    llm_verifier: LLMVerification | None = None
    ground_truth: VerdictReport | None = None

    def to_dict(self) -> dict:
        return {
            "attempt_index": self.attempt_index,
            "chain": self.chain,
            "generated_source": self.generated_source,
            "execution": self.execution.to_dict(),
            "parsed": self.parsed.to_lists() if self.parsed is not None else None,
            "parse_error": self.parse_error,
            "llm_verifier": self.llm_verifier.to_dict() if self.llm_verifier else None,
            "ground_truth": self.ground_truth.to_dict() if self.ground_truth else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AttemptTrace":
        return cls(
            attempt_index=data["attempt_index"],
            chain=data["chain"],
            generated_source=data["generated_source"],
            execution=ExecutionResult.from_dict(data["execution"]),
            parsed=Solution.of(*data["parsed"]) if data.get("parsed") is not None else None,
            parse_error=data.get("parse_error"),
            llm_verifier=LLMVerification.from_dict(data["llm_verifier"]) if data.get("llm_verifier") else None,
            ground_truth=VerdictReport.from_dict(data["ground_truth"]) if data.get("ground_truth") else None,
        )


@dataclass(frozen=True)
class RunRecord:
    experiment_id: str
    instance: str
    variant: str
    framework: FrameworkKind
    context: ContextSpec
    model: dict
    repeat: int
    budgets: Budgets
    attempts: tuple[AttemptTrace, ...]
    calls: tuple[LLMCall, ...]
    final_status: FinalStatus
    objective: float | None
    aborted: bool = False
    abort_reason: str | None = None
    exec_time: float | None = None
    wall_time: float = 0.0
    usage: Usage = field(default_factory=Usage)
    cost: float | None = None

    @property
    def key(self) -> tuple:
        """Idempotency key within an experiment."""
        return (self.instance, self.framework.value, self.context.label, self.model["model_name"], self.repeat)

    @property
    def generation_calls(self) -> int:
        return sum(1 for c in self.calls if c.purpose is CallPurpose.SOLUTION)

    def to_dict(self) -> dict:
        return {
            "schema": RECORD_SCHEMA,
            "experiment_id": self.experiment_id,
            "instance": self.instance,
            "variant": self.variant,
            "framework": self.framework.value,
            "context": self.context.to_dict(),
            "model": dict(self.model),
            "repeat": self.repeat,
            "budgets": self.budgets.to_dict(),
            "attempts": [a.to_dict() for a in self.attempts],
            "calls": [c.to_dict() for c in self.calls],
            "final_status": self.final_status.value,
            "objective": self.objective,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "exec_time": self.exec_time,
            "wall_time": self.wall_time,
            "usage": self.usage.to_dict(),
            "cost": self.cost,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        if data.get("schema") != RECORD_SCHEMA:
            raise ValueError(f"not a run record (schema {data.get('schema')!r})")
        return cls(
            experiment_id=data["experiment_id"],
            instance=data["instance"],
            variant=data["variant"],
            framework=FrameworkKind(data["framework"]),
            context=ContextSpec.from_dict(data["context"]),
            model=dict(data["model"]),
            repeat=int(data["repeat"]),
            budgets=Budgets.from_dict(data["budgets"]),
            attempts=tuple(AttemptTrace.from_dict(a) for a in data["attempts"]),
            calls=tuple(LLMCall.from_dict(c) for c in data["calls"]),
            final_status=FinalStatus(data["final_status"]),
            objective=data["objective"],
            aborted=bool(data.get("aborted", False)),
            abort_reason=data.get("abort_reason"),
            exec_time=data.get("exec_time"),
            wall_time=float(data.get("wall_time", 0.0)),
            usage=Usage.from_dict(data.get("usage", {})),
            cost=data.get("cost"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def loads(cls, line: str) -> "RunRecord":
        return cls.from_dict(json.loads(line))


_FAIL_LINE = re.compile(r"^\s*FAIL", re.M)


def unit_tests_passed(result: ExecutionResult) -> bool:
    """Tests accept a solution only if they exit cleanly and report no FAIL line."""
    return result.status is ExecStatus.OK and not _FAIL_LINE.search(result.stdout)


class _Aborted(Exception):
    pass


class _Run:
    def __init__(self, instance, framework, context, config, client, budgets, assets, runner, pricing, clock):
        self.instance = instance
        self.framework = framework
        self.config = config
        self.client = client
        self.budgets = budgets
        self.runner = runner
        self.pricing = pricing
        self.clock = clock
        self.base = tuple(prompts.build_prompt(instance, context, assets))
        self.calls: list[LLMCall] = []
        self.attempts: list[AttemptTrace] = []

    def ask(self, purpose: CallPurpose, messages: Sequence[ChatMessage]) -> str:
        try:
            result = self.client.complete(messages, self.config)
        except LLMError as exc:
            raise _Aborted(f"{type(exc).__name__}: {exc}") from None
        price = cost(result.usage, self.config.model_name, self.pricing) if self.pricing else None
        self.calls.append(LLMCall(purpose, tuple(messages), result.text, result.usage, price))
        return result.text

    def execute(self, source: str, timeout: float) -> ExecutionResult:
        if not source.strip():
            return ExecutionResult(ExecStatus.NONZERO_EXIT, "", "empty program", 0.0, None)
        return execute_program(source, runner=self.runner, timeout=timeout, clock=self.clock)

    def chain(self, index: int, messages: list[ChatMessage]) -> AttemptTrace:
        """Generate, run and parse, debugging within budget; returns the last attempt."""
        rounds = 0 if self.framework is FrameworkKind.SINGLE_ATTEMPT else self.budgets.debug_rounds
        while True:
            reply = self.ask(CallPurpose.SOLUTION, messages)
            source = prompts.extract_code(reply)
            execution = self.execute(source, self.budgets.timeout)
            parsed = error = None
            if execution.ok:
                try:
                    parsed = parse_solution(execution.stdout, self.instance)
                except SolutionParseError as exc:
                    error = str(exc)
            truth = check_feasible(self.instance, parsed) if parsed is not None else None
            attempt = AttemptTrace(len(self.attempts), index, source, execution, parsed, error, None, truth)
            self.attempts.append(attempt)
            if parsed is not None or rounds == 0:
                return attempt
            rounds -= 1
            feedback = prompts.execution_feedback(execution.status.value, execution.stderr, execution.stdout, error)
            messages = messages + [ChatMessage(Role.ASSISTANT, reply), ChatMessage(Role.USER, feedback)]

    def verify(self, attempt: AttemptTrace) -> LLMVerification:
        constraints = self.ask(CallPurpose.CONSTRAINTS, prompts.constraint_prompt(self.instance))
        test_reply = self.ask(CallPurpose.UNIT_TEST, prompts.unit_test_prompt(self.instance, constraints))
        test_source = prompts.extract_code(test_reply)
        program = prompts.unit_test_program(test_source, attempt.parsed.to_lists())
        result = self.execute(program, self.budgets.test_timeout)
        check = LLMVerification(constraints, test_source, result, unit_tests_passed(result))
        self.attempts[attempt.attempt_index] = _with_verifier(attempt, check)
        return check

    def run(self) -> str | None:
        try:
            last = self.chain(0, list(self.base))
            if self.framework is not FrameworkKind.SELF_DEBUG_VERIFY:
                return None
            for regen in range(self.budgets.verify_rounds + 1):
                if last.parsed is None:
                    return None
                check = self.verify(last)
                if check.passed or regen == self.budgets.verify_rounds:
                    return None
                feedback = prompts.verification_feedback(check.execution.stdout, check.execution.stderr)
                messages = list(self.base) + [
                    ChatMessage(Role.ASSISTANT, f"```python\n{last.generated_source}```"),
                    ChatMessage(Role.USER, feedback),
                ]
                last = self.chain(regen + 1, messages)
        except _Aborted as exc:
            return str(exc)
        return None


def _with_verifier(attempt: AttemptTrace, check: LLMVerification) -> AttemptTrace:
    return AttemptTrace(
        attempt.attempt_index,
        attempt.chain,
        attempt.generated_source,
        attempt.execution,
        attempt.parsed,
        attempt.parse_error,
        check,
        attempt.ground_truth,
    )


def run_framework(
    instance: ProblemInstance,
    framework: FrameworkKind,
    context: ContextSpec,
    config: ModelConfig,
    client: ChatClient,
    budgets: Budgets | None = None,
    assets: AssetRegistry | None = None,
    *,
    experiment_id: str = "default",
    repeat: int = 0,
    runner: Sequence[str] | None = None,
    pricing: PricingTable | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> RunRecord:
    """Run one attempt chain and score it against the ground-truth verifier.

    The final solution is the last one any attempt managed to parse; the run
    is FEASIBLE exactly when that solution passes :func:`check_feasible`.
    """
    framework = FrameworkKind(framework)
    budgets = budgets or Budgets()
    run = _Run(instance, framework, context, config, client, budgets, assets or AssetRegistry(), runner, pricing, clock)
    abort = run.run()

    final = next((a for a in reversed(run.attempts) if a.parsed is not None), None)
    objective = exec_time = None
    if final is None:
        status = FinalStatus.NO_SOLUTION
    elif final.ground_truth.feasible:
        status = FinalStatus.FEASIBLE
        objective = evaluate(instance, final.parsed, build_distance_matrix(instance)).value
        exec_time = final.execution.wall_time
    else:
        status = FinalStatus.INFEASIBLE
        exec_time = final.execution.wall_time

    usage = Usage()
    for c in run.calls:
        usage = usage + c.usage
    prices = [c.cost for c in run.calls]
    total_cost = sum(prices) if prices and all(p is not None for p in prices) else None
    return RunRecord(
        experiment_id=experiment_id,
        instance=instance.name,
        variant=instance.kind.value,
        framework=framework,
        context=context,
        model=config.describe(),
        repeat=repeat,
        budgets=budgets,
        attempts=tuple(run.attempts),
        calls=tuple(run.calls),
        final_status=status,
        objective=objective,
        aborted=abort is not None,
        abort_reason=abort,
        exec_time=exec_time,
        wall_time=sum(a.execution.wall_time for a in run.attempts),
        usage=usage,
        cost=total_cost,
    )
