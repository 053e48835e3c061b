"""Run generated programs in a child process and read back the printed routes.

Isolation here is experiment hygiene (own temp dir, scrubbed environment,
process-group kill on timeout), not a security boundary.
"""

from __future__ import annotations

import enum
import json
import os
import re
import shutil
import signal
import subprocess
import sys
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .core import ProblemInstance, Route, Solution

DEFAULT_TIMEOUT = 60.0
KILL_GRACE = 1.0
SCRIPT_NAME = "solution.py"
ENV_ALLOWLIST = ("PATH", "LANG", "LC_ALL", "HOME", "TMPDIR", "SYSTEMROOT")
# Compiles the script under its relative filename so tracebacks show neither
# temp paths nor interpreter internals.
_BOOTSTRAP = (
    "import sys; sys.argv = [{name!r}]; sys.path.insert(0, '.'); "
    "exec(compile(open({name!r}).read(), {name!r}, 'exec'), {{'__name__': '__main__'}})"
)

_MAX_CHILDREN = threading.BoundedSemaphore(os.cpu_count() or 4)


class ExecStatus(str, enum.Enum):
    OK = "OK"
    NONZERO_EXIT = "NONZERO_EXIT"
    TIMEOUT = "TIMEOUT"
    LAUNCH_FAILURE = "LAUNCH_FAILURE"


@dataclass(frozen=True)
class ExecutionResult:
    status: ExecStatus
    stdout: str
    stderr: str
    wall_time: float
    returncode: int | None = None

    @property
    def ok(self) -> bool:
        return self.status is ExecStatus.OK

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "wall_time": self.wall_time,
            "returncode": self.returncode,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExecutionResult":
        return cls(
            ExecStatus(data["status"]),
            data["stdout"],
            data["stderr"],
            float(data["wall_time"]),
            data.get("returncode"),
        )


def set_max_children(limit: int) -> None:
    """Cap the number of generated programs running at once."""
    global _MAX_CHILDREN
    _MAX_CHILDREN = threading.BoundedSemaphore(limit)


def _child_env() -> dict[str, str]:
    env = {k: os.environ[k] for k in ENV_ALLOWLIST if k in os.environ}
    env["PYTHONHASHSEED"] = "0"
    env["PYTHONDONTWRITEBYTECODE"] = "1"
    return env


def _kill_tree(proc: subprocess.Popen) -> None:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError, AttributeError):
        proc.kill()


def execute_program(
    source: str,
    runner: Sequence[str] | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    workdir: str | Path | None = None,
    keep_artifacts: bool = False,
    clock: Callable[[], float] = time.perf_counter,
) -> ExecutionResult:
    """Write ``source`` into an isolated directory and run it with ``runner``.

    ``runner`` is the interpreter command (default: this Python). ``clock``
    measures wall time and can be swapped for a deterministic one in tests.
    """
    if not source.strip():
        raise ValueError("source must be nonempty")
    runner = list(runner) if runner else [sys.executable]
    base = Path(workdir) if workdir is not None else None
    tmp = Path(tempfile.mkdtemp(prefix="rb_run_", dir=base))
    try:
        (tmp / SCRIPT_NAME).write_text(source)
        cmd = runner + ["-c", _BOOTSTRAP.format(name=SCRIPT_NAME)]
        with _MAX_CHILDREN:
            start = clock()
            try:
                proc = subprocess.Popen(
                    cmd,
                    cwd=tmp,
                    env=_child_env(),
                    stdin=subprocess.DEVNULL,
                    stdout=subprocess.PIPE,
                    stderr=subprocess.PIPE,
                    text=True,
                    start_new_session=True,
                )
            except (FileNotFoundError, PermissionError) as exc:
                return ExecutionResult(ExecStatus.LAUNCH_FAILURE, "", str(exc), clock() - start)
            try:
                out, err = proc.communicate(timeout=timeout)
            except subprocess.TimeoutExpired:
                _kill_tree(proc)
                try:
                    out, err = proc.communicate(timeout=KILL_GRACE)
                except subprocess.TimeoutExpired:
                    out, err = "", ""
                return ExecutionResult(ExecStatus.TIMEOUT, out or "", err or "", clock() - start, None)
            elapsed = clock() - start
        status = ExecStatus.OK if proc.returncode == 0 else ExecStatus.NONZERO_EXIT
        return ExecutionResult(status, out, err, elapsed, proc.returncode)
    finally:
        if not keep_artifacts:
            shutil.rmtree(tmp, ignore_errors=True)


class SolutionParseError(ValueError):
    pass


def _json_objects(text: str) -> list[object]:
    """Every top-level JSON value that starts with '{' in ``text``, in order."""
    decoder = json.JSONDecoder()
    found = []
    i = 0
    while True:
        i = text.find("{", i)
        if i < 0:
            return found
        try:
            obj, end = decoder.raw_decode(text, i)
        except json.JSONDecodeError:
            i += 1
            continue
        found.append(obj)
        i = end


def _routes_from_object(obj: object) -> list[list[int]] | None:
    if not isinstance(obj, dict) or "routes" not in obj:
        return None
    routes = obj["routes"]
    if not isinstance(routes, list) or not routes:
        return None
    if all(isinstance(x, int) and not isinstance(x, bool) for x in routes):
        routes = [routes]
    out = []
    for r in routes:
        if not isinstance(r, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in r):
            return None
        out.append(list(r))
    return out


_ID_LINE = re.compile(r"^[\s\[\(]*-?\d+(?:\s*(?:,|\s|->)\s*-?\d+)+[\s\]\)]*$")


def parse_solution(stdout: str, instance: ProblemInstance) -> Solution:
    """Read the printed solution.

    Preferred form: the last ``{"routes": [[...], ...]}`` object in stdout.
    Fallback: trailing lines consisting only of location ids separated by
    commas, spaces or arrows, one route per line. Every id must exist.
    """
    routes = None
    for obj in reversed(_json_objects(stdout)):
        routes = _routes_from_object(obj)
        if routes is not None:
            break
    if routes is None:
        lines = [ln for ln in stdout.strip().splitlines() if ln.strip()]
        tail = []
        for ln in reversed(lines):
            if not _ID_LINE.match(ln.strip()):
                break
            tail.append([int(t) for t in re.findall(r"-?\d+", ln)])
        want = len(instance.variant.route_depots())
        if tail and len(tail) >= want:
            routes = tail[:want][::-1]
    if routes is None:
        raise SolutionParseError("no solution found in program output")
    unknown = sorted({i for r in routes for i in r if not 0 <= i < instance.n})
    if unknown:
        raise SolutionParseError(f"solution references unknown location id(s) {unknown}")
    return Solution(tuple(Route(tuple(r)) for r in routes))


__all__ = [
    "ExecStatus",
    "ExecutionResult",
    "SolutionParseError",
    "execute_program",
    "parse_solution",
    "set_max_children",
]
