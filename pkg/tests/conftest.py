from __future__ import annotations

import sys
from pathlib import Path

import pytest

from routebench.core import Location, Metric, ProblemInstance, VariantKind, VariantSpec
from routebench.instances import parse_tsplib, vendored_cvrplib, write_dataset

TESTS = Path(__file__).parent
FIXTURES = TESTS / "fixtures"
REPLAY = FIXTURES / "replay"
sys.path.insert(0, str(TESTS))


def make_instance(kind, points, name="t", metric=Metric.EXACT_EUCLIDEAN, demands=None, **params):
    demands = demands or [0] * len(points)
    locs = [Location(i, float(x), float(y), demands[i]) for i, (x, y) in enumerate(points)]
    return ProblemInstance(name, VariantSpec(VariantKind(kind), **params), locs, metric)


SQUARE = [(0, 0), (0, 10), (10, 10), (10, 0)]


@pytest.fixture
def square():
    return make_instance("TSP", SQUARE, name="square")


@pytest.fixture(scope="session")
def cvrplib():
    return {name: parse_tsplib(vendored_cvrplib(name)) for name in ("P-n16-k8", "P-n19-k2", "P-n21-k2", "E-n22-k4", "P-n23-k8")}


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "ds"
    write_dataset(path)
    return path


# Acceptance criteria report: one line per criterion, from the real test outcome.
_CRITERIA: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if report.failed:
        _CRITERIA[name] = "FAIL"
    elif report.when == "call" and report.passed:
        _CRITERIA.setdefault(name, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _CRITERIA.items():
        terminalreporter.write_line(f"{verdict}  {name}")
