"""Shared fixtures and the acceptance summary printed after the run."""

from __future__ import annotations

from collections import defaultdict

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

CRITERIA = {
    1: "series fidelity",
    2: "moment-matrix rank and recovery",
    3: "Vandermonde determinant",
    4: "complex/real correspondence",
    5: "branch-cut bound",
    6: "elimination identities",
    7: "3D-to-2D reduction",
    8: "preferred axis",
    9: "C-matrix probe baseline",
    10: "CLI contract",
}

_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)
_metrics: dict[int, list[str]] = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _outcomes[int(marker.args[0])].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, label in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            tr.write_line(f"criterion {n:2d} ({label}): NOT RUN")
            continue
        bad = [name for name, o in results if o != "passed"]
        status = "PASS" if not bad else "FAIL"
        tail = f" [{', '.join(bad)}]" if bad else ""
        tr.write_line(f"criterion {n:2d} ({label}): {status} ({len(results)} tests){tail}")
        for line in _metrics.get(n, []):
            tr.write_line(f"    {line}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def metric(request):
    """Record a measured value for the acceptance summary of the test's criterion."""
    marker = request.node.get_closest_marker("criterion")
    n = int(marker.args[0]) if marker else 0

    def note(name: str, value) -> None:
        text = f"{value:.3e}" if isinstance(value, float) else str(value)
        _metrics[n].append(f"{name}: {text}")

    return note
