"""Shared fixtures and the per-criterion acceptance summary."""

from __future__ import annotations

from collections import defaultdict

import numpy as np
import pytest

from sensorsel import SelectionProblem

EX_A_X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
EX_A_Y = np.array([[2.0, 0.0]])

_outcomes: dict[int, list[bool]] = defaultdict(list)
_titles: dict[int, str] = {}


def random_problem(
    rng: np.random.Generator,
    n: int,
    m: int,
    n_y: int,
    p: int,
    lambda_tilde: float = 0.0,
    rank: int | None = None,
) -> SelectionProblem:
    """Gaussian instance; ``rank`` below min(n, m) makes X rank deficient."""
    if rank is None:
        x = rng.standard_normal((n, m))
    else:
        x = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, m))
    y = rng.standard_normal((n_y, m))
    return SelectionProblem(x, y, lambda_tilde=lambda_tilde, budget_p=p)


@pytest.fixture
def ex_a() -> SelectionProblem:
    return SelectionProblem(EX_A_X, EX_A_Y, lambda_tilde=0.0, budget_p=2)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, title): acceptance criterion covered by a test"
    )


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    number = getattr(report, "criterion_number", None)
    if number is None:
        return
    _outcomes[number].append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep = outcome.get_result()
        rep.criterion_number = mark.args[0]
        _titles[mark.args[0]] = mark.args[1]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        ok = all(_outcomes[number])
        n = len(_outcomes[number])
        terminalreporter.write_line(
            f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {_titles[number]} ({n} checks)"
        )
