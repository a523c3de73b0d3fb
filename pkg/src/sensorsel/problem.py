"""Subset-selection problem for ridge regression and its exact oracles.

Given snapshots ``X`` (N x M) and outputs ``Y`` (N_y x M), the objective of
a sensor set ``S`` is

    J(S) = trace(Y X_S^T (X_S X_S^T + lam I)^-1 X_S Y^T),   lam = M * lambda_tilde

which is the output energy explained by the ridge estimator built on the
rows ``S``.  Sensor indices are 0-based row positions throughout the
library; the command-line reports translate them to 1-based labels.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    DimensionMismatch,
    InfeasibleSubset,
    InvalidBudget,
    NotPositiveDefinite,
    TooLargeForExhaustive,
)
from .linalg import as_matrix, cholesky_factor, cholesky_solve

# Scores closer than this fraction of trace(Y Y^T) count as tied.
TIE_RTOL = 1e-10
EXHAUSTIVE_LIMIT = 10**6


class Termination(str, enum.Enum):
    BUDGET_REACHED = "budget_reached"
    FEASIBLE_SET_EXHAUSTED = "feasible_set_exhausted"


@dataclass(frozen=True)
class SelectionProblem:
    """Inputs ``x`` (N x M), outputs ``y`` (N_y x M), per-sample
    regularization ``lambda_tilde`` and sensor budget ``budget_p``."""

    x: np.ndarray
    y: np.ndarray
    lambda_tilde: float = 0.0
    budget_p: int = 1

    def __post_init__(self):
        x = as_matrix(self.x, name="x")
        y = as_matrix(self.y, name="y")
        if x.shape[1] != y.shape[1]:
            raise DimensionMismatch(
                f"x has {x.shape[1]} snapshots but y has {y.shape[1]}"
            )
        lt = float(self.lambda_tilde)
        if not (lt >= 0.0 and math.isfinite(lt)):
            raise ValueError(f"lambda_tilde must be finite and >= 0, got {lt}")
        p = int(self.budget_p)
        if p < 0 or p > x.shape[0]:
            raise InvalidBudget(f"budget_p={p} outside 0..{x.shape[0]}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lambda_tilde", lt)
        object.__setattr__(self, "budget_p", p)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return self.x.shape[1]

    @property
    def n_y(self) -> int:
        return self.y.shape[0]

    @property
    def lam(self) -> float:
        """Absolute regularization ``M * lambda_tilde``."""
        return self.m * self.lambda_tilde

    @property
    def output_energy(self) -> float:
        """``trace(Y Y^T)``, the upper limit of the objective."""
        return float(np.einsum("ij,ij->", self.y, self.y))

    def with_budget(self, p: int) -> "SelectionProblem":
        return SelectionProblem(self.x, self.y, self.lambda_tilde, p)

    def with_output(self, y) -> "SelectionProblem":
        return SelectionProblem(self.x, y, self.lambda_tilde, self.budget_p)


@dataclass
class SelectionResult:
    indices: list[int]
    objective_trajectory: list[float]
    step_times: list[float]
    termination: Termination
    algorithm: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return self.objective_trajectory[-1] if self.objective_trajectory else 0.0

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class OracleState:
    """Residual (Schur-complement) matrices after conditioning on a set."""

    q_xx: np.ndarray
    q_xy: np.ndarray
    q_yy: np.ndarray


def tie_tolerance(problem: SelectionProblem) -> float:
    return TIE_RTOL * problem.output_energy


def pick_best(scores: np.ndarray, atol: float) -> int:
    """Lowest index whose score is within ``atol`` of the maximum.

    Entries equal to ``-inf`` mark ineligible candidates; returns -1 when
    nothing is eligible.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        return -1
    best = np.max(scores)
    if best == -np.inf:
        return -1
    return int(np.flatnonzero(scores >= best - atol)[0])


def validate_indices(problem: SelectionProblem, s: Sequence[int]) -> list[int]:
    s = [int(i) for i in s]
    if len(set(s)) != len(s):
        raise ValueError(f"duplicate sensor indices in {s}")
    for i in s:
        if not 0 <= i < problem.n:
            raise IndexError(f"sensor index {i} outside 0..{problem.n - 1}")
    return s


def _gram(problem: SelectionProblem, s: list[int]) -> np.ndarray:
    xs = problem.x[s]
    return xs @ xs.T + problem.lam * np.eye(len(s))


def objective(problem: SelectionProblem, s: Sequence[int]) -> float:
    """Evaluate J(S) by Cholesky factor-solve; raise InfeasibleSubset if
    ``X_S X_S^T + lam I`` is not numerically positive definite."""
    s = validate_indices(problem, s)
    if not s:
        return 0.0
    xs = problem.x[s]
    b = xs @ problem.y.T
    try:
        v = cholesky_solve(_gram(problem, s), b)
    except NotPositiveDefinite as exc:
        raise InfeasibleSubset(f"subset {s} is infeasible: {exc}") from exc
    return float(np.einsum("ij,ij->", b, v))


def is_feasible(problem: SelectionProblem, s: Sequence[int]) -> bool:
    s = validate_indices(problem, s)
    if problem.lam > 0 or not s:
        return True
    try:
        cholesky_factor(_gram(problem, s))
    except NotPositiveDefinite:
        return False
    return True


def oracle_state(problem: SelectionProblem, s: Sequence[int]) -> OracleState:
    """Residual matrices computed straight from their block definitions."""
    s = validate_indices(problem, s)
    x, y = problem.x, problem.y
    p_xx = x @ x.T + problem.lam * np.eye(problem.n)
    p_xy = x @ y.T
    p_yy = y @ y.T
    if not s:
        return OracleState(p_xx, p_xy, p_yy)
    try:
        lower = cholesky_factor(p_xx[np.ix_(s, s)])
    except NotPositiveDefinite as exc:
        raise InfeasibleSubset(f"subset {s} is infeasible: {exc}") from exc
    # W = L^-1 P_S so that P_S^T P_SS^-1 P_S = W^T W
    w_x = sla.solve_triangular(lower, p_xx[s], lower=True)
    w_y = sla.solve_triangular(lower, p_xy[s], lower=True)
    return OracleState(p_xx - w_x.T @ w_x, p_xy - w_x.T @ w_y, p_yy - w_y.T @ w_y)


def naive_greedy(problem: SelectionProblem) -> SelectionResult:
    """Forward selection that scores every candidate by evaluating J directly.

    Slow (fifth order overall) but independent of the recurrences used by
    :func:`sensorsel.greg.greg_select`; it is the reference those are
    checked against.
    """
    atol = tie_tolerance(problem)
    selected: list[int] = []
    trajectory: list[float] = []
    times: list[float] = []
    current = 0.0
    termination = Termination.BUDGET_REACHED
    for _ in range(problem.budget_p):
        t0 = time.perf_counter()
        gains = np.full(problem.n, -np.inf)
        values = np.zeros(problem.n)
        chosen = set(selected)
        for i in range(problem.n):
            if i in chosen:
                continue
            try:
                values[i] = objective(problem, selected + [i])
            except InfeasibleSubset:
                continue
            gains[i] = values[i] - current
        s = pick_best(gains, atol)
        if s < 0:
            termination = Termination.FEASIBLE_SET_EXHAUSTED
            break
        selected.append(s)
        current = float(values[s])
        trajectory.append(current)
        times.append(time.perf_counter() - t0)
    return SelectionResult(selected, trajectory, times, termination, "naive")


def exhaustive_optimum(problem: SelectionProblem) -> tuple[tuple[int, ...], float]:
    """Best feasible set of size at most ``budget_p`` by enumeration.

    Feasible sets form a matroid and J never decreases when a sensor is
    added, so only the largest feasible cardinality needs to be searched.
    """
    n, p = problem.n, problem.budget_p
    if math.comb(n, p) > EXHAUSTIVE_LIMIT:
        raise TooLargeForExhaustive(f"C({n}, {p}) exceeds {EXHAUSTIVE_LIMIT}")
    atol = tie_tolerance(problem)
    for size in range(p, 0, -1):
        best_set: tuple[int, ...] | None = None
        best_val = -np.inf
        for combo in itertools.combinations(range(n), size):
            try:
                val = objective(problem, combo)
            except InfeasibleSubset:
                continue
            if best_set is None or val > best_val + atol:
                best_set, best_val = combo, val
        if best_set is not None:
            return best_set, float(best_val)
    return (), 0.0
