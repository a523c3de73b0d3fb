"""Fast greedy selection (GREG) through rank-one residual recurrences.

The naive greedy step scores every candidate by recomputing J from
scratch.  Here the increment ``J(S + {i}) - J(S)`` is kept as the ratio
``f_i / g_i`` where

    f_i = || Q^xy_i(S) ||^2,    g_i = Q^xx_ii(S)

and ``Q^xx``, ``Q^xy`` are the residual Gram and cross-Gram matrices after
conditioning on ``S``.  Each selection subtracts one rank-one term from
both, so ``f`` and ``g`` are refreshed with matrix-vector products only.
The two blocks ``Xi`` (N x k) and ``Theta`` (N_y x k) accumulate those
rank-one factors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import FeasibleSetExhausted, NumericalBreakdown
from .problem import (
    OracleState,
    SelectionProblem,
    SelectionResult,
    Termination,
    pick_best,
    tie_tolerance,
)

FEASIBILITY_RTOL = 1e-10


@dataclass
class GregState:
    """Recurrence state.  ``greg_step`` updates it in place.

    Only the first ``k`` columns of ``xi``/``theta`` are live; they belong
    to ``selected[:k]``.  After the final budgeted pick the rank-one update
    is skipped, so ``k`` can trail ``len(selected)`` by one.
    """

    f: np.ndarray
    g: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    k: int
    feasible: np.ndarray
    selected: list[int]
    lam: float
    tol: float
    tie_atol: float
    increments: list[float] = field(default_factory=list)
    gaps: list[float] = field(default_factory=list)

    @property
    def xi_block(self) -> np.ndarray:
        return self.xi[:, : self.k]

    @property
    def theta_block(self) -> np.ndarray:
        return self.theta[:, : self.k]

    def scores(self) -> np.ndarray:
        """Current ``f_i / g_i`` for feasible, unselected candidates, else -inf."""
        out = np.full(self.f.shape, -np.inf)
        live = self.feasible.copy()
        live[self.selected] = False
        live &= self.g > self.tol
        out[live] = np.maximum(self.f[live], 0.0) / self.g[live]
        return out


def initial_numerators(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise ``||Y X_i^T||^2`` via whichever of ``X Y^T`` or ``Y^T Y`` is smaller."""
    n_y, m = y.shape
    if n_y <= m:
        c = x @ y.T
        return np.einsum("ij,ij->i", c, c)
    gram = y.T @ y
    return np.einsum("ij,ij->i", x @ gram, x)


def greg_init(problem: SelectionProblem) -> GregState:
    x, y = problem.x, problem.y
    lam = problem.lam
    f = initial_numerators(x, y)
    g = np.einsum("ij,ij->i", x, x) + lam
    cap = max(problem.budget_p, 1)
    gmax = float(np.max(g)) if g.size else 0.0
    return GregState(
        f=f,
        g=g,
        xi=np.zeros((problem.n, cap)),
        theta=np.zeros((problem.n_y, cap)),
        k=0,
        feasible=np.ones(problem.n, dtype=bool),
        selected=[],
        lam=lam,
        tol=FEASIBILITY_RTOL * gmax,
        tie_atol=tie_tolerance(problem),
    )


def _grow(state: GregState) -> None:
    cap = state.xi.shape[1]
    state.xi = np.hstack([state.xi, np.zeros_like(state.xi[:, :cap])])
    state.theta = np.hstack([state.theta, np.zeros_like(state.theta[:, :cap])])


def _rank_one_update(state: GregState, problem: SelectionProblem, s: int) -> None:
    x, y = problem.x, problem.y
    k = state.k
    xi_old = state.xi[:, :k]
    th_old = state.theta[:, :k]
    xs = x[s]
    xi_s = xi_old[s]

    delta = x @ xs
    delta[s] += state.lam
    delta -= xi_old @ xi_s
    if not delta[s] > state.tol:
        raise NumericalBreakdown(
            f"pivot {delta[s]:.3e} for sensor {s} fell below {state.tol:.3e}"
        )
    root = np.sqrt(delta[s])
    xi = delta / root
    theta = (y @ xs - th_old @ xi_s) / root

    # X_i Y^T theta - Xi_i Theta^T theta, for all i at once
    cross = x @ (y.T @ theta) - xi_old @ (th_old.T @ theta)
    state.f -= xi * (2.0 * cross - (theta @ theta) * xi)
    state.g -= xi * xi

    if k == state.xi.shape[1]:
        _grow(state)
    state.xi[:, k] = xi
    state.theta[:, k] = theta
    state.k = k + 1


def greg_step(state: GregState, problem: SelectionProblem) -> tuple[GregState, int]:
    """Select one sensor and, unless the budget is now met, apply the
    rank-one update.  Raises FeasibleSetExhausted if no candidate is left."""
    state.feasible[state.selected] = False
    state.feasible &= state.g > state.tol
    scores = state.scores()
    s = pick_best(scores, state.tie_atol)
    if s < 0:
        raise FeasibleSetExhausted(
            f"no feasible candidate after {len(state.selected)} selections"
        )
    best = scores[s]
    scores[s] = -np.inf
    runner_up = np.max(scores)
    state.gaps.append(float(best - runner_up) if runner_up > -np.inf else np.inf)
    state.increments.append(float(best))
    state.selected.append(s)
    state.feasible[s] = False
    if len(state.selected) < problem.budget_p:
        _rank_one_update(state, problem, s)
    return state, s


def greg_select(problem: SelectionProblem) -> SelectionResult:
    t_start = time.perf_counter()
    state = greg_init(problem)
    times: list[float] = []
    termination = Termination.BUDGET_REACHED
    t0 = t_start
    for _ in range(problem.budget_p):
        try:
            greg_step(state, problem)
        except FeasibleSetExhausted:
            termination = Termination.FEASIBLE_SET_EXHAUSTED
            break
        t1 = time.perf_counter()
        times.append(t1 - t0)
        t0 = t1
    trajectory = np.cumsum(state.increments).tolist()
    return SelectionResult(
        list(state.selected),
        trajectory,
        times,
        termination,
        "greg",
        extras={"gaps": list(state.gaps)},
    )


def greg_diagnostics(state: GregState, problem: SelectionProblem) -> OracleState:
    """Materialize the residual matrices implied by the accumulated blocks.

    These correspond to ``state.selected[:state.k]``; intended for audits
    on small problems only (the N x N matrix is formed explicitly).
    """
    x, y = problem.x, problem.y
    xi, th = state.xi_block, state.theta_block
    q_xx = x @ x.T + state.lam * np.eye(problem.n) - xi @ xi.T
    q_xy = x @ y.T - xi @ th.T
    q_yy = y @ y.T - th @ th.T
    return OracleState(q_xx, q_xy, q_yy)
