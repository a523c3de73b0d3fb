"""Comparison selectors: REG, SOMP, DG and BDG.

All return a :class:`~sensorsel.problem.SelectionResult` with 0-based
indices so the harness can treat them interchangeably with GREG.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.linalg as sla

from .errors import InvalidBudget, NotPositiveDefinite
from .greg import FEASIBILITY_RTOL, initial_numerators
from .linalg import as_matrix, cholesky_factor, thin_svd
from .problem import TIE_RTOL, SelectionProblem, SelectionResult, Termination, pick_best

DG_REFRESH_EVERY = 25
SCORE_ATOL = 1e-10


def _check_budget(n: int, p: int) -> None:
    if not 0 <= p <= n:
        raise InvalidBudget(f"p={p} outside 0..{n}")


def _check_rank(x: np.ndarray, r: int) -> None:
    if not 1 <= r <= min(x.shape):
        raise InvalidBudget(f"r={r} outside 1..{min(x.shape)}")


def _project_out(a: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Remove the component along unit vector ``q`` from every row of ``a``; returns ``a @ q``."""
    coef = a @ q
    a -= np.outer(coef, q)
    # second pass against cancellation
    a -= np.outer(a @ q, q)
    return coef


# --------------------------------------------------------------------------
# REG: GREG specialised to (Y, lambda) = (X, 0), no Theta block needed
# --------------------------------------------------------------------------

def reg_select(x, p: int) -> SelectionResult:
    x = as_matrix(x, name="x")
    n = x.shape[0]
    _check_budget(n, p)
    f = initial_numerators(x, x)
    g = np.einsum("ij,ij->i", x, x)
    tol = FEASIBILITY_RTOL * (float(g.max()) if n else 0.0)
    atol = TIE_RTOL * float(g.sum())
    xi_blk = np.zeros((n, max(p, 1)))
    feasible = np.ones(n, dtype=bool)
    selected: list[int] = []
    increments: list[float] = []
    times: list[float] = []
    termination = Termination.BUDGET_REACHED
    t0 = time.perf_counter()
    for k in range(p):
        feasible &= g > tol
        scores = np.full(n, -np.inf)
        scores[feasible] = np.maximum(f[feasible], 0.0) / g[feasible]
        s = pick_best(scores, atol)
        if s < 0:
            termination = Termination.FEASIBLE_SET_EXHAUSTED
            break
        selected.append(s)
        increments.append(float(scores[s]))
        feasible[s] = False
        if k + 1 < p:
            xi_old = xi_blk[:, :k]
            delta = x @ x[s] - xi_old @ xi_old[s]
            xi = delta / np.sqrt(delta[s])
            # row i of the residual Gram dotted with xi
            cross = x @ (x.T @ xi) - xi_old @ (xi_old.T @ xi)
            f -= xi * (2.0 * cross - (xi @ xi) * xi)
            g -= xi * xi
            xi_blk[:, k] = xi
        t1 = time.perf_counter()
        times.append(t1 - t0)
        t0 = t1
    return SelectionResult(
        selected, np.cumsum(increments).tolist(), times, termination, "reg"
    )


# --------------------------------------------------------------------------
# SOMP: rank candidates by the error reduction along a single row X_i
# --------------------------------------------------------------------------

def somp_select(problem: SelectionProblem, p: int | None = None) -> SelectionResult:
    """Simultaneous orthogonal matching pursuit on the rows of X.

    The regularization of ``problem`` is ignored.  The residual
    ``E(S) = Y (I - P_S)`` is recomputed by exact projection after each
    pick, with ``P_S`` the orthogonal projector onto the selected rows.
    """
    p = problem.budget_p if p is None else int(p)
    x, y = problem.x, problem.y
    n = x.shape[0]
    _check_budget(n, p)
    row_sq = np.einsum("ij,ij->i", x, x)
    tol = FEASIBILITY_RTOL * (float(row_sq.max()) if n else 0.0)
    atol = TIE_RTOL * problem.output_energy
    resid = y.copy()
    x_perp = x.copy()
    total = problem.output_energy
    selected: list[int] = []
    trajectory: list[float] = []
    times: list[float] = []
    termination = Termination.BUDGET_REACHED
    t0 = time.perf_counter()
    for _ in range(p):
        perp_sq = np.einsum("ij,ij->i", x_perp, x_perp)
        ok = (row_sq > tol) & (perp_sq > tol)
        ok[selected] = False
        scores = np.full(n, -np.inf)
        if ok.any():
            ex = resid @ x[ok].T
            scores[ok] = np.einsum("ij,ij->j", ex, ex) / row_sq[ok]
        s = pick_best(scores, atol)
        if s < 0:
            termination = Termination.FEASIBLE_SET_EXHAUSTED
            break
        q = x_perp[s] / np.sqrt(perp_sq[s])
        _project_out(x_perp, q)
        _project_out(resid, q)
        selected.append(s)
        trajectory.append(total - float(np.einsum("ij,ij->", resid, resid)))
        t1 = time.perf_counter()
        times.append(t1 - t0)
        t0 = t1
    return SelectionResult(selected, trajectory, times, termination, "somp")


# --------------------------------------------------------------------------
# DG: determinant (D-optimal) greedy on the leading left singular vectors
# --------------------------------------------------------------------------

def dg_select(x, r: int, p: int) -> SelectionResult:
    """Greedy D-optimal selection on ``Phi = U[:, :r]`` of ``x``.

    While fewer than ``r`` sensors are chosen this maximizes
    ``det(Phi_S Phi_S^T)`` (pivoted QR on ``Phi^T``); afterwards it
    maximizes ``det(Phi_S^T Phi_S)`` through the matrix determinant lemma.
    The trajectory holds the log-determinant after each pick.
    """
    x = as_matrix(x, name="x")
    _check_rank(x, r)
    n = x.shape[0]
    _check_budget(n, p)
    phi = thin_svd(x).left_vectors[:, :r]
    return _dg_from_modes(phi, p)


def _dg_from_modes(phi: np.ndarray, p: int) -> SelectionResult:
    n, r = phi.shape
    resid = phi.copy()
    taken = np.zeros(n, dtype=bool)
    selected: list[int] = []
    trajectory: list[float] = []
    times: list[float] = []
    termination = Termination.BUDGET_REACHED
    logdet = 0.0
    a_inv = None
    t0 = time.perf_counter()
    for k in range(p):
        if k < r:
            norms = np.einsum("ij,ij->i", resid, resid)
            norms[taken] = -np.inf
            s = int(np.argmax(norms))
            if not norms[s] > SCORE_ATOL:
                termination = Termination.FEASIBLE_SET_EXHAUSTED
                break
            _project_out(resid, resid[s] / np.sqrt(norms[s]))
            logdet += float(np.log(norms[s]))
        else:
            if a_inv is None or (k - r) % DG_REFRESH_EVERY == 0:
                a_inv, logdet = _gram_inverse(phi[selected])
            gains = np.einsum("ij,jk,ik->i", phi, a_inv, phi)
            gains[taken] = -np.inf
            s = int(np.argmax(gains))
            if not np.log1p(max(gains[s], 0.0)) > SCORE_ATOL:
                termination = Termination.FEASIBLE_SET_EXHAUSTED
                break
            u = a_inv @ phi[s]
            a_inv = a_inv - np.outer(u, u) / (1.0 + gains[s])
            logdet += float(np.log1p(gains[s]))
        taken[s] = True
        selected.append(s)
        trajectory.append(logdet)
        t1 = time.perf_counter()
        times.append(t1 - t0)
        t0 = t1
    return SelectionResult(selected, trajectory, times, termination, "dg")


def _gram_inverse(rows: np.ndarray) -> tuple[np.ndarray, float]:
    gram = rows.T @ rows
    lower = cholesky_factor(gram, rtol=0.0)
    inv_l = np.linalg.solve(lower, np.eye(lower.shape[0]))
    return inv_l.T @ inv_l, float(2.0 * np.sum(np.log(np.diag(lower))))


# --------------------------------------------------------------------------
# BDG: minimize det of the posterior residual covariance of W given X_S
# --------------------------------------------------------------------------

def bdg_select(x, r: int, p: int) -> SelectionResult:
    """Bayesian D-optimal greedy with ``W`` the ``r`` leading SVD modes of ``x``.

    Minimizes ``det(W W^T - W X_S^T (X_S X_S^T)^-1 X_S W^T)`` one sensor at
    a time, over candidates that keep ``X_S X_S^T`` nonsingular.
    """
    x = as_matrix(x, name="x")
    _check_rank(x, r)
    svd = thin_svd(x)
    w = svd.singular_values[:r, None] * svd.right_vectors_t[:r]
    return bdg_select_modes(x, w, p)


def residual_covariance(x: np.ndarray, w: np.ndarray, s) -> np.ndarray:
    """``W W^T - W X_S^T (X_S X_S^T)^-1 X_S W^T`` evaluated directly."""
    s = list(s)
    if not s:
        return w @ w.T
    xs = x[s]
    coef = np.linalg.solve(xs @ xs.T, xs @ w.T)
    return w @ w.T - (xs @ w.T).T @ coef


def _logdet_or_neginf(mat: np.ndarray) -> tuple[np.ndarray | None, float]:
    try:
        lower = cholesky_factor(mat)
    except NotPositiveDefinite:
        return None, -np.inf
    return lower, float(2.0 * np.sum(np.log(np.diag(lower))))


def bdg_select_modes(x, w, p: int) -> SelectionResult:
    """BDG with an explicit mode matrix ``w`` (r x M)."""
    x = as_matrix(x, name="x")
    w = as_matrix(w, name="w")
    n = x.shape[0]
    _check_budget(n, p)
    if w.shape[1] != x.shape[1]:
        raise InvalidBudget(f"w has {w.shape[1]} snapshots, x has {x.shape[1]}")
    row_sq = np.einsum("ij,ij->i", x, x)
    tol = FEASIBILITY_RTOL * (float(row_sq.max()) if n else 0.0)
    x_perp = x.copy()
    cov = w @ w.T
    lower, _ = _logdet_or_neginf(cov)
    selected: list[int] = []
    trajectory: list[float] = []
    times: list[float] = []
    termination = Termination.BUDGET_REACHED
    t0 = time.perf_counter()
    for _ in range(p):
        perp_sq = np.einsum("ij,ij->i", x_perp, x_perp)
        ok = perp_sq > tol
        ok[selected] = False
        if not ok.any():
            termination = Termination.FEASIBLE_SET_EXHAUSTED
            break
        scores = np.full(n, -np.inf)
        v = x_perp[ok] @ w.T
        if lower is None:
            # covariance already singular: every candidate leaves det = 0
            scores[ok] = 0.0
        else:
            u = sla.solve_triangular(lower, v.T, lower=True)
            scores[ok] = np.einsum("ij,ij->j", u, u) / perp_sq[ok]
        s = pick_best(scores, SCORE_ATOL)
        q = x_perp[s] / np.sqrt(perp_sq[s])
        wq = w @ q
        _project_out(x_perp, q)
        cov = cov - np.outer(wq, wq)
        cov = 0.5 * (cov + cov.T)
        lower, logdet = _logdet_or_neginf(cov)
        selected.append(s)
        trajectory.append(logdet)
        t1 = time.perf_counter()
        times.append(t1 - t0)
        t0 = t1
    return SelectionResult(selected, trajectory, times, termination, "bdg")
