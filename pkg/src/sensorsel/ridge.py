"""Ridge-regression estimator on a fixed sensor set, and test metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InfeasibleSubset, NotPositiveDefinite
from .linalg import as_matrix, cholesky_solve
from .problem import SelectionProblem, validate_indices


@dataclass(frozen=True)
class RidgeEstimator:
    gain: np.ndarray
    sensor_indices: tuple[int, ...]
    lambda_tilde: float
    training_cost: float

    @property
    def gain_norm(self) -> float:
        return float(np.linalg.norm(self.gain))


@dataclass(frozen=True)
class Metrics:
    normalized_frobenius_error: float
    absolute_frobenius_error: float
    rmse: np.ndarray
    gain_norm: float
    zero_reference: bool = False


def fit(problem: SelectionProblem, s: Sequence[int]) -> RidgeEstimator:
    """Gain ``K = Y X_S^T (X_S X_S^T + lam I)^-1`` and its training cost

        J_0 = ||Y - K X_S||_F^2 / M + lambda_tilde ||K||_F^2
    """
    s = validate_indices(problem, s)
    y = problem.y
    xs = problem.x[s]
    if s:
        gram = xs @ xs.T + problem.lam * np.eye(len(s))
        try:
            # K^T = gram^-1 X_S Y^T since gram is symmetric
            gain = cholesky_solve(gram, xs @ y.T).T
        except NotPositiveDefinite as exc:
            raise InfeasibleSubset(f"subset {s} is infeasible: {exc}") from exc
    else:
        gain = np.zeros((problem.n_y, 0))
    resid = y - gain @ xs
    cost = float(
        np.einsum("ij,ij->", resid, resid) / problem.m
        + problem.lambda_tilde * np.einsum("ij,ij->", gain, gain)
    )
    return RidgeEstimator(gain, tuple(s), problem.lambda_tilde, cost)


def predict(estimator: RidgeEstimator, x_new) -> np.ndarray:
    """Estimate outputs from readings at the selected sensors.

    ``x_new`` is a vector of length ``|S|`` or a ``|S| x T`` block of
    snapshots.
    """
    x_new = np.asarray(x_new, dtype=np.float64)
    k = estimator.gain.shape[1]
    if x_new.shape[0] != k:
        raise DimensionMismatch(f"expected {k} sensor readings, got {x_new.shape[0]}")
    return estimator.gain @ x_new


def evaluate(estimator: RidgeEstimator, x_test, y_test) -> Metrics:
    """Errors on held-out snapshots; ``x_test`` holds all N candidate rows."""
    x_test = as_matrix(x_test, name="x_test")
    y_test = as_matrix(y_test, name="y_test")
    if x_test.shape[1] != y_test.shape[1]:
        raise DimensionMismatch(
            f"x_test has {x_test.shape[1]} snapshots, y_test has {y_test.shape[1]}"
        )
    if y_test.shape[0] != estimator.gain.shape[0]:
        raise DimensionMismatch(
            f"y_test has {y_test.shape[0]} rows, gain has {estimator.gain.shape[0]}"
        )
    est = predict(estimator, x_test[list(estimator.sensor_indices)])
    resid = y_test - est
    err = float(np.linalg.norm(resid))
    ref = float(np.linalg.norm(y_test))
    rmse = np.sqrt(np.mean(resid**2, axis=1))
    if ref == 0.0:
        return Metrics(err, err, rmse, estimator.gain_norm, zero_reference=True)
    return Metrics(err / ref, err, rmse, estimator.gain_norm)
