"""Output-dimension reduction by truncated SVD, with its error certificates.

Selecting against ``Z = Sigma_r V_r^T`` instead of the full output matrix
changes the objective by at most the discarded energy
``sum_{i>r} sigma_i^2``, for every sensor set.  Greedy picks whose margin
over the runner-up exceeds that energy are therefore unaffected by the
reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BoundViolation, InvalidBudget
from .greg import greg_select
from .linalg import as_matrix, thin_svd
from .problem import TIE_RTOL, SelectionProblem, SelectionResult, objective


@dataclass(frozen=True)
class ReducedOutput:
    z: np.ndarray
    left_modes: np.ndarray
    singular_values: np.ndarray
    truncated_energy: float
    r: int
    requested_r: int
    original_output_rows: int

    @property
    def clamped(self) -> bool:
        return self.r != self.requested_r

    def lift(self, z: np.ndarray) -> np.ndarray:
        """Map reduced outputs back to the original output space."""
        return self.left_modes @ z


def reduce_output(y_full, r: int) -> ReducedOutput:
    """Keep the ``r`` leading SVD modes of ``y_full``.

    ``r`` above the numerical rank is clamped to it (never below 1).
    """
    y = as_matrix(y_full, name="y_full")
    q = min(y.shape)
    if not 1 <= r <= q:
        raise InvalidBudget(f"r={r} outside 1..{q}")
    svd = thin_svd(y)
    r_eff = max(1, min(r, svd.numerical_rank))
    sig = svd.singular_values
    z = sig[:r_eff, None] * svd.right_vectors_t[:r_eff]
    truncated = float(np.sum(sig[r_eff : max(svd.numerical_rank, r_eff)] ** 2))
    return ReducedOutput(
        z=z,
        left_modes=svd.left_vectors[:, :r_eff].copy(),
        singular_values=sig.copy(),
        truncated_energy=truncated,
        r=r_eff,
        requested_r=int(r),
        original_output_rows=y.shape[0],
    )


def truncation_bound_check(
    problem_full: SelectionProblem,
    reduced: ReducedOutput,
    s: Sequence[int],
    *,
    atol: float = 1e-8,
) -> tuple[float, float, float]:
    """Return ``(J_full(S), J_reduced(S), truncated_energy)``.

    Raises BoundViolation unless
    ``-atol <= J_full - J_reduced <= truncated_energy + atol``.
    """
    j_full = objective(problem_full, s)
    j_red = objective(problem_full.with_output(reduced.z), s)
    diff = j_full - j_red
    if not -atol <= diff <= reduced.truncated_energy + atol:
        raise BoundViolation(
            f"J_full - J_reduced = {diff:.3e} outside "
            f"[0, {reduced.truncated_energy:.3e}] for S={list(s)}"
        )
    return j_full, j_red, reduced.truncated_energy


def certified_prefix(
    gaps: Sequence[float], truncated_energy: float, atol: float = 0.0
) -> int:
    """Length of the leading run of greedy margins exceeding ``truncated_energy``.

    ``atol`` widens the threshold so that picks decided by the tie
    tolerance are never certified.
    """
    count = 0
    for gap in gaps:
        if not gap > truncated_energy + atol:
            break
        count += 1
    return count


def reduced_greedy(
    problem_reduced: SelectionProblem, truncated_energy: float
) -> tuple[SelectionResult, int]:
    """Run the greedy selector on reduced outputs and certify its prefix."""
    result = greg_select(problem_reduced)
    # full-output tie tolerance scales with ||Z||^2 + truncated energy
    atol = 2.0 * TIE_RTOL * (problem_reduced.output_energy + truncated_energy)
    return result, certified_prefix(result.extras["gaps"], truncated_energy, atol)


def coincidence_certificate(
    problem_reduced: SelectionProblem, truncated_energy: float
) -> int:
    """Number of leading picks guaranteed to match the full-output greedy."""
    return reduced_greedy(problem_reduced, truncated_energy)[1]
