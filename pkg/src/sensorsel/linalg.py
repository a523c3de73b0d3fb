"""Dense linear-algebra helpers used by every selector.

Matrices are plain 2-D ``float64`` numpy arrays; :func:`as_matrix` is the
single validation gate.  All routines are deterministic for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import InvalidBudget, InvalidMatrix, NotPositiveDefinite

RANK_RTOL = 1e-12
CHOLESKY_RTOL = 1e-12
SIGN_ATOL = 1e-10


def as_matrix(a, *, name: str = "matrix", allow_empty: bool = False) -> np.ndarray:
    """Return ``a`` as a C-contiguous 2-D float64 array, or raise InvalidMatrix."""
    try:
        arr = np.array(a, dtype=np.float64, order="C")
    except (TypeError, ValueError) as exc:
        raise InvalidMatrix(f"{name}: not convertible to a real matrix") from exc
    if arr.ndim != 2:
        raise InvalidMatrix(f"{name}: expected 2-D array, got ndim={arr.ndim}")
    if arr.size == 0 and not allow_empty:
        raise InvalidMatrix(f"{name}: empty matrix {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix(f"{name}: contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class ThinSvd:
    """Economy SVD ``a = left_vectors @ diag(singular_values) @ right_vectors_t``."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors_t: np.ndarray
    numerical_rank: int

    @property
    def rank_threshold(self) -> float:
        n, m = self.left_vectors.shape[0], self.right_vectors_t.shape[1]
        s1 = self.singular_values[0] if self.singular_values.size else 0.0
        return float(s1 * max(n, m) * RANK_RTOL)


def _fix_signs(u: np.ndarray, vt: np.ndarray) -> None:
    # first entry of each left vector that is clearly nonzero is made positive
    for j in range(u.shape[1]):
        col = u[:, j]
        nz = np.flatnonzero(np.abs(col) > SIGN_ATOL)
        if nz.size and col[nz[0]] < 0:
            u[:, j] = -col
            vt[j, :] = -vt[j, :]


def thin_svd(a) -> ThinSvd:
    """Economy-size SVD with a fixed sign convention and numerical rank.

    ``numerical_rank`` counts singular values above
    ``sigma_1 * max(rows, cols) * 1e-12``.
    """
    a = as_matrix(a, name="svd input")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    u = np.ascontiguousarray(u)
    vt = np.ascontiguousarray(vt)
    _fix_signs(u, vt)
    thresh = s[0] * max(a.shape) * RANK_RTOL if s.size else 0.0
    rank = int(np.count_nonzero(s > thresh))
    return ThinSvd(u, s, vt, rank)


def cholesky_factor(spd, *, rtol: float = CHOLESKY_RTOL) -> np.ndarray:
    """Lower Cholesky factor of a symmetric matrix.

    Raises NotPositiveDefinite when LAPACK fails or any pivot ``L_ii**2``
    is at or below ``rtol * trace / n``.
    """
    spd = as_matrix(spd, name="spd")
    n, m = spd.shape
    if n != m:
        raise InvalidMatrix(f"spd: not square {spd.shape}")
    scale = np.max(np.abs(spd))
    if not np.allclose(spd, spd.T, rtol=0.0, atol=1e-10 * max(scale, 1.0)):
        raise InvalidMatrix("spd: not symmetric")
    tol = rtol * max(np.trace(spd), 0.0) / n
    try:
        lower = sla.cholesky(spd, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    pivots = np.diag(lower) ** 2
    if not np.all(pivots > tol):
        bad = int(np.argmin(pivots > tol))
        raise NotPositiveDefinite(f"pivot {bad} = {pivots[bad]:.3e} <= tol {tol:.3e}")
    return lower


def cholesky_solve(spd, rhs, *, rtol: float = CHOLESKY_RTOL) -> np.ndarray:
    """Solve ``spd @ v = rhs`` by Cholesky factor-solve (no explicit inverse)."""
    lower = cholesky_factor(spd, rtol=rtol)
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != lower.shape[0]:
        raise InvalidMatrix(f"rhs has {rhs.shape[0]} rows, expected {lower.shape[0]}")
    if rhs.size and not np.all(np.isfinite(rhs)):
        raise InvalidMatrix("rhs: contains NaN or Inf")
    return sla.cho_solve((lower, True), rhs, check_finite=False)


def qr_column_pivot(a, k: int) -> list[int]:
    """First ``k`` pivots of QR with column pivoting (0-based column indices).

    Each pivot is the column with the largest norm after orthogonalization
    against the previous pivots; exact ties go to the lowest index.
    """
    a = as_matrix(a, name="qr input")
    n, m = a.shape
    if k < 0 or k > m:
        raise InvalidBudget(f"k={k} outside 0..{m}")
    resid = a.copy()
    taken = np.zeros(m, dtype=bool)
    pivots: list[int] = []
    for _ in range(k):
        norms = np.einsum("ij,ij->j", resid, resid)
        norms[taken] = -np.inf
        j = int(np.argmax(norms))
        pivots.append(j)
        taken[j] = True
        nrm = np.sqrt(max(norms[j], 0.0))
        if nrm == 0.0:
            continue
        q = resid[:, j] / nrm
        # two passes keep the residual orthogonal to every pivot so far
        for _pass in range(2):
            resid -= np.outer(q, q @ resid)
    return pivots
