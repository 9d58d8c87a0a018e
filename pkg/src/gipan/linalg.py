"""Moore-Penrose and generalized-inverse helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError, RankDeficiencyError, ShapeMismatchError

#: Relative singular-value truncation used by :func:`moore_penrose`.
PINV_RTOL = 1e-12
#: Relative tolerance for the four Penrose conditions.
CHECK_TOL = 1e-8
#: Condition number above which the normal-equations route is refused.
MAX_NORMAL_COND = 1e8


def _as_2d(M, name="matrix"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, np.newaxis]
    if M.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got shape {M.shape}")
    return M


def moore_penrose(M, rel_tolerance: float = PINV_RTOL) -> np.ndarray:
    """Moore-Penrose inverse through the thin SVD.

    Singular values at or below ``rel_tolerance * sigma_max`` are treated as
    zero, so rank-deficient inputs (e.g. cubes with constant bands) are
    handled.
    """
    M = _as_2d(M)
    if not np.all(np.isfinite(M)):
        raise NonFiniteError("pseudoinverse of a non-finite matrix")
    if rel_tolerance <= 0:
        raise ValueError("rel_tolerance must be positive")
    m, n = M.shape
    if M.size == 0:
        return np.zeros((n, m))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((n, m))
    keep = s > rel_tolerance * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (Vt.T * inv_s) @ U.T


def full_rank_left_pinv(M) -> np.ndarray:
    """Left inverse ``(M^T M)^{-1} M^T`` of a full-column-rank matrix.

    Raises
    ------
    RankDeficiencyError
        If ``M`` has fewer rows than columns or its condition number exceeds
        :data:`MAX_NORMAL_COND` (squaring it in ``M^T M`` would lose every
        significant digit). Callers fall back to :func:`moore_penrose`.
    """
    M = _as_2d(M)
    if not np.all(np.isfinite(M)):
        raise NonFiniteError("left inverse of a non-finite matrix")
    m, n = M.shape
    if m < n:
        raise RankDeficiencyError(f"{m}x{n} matrix cannot have full column rank")
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] == 0.0 or s[0] / s[-1] > MAX_NORMAL_COND:
        raise RankDeficiencyError(
            f"matrix is numerically rank deficient (cond={s[0] / s[-1] if s[-1] else np.inf:.3g})")
    return np.linalg.solve(M.T @ M, M.T)


def left_pinv(M) -> np.ndarray:
    """Normal-equations left inverse when well posed, SVD pseudoinverse otherwise."""
    try:
        return full_rank_left_pinv(M)
    except RankDeficiencyError:
        return moore_penrose(M)


def numerical_rank(M, rel_tolerance: float = 1e-10) -> int:
    """Number of singular values above ``rel_tolerance * sigma_max``."""
    M = _as_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_tolerance * s[0]))


def rel_frobenius(residual, reference) -> float:
    """``||residual||_F / max(1, ||reference||_F)``."""
    return float(np.linalg.norm(residual) / max(1.0, np.linalg.norm(reference)))


@dataclass(frozen=True)
class PenroseReport:
    """Outcome of :func:`check_generalized_inverse`.

    ``penrose_conditions`` holds, in order, ``AGA = A``, ``GAG = G``,
    ``(AG)^T = AG`` and ``(GA)^T = GA``.
    """

    is_gen_inverse: bool
    penrose_conditions: tuple[bool, bool, bool, bool]
    residuals: tuple[float, float, float, float]
    max_residual: float

    @property
    def is_moore_penrose(self) -> bool:
        return all(self.penrose_conditions)


def check_generalized_inverse(A, G, tol: float = CHECK_TOL) -> PenroseReport:
    """Evaluate the four Penrose conditions for a candidate inverse ``G`` of ``A``."""
    A = _as_2d(A, "A")
    G = _as_2d(G, "G")
    if G.shape != A.shape[::-1]:
        raise ShapeMismatchError(
            f"inverse candidate has shape {G.shape}, expected {A.shape[::-1]}")
    AG = A @ G
    GA = G @ A
    residuals = (
        rel_frobenius(AG @ A - A, A),
        rel_frobenius(GA @ G - G, G),
        rel_frobenius(AG.T - AG, AG),
        rel_frobenius(GA.T - GA, GA),
    )
    conditions = tuple(bool(r <= tol) for r in residuals)
    return PenroseReport(
        is_gen_inverse=conditions[0],
        penrose_conditions=conditions,
        residuals=residuals,
        max_residual=max(residuals),
    )
