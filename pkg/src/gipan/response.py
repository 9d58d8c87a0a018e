"""Spectral response estimation and solvability diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OperatorCapError, RankDeficiencyError, ShapeMismatchError
from .linalg import full_rank_left_pinv, moore_penrose
from .metrics import consistent_rmse, rms
from .sampling import SpatialOperator

SOURCES = ("assumed", "estimated_dse", "estimated_lsq")


def _col(M, name):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, np.newaxis]
    if M.ndim != 2:
        raise ShapeMismatchError(f"{name} must be a matrix, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class SpectralResponse:
    """Band-to-pan weights ``A`` (``S x s``) and where they came from."""

    A: np.ndarray
    source: str = "assumed"

    def __post_init__(self):
        A = _col(self.A, "A")
        if not np.all(np.isfinite(A)):
            raise ValueError("spectral response has non-finite entries")
        if self.source not in SOURCES:
            raise ValueError(f"unknown response source {self.source!r}")
        object.__setattr__(self, "A", A)

    @property
    def bands(self) -> int:
        return self.A.shape[0]


def estimate_A_dse(Y, Z, bhat: SpatialOperator, z_pinv=None) -> SpectralResponse:
    """Least-squares spectral response ``A = Z^+ (bhat Y)``.

    This minimizes ``||bhat Y - Z M||_F`` over ``M``. ``Z^+`` is the
    normal-equations inverse when ``Z`` has full column rank, otherwise the
    SVD pseudoinverse; pass ``z_pinv`` to share it with :func:`dse_wrap`.
    """
    Y = _col(Y, "Y")
    Z = _col(Z, "Z")
    if Y.shape[0] != bhat.in_pixels:
        raise ShapeMismatchError(
            f"pan has {Y.shape[0]} pixels, down-sampler expects {bhat.in_pixels}")
    if Z.shape[0] != bhat.out_pixels:
        raise ShapeMismatchError(
            f"ms has {Z.shape[0]} pixels, down-sampler produces {bhat.out_pixels}")
    if z_pinv is None:
        try:
            z_pinv = full_rank_left_pinv(Z)
        except RankDeficiencyError:
            z_pinv = moore_penrose(Z)
    return SpectralResponse(z_pinv @ bhat.apply(Y), source="estimated_dse")


@dataclass(frozen=True)
class ExistenceReport:
    consistency_residual: float
    y_recoverable_residual: float
    z_recoverable_residual: float
    tol: float

    @property
    def solvable(self) -> bool:
        return max(self.consistency_residual, self.y_recoverable_residual,
                   self.z_recoverable_residual) <= self.tol


def existence_check(Y, Z, A, B: SpatialOperator, B_inv: SpatialOperator,
                    A_inv, tol: float = 1e-6) -> ExistenceReport:
    """RMS residuals of the three solvability conditions.

    ``B Y = Z A``, ``Y = Y A_inv A`` and ``Z = B B_inv Z``, each normalized by
    its entry count. The first is exactly the Consistent RMSE.
    """
    Y, Z, A = _col(Y, "Y"), _col(Z, "Z"), _col(A, "A")
    A_inv = np.atleast_2d(np.asarray(A_inv, dtype=np.float64))
    if A_inv.shape != A.shape[::-1]:
        raise ShapeMismatchError(
            f"A_inv has shape {A_inv.shape}, expected {A.shape[::-1]}")
    if B_inv.in_shape != B.out_shape or B_inv.out_shape != B.in_shape:
        raise ShapeMismatchError("B_inv does not invert the shapes of B")
    return ExistenceReport(
        consistency_residual=consistent_rmse(Z, A, B, Y),
        y_recoverable_residual=rms(Y - (Y @ A_inv) @ A),
        z_recoverable_residual=rms(Z - B.apply(B_inv.apply(Z))),
        tol=tol,
    )


def kronecker_system(Y, Z) -> np.ndarray:
    """The matrix ``[Z (x) I_s, -I_hw (x) Y^T]``.

    Multiplied by ``[A.ravel(); B.ravel()]`` (row-major vectorization) it
    yields ``(Z A - B Y).ravel()``.
    """
    Y, Z = _col(Y, "Y"), _col(Z, "Z")
    hw = Z.shape[0]
    s = Y.shape[1]
    return np.hstack([np.kron(Z, np.eye(s)), -np.kron(np.eye(hw), Y.T)])


@dataclass(frozen=True)
class KroneckerReport:
    rank: int
    bound: int
    n_unknowns: int
    rank_below_bound: bool
    nonzero_solution_exists: bool


def _check_cap(Y, Z, max_entries):
    Y, Z = _col(Y, "Y"), _col(Z, "Z")
    hw, S = Z.shape
    HW, s = Y.shape
    rows, cols = hw * s, S * s + hw * HW
    if rows * cols > max_entries:
        raise OperatorCapError(
            f"Kronecker system is {rows}x{cols}, above the {max_entries}-entry cap; "
            "this diagnostic is meant for small images")
    return Y, Z, rows, cols


def kronecker_rank_check(Y, Z, max_entries: int = 2 ** 22,
                         rel_tolerance: float = 1e-10) -> KroneckerReport:
    """Rank diagnostic for the joint linear system in ``(A, B)``.

    ``rank_below_bound`` reports ``rank < min(hw*s, S*s + hw*HW)`` literally;
    ``nonzero_solution_exists`` is the kernel criterion ``rank < n_unknowns``.
    """
    Y, Z, rows, cols = _check_cap(Y, Z, max_entries)
    M = kronecker_system(Y, Z)
    if not np.any(M):
        rank = 0
    else:
        s = np.linalg.svd(M, compute_uv=False)
        rank = int(np.count_nonzero(s > rel_tolerance * s[0]))
    bound = min(rows, cols)
    return KroneckerReport(
        rank=rank,
        bound=bound,
        n_unknowns=cols,
        rank_below_bound=rank < bound,
        nonzero_solution_exists=rank < cols,
    )


def kronecker_kernel_residual(Y, Z, A, B_matrix, max_entries: int = 2 ** 22) -> float:
    """``||M [vec A; vec B]||`` relative to ``max(1, ||[vec A; vec B]||)``."""
    Y, Z, _, _ = _check_cap(Y, Z, max_entries)
    A = _col(A, "A")
    B_matrix = np.asarray(B_matrix, dtype=np.float64)
    if B_matrix.shape != (Z.shape[0], Y.shape[0]):
        raise ShapeMismatchError(
            f"B has shape {B_matrix.shape}, expected {(Z.shape[0], Y.shape[0])}")
    v = np.concatenate([A.ravel(), B_matrix.ravel()])
    r = kronecker_system(Y, Z) @ v
    return float(np.linalg.norm(r) / max(1.0, np.linalg.norm(v)))
