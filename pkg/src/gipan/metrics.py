"""Residual-based quality indices for a fusion run.

All RMSE-type indices are ``sqrt(sum(d**2) / d.size)`` of a residual matrix
``d``; the squared entries are accumulated with :func:`math.fsum` so the
result does not depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ShapeMismatchError

CSV_FIELDS = ("consistent_rmse", "spatial_rmse", "spectral_rmse",
              "inverse_ability", "rmse")


def rms(residual) -> float:
    """Root mean square of all entries of ``residual``."""
    d = np.asarray(residual, dtype=np.float64)
    if d.size == 0:
        return 0.0
    return math.sqrt(math.fsum(np.square(d).ravel().tolist()) / d.size)


def _col(M):
    M = np.asarray(M, dtype=np.float64)
    return M[:, np.newaxis] if M.ndim == 1 else M


def _same_shape(a, b, what):
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what}: shapes {a.shape} and {b.shape} differ")


def consistent_rmse(Z, A, B, Y) -> float:
    """RMS of ``Z A - B Y`` over its ``hw * s`` entries."""
    ZA = _col(Z) @ _col(A)
    BY = _col(B.apply(_col(Y)))
    _same_shape(ZA, BY, "consistent RMSE")
    return rms(ZA - BY)


def spatial_rmse(X_rec, A, Y) -> float:
    """RMS of ``X_rec A - Y`` over its ``HW * s`` entries."""
    XA = _col(X_rec) @ _col(A)
    Y = _col(Y)
    _same_shape(XA, Y, "spatial RMSE")
    return rms(XA - Y)


def spectral_rmse(B, X_rec, Z) -> float:
    """RMS of ``B X_rec - Z`` over its ``hw * S`` entries."""
    BX = B.apply(_col(X_rec))
    Z = _col(Z)
    _same_shape(BX, Z, "spectral RMSE")
    return rms(BX - Z)


def inverse_ability(A_inv, A) -> float:
    """The scalar ``A_inv A`` (single-band pan only); ideal value 1."""
    prod = np.atleast_2d(np.asarray(A_inv, dtype=np.float64)) @ _col(A)
    if prod.shape != (1, 1):
        raise ShapeMismatchError(
            f"inverse ability needs a 1xS inverse and an Sx1 response, got product {prod.shape}")
    return float(prod[0, 0])


def rmse(X_truth, X_rec) -> float:
    """RMS difference to the reference over all ``HW * S`` entries."""
    X_truth, X_rec = _col(X_truth), _col(X_rec)
    _same_shape(X_truth, X_rec, "RMSE")
    return rms(X_truth - X_rec)


@dataclass(frozen=True)
class MetricReport:
    consistent_rmse: float
    spatial_rmse: float
    spectral_rmse: float
    inverse_ability: float
    rmse: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)

    def csv_values(self) -> list[str]:
        """Full-precision strings in :data:`CSV_FIELDS` order; missing RMSE is empty."""
        return ["" if v is None else repr(float(v))
                for v in (getattr(self, f) for f in CSV_FIELDS)]

    def table(self) -> str:
        """Two-decimal key/value table."""
        lines = []
        for f in CSV_FIELDS:
            v = getattr(self, f)
            lines.append(f"{f:<16} {'-' if v is None else f'{v:.2f}'}")
        return "\n".join(lines)


def evaluate(X_rec, Y, Z, A, A_inv, B, X_truth=None, consistent=None) -> MetricReport:
    """All five indices for one fused result.

    ``consistent`` may carry a precomputed Consistent RMSE; it depends only
    on ``(Y, Z, A, B)`` and is shared by every method run on that setup.
    """
    if consistent is None:
        consistent = consistent_rmse(Z, A, B, Y)
    return MetricReport(
        consistent_rmse=consistent,
        spatial_rmse=spatial_rmse(X_rec, A, Y),
        spectral_rmse=spectral_rmse(B, X_rec, Z),
        inverse_ability=inverse_ability(A_inv, A),
        rmse=None if X_truth is None else rmse(X_truth, X_rec),
    )
