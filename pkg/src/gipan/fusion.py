"""Pan-sharpening in generalized-inverse form.

Every method here produces

    X = V Z + D @ G

where ``V`` up-samples the multispectral image ``Z``, ``D`` is a pan detail
image and ``G`` is a ``s x S`` injection row. Component-substitution methods
(PCS, GSA) take ``D = Y - V (Z A)``; multiresolution methods (PMRA,
MTF-GLP-CBD) take ``D = Y - V (B Y)``.

Inputs are pixel matrices: ``Y`` is ``HW x s``, ``Z`` is ``hw x S``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .cube import RasterCube, as_cube, as_matrix
from .errors import ShapeMismatchError
from .metrics import rms
from .prior import gsa_weights, projection_weights
from .response import SpectralResponse
from .sampling import SpatialOperator

#: Tolerance on ``A_inv A = I`` below which no warning is recorded.
GINV_TOL = 1e-8


class Method(str, enum.Enum):
    PCS = "pcs"
    PMRA = "pmra"
    GSA = "gsa"
    MTF_GLP_CBD = "cbd"

    @property
    def form(self) -> str:
        return "cs" if self in (Method.PCS, Method.GSA) else "mra"


@dataclass(frozen=True)
class FusionResult:
    X: RasterCube
    method: Method
    dse: bool
    A_used: SpectralResponse | None
    A_inv_used: np.ndarray
    W_used: np.ndarray | None = None
    # RMS of the predicted ``X A - Y`` when A_inv is not a generalized inverse
    predicted_spatial_residual: float | None = None
    warnings: tuple[str, ...] = field(default=())

    @property
    def matrix(self) -> np.ndarray:
        return as_matrix(self.X)


def _mat(M, name):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, np.newaxis]
    if M.ndim != 2:
        raise ShapeMismatchError(f"{name} must be a matrix, got shape {M.shape}")
    return M


def _row(G, name):
    G = np.asarray(G, dtype=np.float64)
    return G[np.newaxis, :] if G.ndim == 1 else G


def _response(A):
    if isinstance(A, SpectralResponse):
        return A, A.A
    A = _mat(A, "A")
    return SpectralResponse(A), A


def _check_inputs(Y, Z, V, B=None):
    Y, Z = _mat(Y, "Y"), _mat(Z, "Z")
    if V.in_pixels != Z.shape[0]:
        raise ShapeMismatchError(
            f"up-sampler expects {V.in_pixels} ms pixels, got {Z.shape[0]}")
    if V.out_pixels != Y.shape[0]:
        raise ShapeMismatchError(
            f"up-sampler produces {V.out_pixels} pixels, pan has {Y.shape[0]}")
    if B is not None and (B.in_shape != V.out_shape or B.out_shape != V.in_shape):
        raise ShapeMismatchError("down-sampler and up-sampler shapes do not pair up")
    return Y, Z


def _check_injection(G, A, S, s):
    if G.shape != (s, S):
        raise ShapeMismatchError(f"injection row has shape {G.shape}, expected {(s, S)}")
    if A is not None and A.shape != (S, s):
        raise ShapeMismatchError(f"A has shape {A.shape}, expected {(S, s)}")


def _ginv_warning(G, A):
    if A is None:
        return ()
    dev = float(np.abs(G @ A - np.eye(A.shape[1])).max())
    if dev > GINV_TOL:
        return (f"injection row is not a generalized inverse of A "
                f"(max |A_inv A - I| = {dev:.3g})",)
    return ()


def _assemble(VZ, detail, G, shape):
    return as_cube(VZ + detail @ G, *shape)


def fuse_pcs(Y, Z, V: SpatialOperator, A, A_inv, dse: bool = False) -> FusionResult:
    """Prior component substitution: ``X = V Z + (Y - V Z A) A_inv``."""
    Y, Z = _check_inputs(Y, Z, V)
    resp, A = _response(A)
    G = _row(A_inv, "A_inv")
    _check_injection(G, A, Z.shape[1], Y.shape[1])
    VZ = V.apply(Z)
    detail = Y - V.apply(Z @ A)
    warnings = _ginv_warning(G, A)
    predicted = rms(-detail @ (np.eye(A.shape[1]) - G @ A)) if warnings else None
    return FusionResult(_assemble(VZ, detail, G, V.out_shape), Method.PCS, dse,
                        resp, G, None, predicted, warnings)


def fuse_pmra(Y, Z, B: SpatialOperator, V: SpatialOperator, A_inv, A=None,
              dse: bool = False) -> FusionResult:
    """Prior multiresolution analysis: ``X = V Z + (Y - V B Y) A_inv``.

    ``A`` is optional and only used for provenance and the generalized-inverse
    warning.
    """
    Y, Z = _check_inputs(Y, Z, V, B)
    resp, A = (None, None) if A is None else _response(A)
    G = _row(A_inv, "A_inv")
    _check_injection(G, A, Z.shape[1], Y.shape[1])
    VZ = V.apply(Z)
    BY = B.apply(Y)
    detail = Y - V.apply(BY)
    warnings = _ginv_warning(G, A)
    predicted = None
    if warnings:
        predicted = rms(V.apply(Z @ A - BY) - detail @ (np.eye(A.shape[1]) - G @ A))
    return FusionResult(_assemble(VZ, detail, G, V.out_shape), Method.PMRA, dse,
                        resp, G, None, predicted, warnings)


def fuse_gsa(Y, Z, V: SpatialOperator, A, dse: bool = False) -> FusionResult:
    """Gram-Schmidt adaptive: PCS with ``W = var(Z A)^{-1} cov(Z A, Z)`` as the inverse."""
    Y, Z = _check_inputs(Y, Z, V)
    resp, A = _response(A)
    W = gsa_weights(Z, A)
    _check_injection(W, A, Z.shape[1], Y.shape[1])
    VZ = V.apply(Z)
    detail = Y - V.apply(Z @ A)
    return FusionResult(_assemble(VZ, detail, W, V.out_shape), Method.GSA, dse,
                        resp, W, W, None, _ginv_warning(W, A))


def fuse_mtf_glp_cbd(Y, Z, B: SpatialOperator, V: SpatialOperator, A=None,
                     dse: bool = False) -> FusionResult:
    """MTF-GLP with covariance-based injection gains.

    Gains ``g = var(B Y)^{-1} cov(B Y, Z)`` weight the detail ``Y - V B Y``.
    The gains are generally not a generalized inverse of ``A``, so no warning
    is recorded for them.
    """
    Y, Z = _check_inputs(Y, Z, V, B)
    resp = None if A is None else _response(A)[0]
    BY = B.apply(Y)
    g = projection_weights(BY, Z)
    VZ = V.apply(Z)
    detail = Y - V.apply(BY)
    return FusionResult(_assemble(VZ, detail, g, V.out_shape), Method.MTF_GLP_CBD, dse,
                        resp, g, g, None, ())


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.abs(self.lhs - self.rhs).max()) if self.lhs.size else 0.0


def cs_identities(X, Y, Z, A, B, V, W) -> list[IdentityCheck]:
    """Error decomposition for ``X = V Z + (Y - V Z A) W`` with arbitrary ``W``.

    * spatial:  ``X A - Y = (V Z A - Y)(I - W A)``
    * spectral: ``B X - Z = (B V - I) Z + B (Y - V Z A) W``
    """
    X, Y, Z, A = (_mat(M, n) for M, n in ((X, "X"), (Y, "Y"), (Z, "Z"), (A, "A")))
    W = _row(W, "W")
    I_s = np.eye(A.shape[1])
    VZA = V.apply(Z @ A)
    return [
        IdentityCheck("spatial_cs", X @ A - Y, (VZA - Y) @ (I_s - W @ A)),
        IdentityCheck("spectral_cs", B.apply(X) - Z,
                      (B.apply(V.apply(Z)) - Z) + B.apply(Y - VZA) @ W),
    ]


def mra_identities(X, Y, Z, A, B, V, W) -> list[IdentityCheck]:
    """Error decomposition for ``X = V Z + (Y - V B Y) W`` with arbitrary ``W``.

    * spatial:  ``X A - Y = V (Z A - B Y) - (I - V B) Y (I - W A)``
    * spectral: ``B X - Z = (B V - I) Z + (B - B V B) Y W``
    """
    X, Y, Z, A = (_mat(M, n) for M, n in ((X, "X"), (Y, "Y"), (Z, "Z"), (A, "A")))
    W = _row(W, "W")
    I_s = np.eye(A.shape[1])
    BY = B.apply(Y)
    return [
        IdentityCheck("spatial_mra", X @ A - Y,
                      V.apply(Z @ A - BY) - (Y - V.apply(BY)) @ (I_s - W @ A)),
        IdentityCheck("spectral_mra", B.apply(X) - Z,
                      (B.apply(V.apply(Z)) - Z) + (BY - B.apply(V.apply(BY))) @ W),
    ]


def residual_identities(result: FusionResult, Y, Z, A, B, V, W=None) -> list[IdentityCheck]:
    """Check the error-decomposition identities that apply to ``result``'s form.

    ``W`` defaults to the injection row the method used.
    """
    W = result.A_inv_used if W is None else W
    check = cs_identities if result.method.form == "cs" else mra_identities
    return check(result.matrix, Y, Z, A, B, V, W)


def total_error_check(X_truth, Y, Z, B, V, A, A_inv) -> float:
    """Max deviation of ``X - X_mra`` from ``(I - V B) X (I - A A_inv)``.

    Meaningful only when ``Y = X A`` and ``Z = B X``.
    """
    X = _mat(X_truth, "X_truth")
    A = _mat(A, "A")
    G = _row(A_inv, "A_inv")
    X_mra = fuse_pmra(Y, Z, B, V, G, A).matrix
    lhs = X - X_mra
    rhs = (X - V.apply(B.apply(X))) @ (np.eye(A.shape[0]) - A @ G)
    return float(np.abs(lhs - rhs).max())
