"""Spectral inverses ``A_inv`` (``1 x S`` rows) for single-band pan.

Two constructions live here: the box-constrained prior inverse used by the
PCS/PMRA methods, and the covariance-ratio weights of GSA (which MTF-GLP-CBD
shares with a different intensity image).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, ShapeMismatchError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PriorBox:
    lower: float = 0.9
    upper: float = 1.4

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"box lower bound {self.lower} must be below upper {self.upper}")

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    @classmethod
    def parse(cls, text: str) -> "PriorBox":
        """Parse ``"lower,upper"``."""
        try:
            lo, hi = (float(v) for v in text.split(","))
        except ValueError:
            raise ValueError(f"box must be 'lower,upper', got {text!r}") from None
        return cls(lo, hi)


@dataclass(frozen=True)
class PriorInverse:
    m: np.ndarray
    inverse_ability: float
    feasible: bool


def _response_vector(A) -> np.ndarray:
    a = np.asarray(A, dtype=np.float64)
    if a.ndim == 2:
        if a.shape[1] != 1:
            raise ShapeMismatchError(
                f"prior inverse supports a single pan band, got A of shape {a.shape}")
        a = a[:, 0]
    if a.ndim != 1:
        raise ShapeMismatchError(f"A must be a column vector, got shape {a.shape}")
    if not np.any(a):
        raise DegenerateError("spectral response is zero; no inverse satisfies m.A = 1")
    return a


def box_feasible(A, box: PriorBox = PriorBox()) -> bool:
    """Whether some ``m`` in the box satisfies ``m . A = 1``.

    ``m . A`` ranges over an interval whose ends are the sums of the
    per-coordinate extremes ``min/max(lower*a_i, upper*a_i)``.
    """
    a = _response_vector(A)
    lo = np.minimum(box.lower * a, box.upper * a).sum()
    hi = np.maximum(box.lower * a, box.upper * a).sum()
    return bool(lo <= 1.0 <= hi)


def solve_prior_inverse(A, box: PriorBox = PriorBox()) -> PriorInverse:
    """Box-constrained inverse closest to the box centre.

    Minimizes ``||m - c 1||`` subject to ``m . A = 1`` and
    ``lower <= m <= upper`` with ``c`` the box centre. The minimizer has the
    form ``clip(c + lam * a)``; ``lam`` is found by locating the breakpoint
    interval where the (nondecreasing, piecewise linear) constraint value
    crosses 1, then re-solving the equality over the unclipped coordinates
    with the clipped ones pinned at their bounds.

    When the box admits no solution, the equality-only Lagrange point
    ``c 1 + lam a`` is returned with ``feasible=False``.
    """
    a = _response_vector(A)
    lo, hi, c = box.lower, box.upper, box.center

    if not box_feasible(a, box):
        lam = (1.0 - c * a.sum()) / (a @ a)
        m = c + lam * a
        return PriorInverse(m[np.newaxis, :], float(m @ a), False)

    nz = a != 0
    bps = np.unique(np.concatenate([(lo - c) / a[nz], (hi - c) / a[nz]]))
    fvals = np.clip(c + np.outer(bps, a), lo, hi) @ a
    k = int(np.searchsorted(fvals, 1.0, side="left"))
    k = min(k, len(bps) - 1)

    if fvals[k] == 1.0 or k == 0:
        # k == 0 only when the lower end equals 1 up to rounding
        lam = bps[k]
    else:
        mid = 0.5 * (bps[k - 1] + bps[k])
        trial = c + mid * a
        free = nz & (trial > lo) & (trial < hi)
        pinned = np.clip(trial, lo, hi)
        clipped = nz & ~free
        lam = (1.0 - a[clipped] @ pinned[clipped] - c * a[free].sum()) / (a[free] @ a[free])

    m = np.clip(c + lam * a, lo, hi)
    return PriorInverse(m[np.newaxis, :], float(m @ a), True)


def sample_prior_inverse(A, box: PriorBox = PriorBox(), seed=None,
                         max_tries: int = 100_000) -> PriorInverse:
    """Draw ``m`` uniformly from the box slice ``{m . A = 1}``.

    All coordinates but the one with the largest ``|a_i|`` are drawn
    uniformly; that one is solved from the constraint and the draw is kept
    if it lands in the box. Falls back to :func:`solve_prior_inverse` if the
    box is infeasible or no draw is accepted within ``max_tries``.
    """
    a = _response_vector(A)
    if not box_feasible(a, box):
        return solve_prior_inverse(a, box)
    rng = np.random.default_rng(seed)
    j = int(np.argmax(np.abs(a)))
    others = np.arange(a.size) != j
    batch = 1024
    tried = 0
    while tried < max_tries:
        draws = rng.uniform(box.lower, box.upper, size=(batch, a.size))
        draws[:, j] = (1.0 - draws[:, others] @ a[others]) / a[j]
        ok = (draws[:, j] >= box.lower) & (draws[:, j] <= box.upper)
        if ok.any():
            m = draws[int(np.argmax(ok))]
            return PriorInverse(m[np.newaxis, :], float(m @ a), True)
        tried += batch
    log.warning("no prior sample accepted in %d draws; using the deterministic solution", tried)
    return solve_prior_inverse(a, box)


def projection_weights(P, Z) -> np.ndarray:
    """``var(P)^{-1} cov(P, Z)`` with centred, ``1/n``-normalized moments.

    ``P`` is an ``n x s`` intensity image and ``Z`` the ``n x S`` multiband
    image on the same pixel grid. Returns the ``s x S`` weight matrix.
    """
    P = np.asarray(P, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, np.newaxis]
    if P.shape[0] != Z.shape[0]:
        raise ShapeMismatchError(
            f"intensity has {P.shape[0]} pixels, multiband image has {Z.shape[0]}")
    n = P.shape[0]
    Pc = P - P.mean(axis=0)
    Zc = Z - Z.mean(axis=0)
    var = Pc.T @ Pc / n
    cov = Pc.T @ Zc / n
    scale = max(1.0, float(np.abs(P).max()))
    floor = (64 * np.finfo(float).eps * scale) ** 2
    if var.shape == (1, 1):
        if var[0, 0] <= floor:
            raise DegenerateError("intensity image has zero variance")
        return cov / var[0, 0]
    if np.linalg.eigvalsh(var).min() <= floor:
        raise DegenerateError("intensity covariance is singular")
    return np.linalg.solve(var, cov)


def gsa_weights(Z, A) -> np.ndarray:
    """GSA injection weights ``W = var(Z A)^{-1} cov(Z A, Z)``; ``W A = 1`` by construction."""
    Z = np.asarray(Z, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, np.newaxis]
    if Z.shape[1] != A.shape[0]:
        raise ShapeMismatchError(f"Z has {Z.shape[1]} bands, A has {A.shape[0]} rows")
    return projection_weights(Z @ A, Z)
