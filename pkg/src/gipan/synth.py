"""Synthetic pair generation, the fusion pipeline and the DSE ablation grid.

Synthetic pairs follow the reduced-resolution protocol: a reference cube
``X`` is turned into a pan image ``Y = X A`` (equal band weights by default)
and an MS image ``Z = Bhat X`` with ``Bhat`` the ``r x r`` block mean.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .cube import CubePair, RasterCube, as_cube, as_matrix, band_select
from .errors import DataError, RankDeficiencyError, ShapeMismatchError
from .fusion import (FusionResult, Method, fuse_gsa, fuse_mtf_glp_cbd, fuse_pcs,
                     fuse_pmra)
from .linalg import full_rank_left_pinv, left_pinv, moore_penrose
from .metrics import CSV_FIELDS, MetricReport, consistent_rmse, evaluate
from .prior import PriorBox, PriorInverse, solve_prior_inverse
from .response import SpectralResponse, estimate_A_dse
from .sampling import BlockMeanDown, SpatialOperator, dse_wrap, make_upsampler

log = logging.getLogger(__name__)

CSV_HEADER = ("method", "dse") + CSV_FIELDS
METHOD_ORDER = (Method.MTF_GLP_CBD, Method.GSA, Method.PCS, Method.PMRA)


@dataclass(frozen=True)
class SynthSpec:
    scale: int = 2
    pan_weights: str | Sequence[float] = "equal"
    seed: int = 0

    def __post_init__(self):
        if self.scale < 2:
            raise ValueError(f"scale must be >= 2, got {self.scale}")
        if isinstance(self.pan_weights, str):
            if self.pan_weights != "equal":
                raise ValueError(f"unknown weight preset {self.pan_weights!r}")
        else:
            object.__setattr__(self, "pan_weights",
                               tuple(float(w) for w in self.pan_weights))

    def weights(self, bands: int) -> np.ndarray:
        """``bands x 1`` pan weights."""
        if self.pan_weights == "equal":
            return np.full((bands, 1), 1.0 / bands)
        w = np.asarray(self.pan_weights, dtype=np.float64)
        if w.size != bands:
            raise ShapeMismatchError(f"{w.size} pan weights given for {bands} bands")
        return w[:, np.newaxis]


def random_cube(height: int, width: int, bands: int, seed: int = 0,
                n_waves: int = 4, noise: float = 2.0) -> RasterCube:
    """Seeded cube of smooth sinusoid mixtures plus a little white noise.

    Each band gets its own waves and offset, so the band matrix is well
    conditioned and covariances are non-degenerate.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.arange(height) / height, np.arange(width) / width,
                         indexing="ij")
    data = np.empty((bands, height, width))
    for b in range(bands):
        band = np.full((height, width), rng.uniform(200.0, 800.0))
        for _ in range(n_waves):
            fy, fx = rng.uniform(0.5, 4.0, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            band += rng.uniform(20.0, 120.0) * np.sin(2 * np.pi * (fy * yy + fx * xx) + phase)
        band += noise * rng.standard_normal((height, width))
        data[b] = band
    return RasterCube(data, copy=False)


def generate_pair(X: RasterCube, spec: SynthSpec = SynthSpec()):
    """Degrade ``X`` into ``(pan, ms, A_true)``."""
    r = spec.scale
    if X.height % r or X.width % r:
        raise ShapeMismatchError(f"cube {X.height}x{X.width} not divisible by scale {r}")
    A = spec.weights(X.bands)
    Xm = as_matrix(X)
    pan = as_cube(Xm @ A, X.height, X.width)
    bhat = BlockMeanDown(X.shape, r)
    ms = as_cube(bhat.apply(Xm), *bhat.out_shape)
    return pan, ms, SpectralResponse(A, source="assumed")


@dataclass(frozen=True)
class FusionSetup:
    """Everything the four methods need for one pair and one DSE setting."""

    Y: np.ndarray
    Z: np.ndarray
    bhat: SpatialOperator
    B: SpatialOperator
    V: SpatialOperator
    A: SpectralResponse
    prior: PriorInverse
    dse: bool

    @property
    def warnings(self) -> tuple[str, ...]:
        notes = tuple(getattr(self.B, "warnings", ()))
        if not self.prior.feasible:
            notes += ("prior box admits no inverse with A_inv A = 1; "
                      "using the unconstrained equality solution",)
        return notes


def build_setup(pan: RasterCube, ms: RasterCube, dse: bool = False,
                upsampler: str = "replicate", box: PriorBox = PriorBox(),
                z_pinv=None) -> FusionSetup:
    """Estimate ``A`` with the block-mean down-sampler and pick ``B``.

    With ``dse`` the spatial response is ``Z Z^+ Bhat``; otherwise it is the
    plain block mean. ``A`` is the same in both cases.
    """
    pair = CubePair.infer(pan, ms)
    if pan.bands != 1:
        raise DataError(f"pan must have a single band, got {pan.bands}")
    Y = as_matrix(pan)
    Z = as_matrix(ms)
    bhat = BlockMeanDown(pan.shape, pair.scale)
    if z_pinv is None:
        try:
            z_pinv = full_rank_left_pinv(Z)
        except RankDeficiencyError:
            log.warning("ms image is rank deficient; using the SVD pseudoinverse")
            z_pinv = moore_penrose(Z)
    A = estimate_A_dse(Y, Z, bhat, z_pinv=z_pinv)
    B = dse_wrap(bhat, Z, z_pinv=z_pinv) if dse else bhat
    V = make_upsampler(upsampler, ms.shape, pair.scale)
    prior = solve_prior_inverse(A.A, box)
    return FusionSetup(Y, Z, bhat, B, V, A, prior, dse)


def run_method(setup: FusionSetup, method) -> FusionResult:
    method = Method(method)
    Y, Z, B, V, A = setup.Y, setup.Z, setup.B, setup.V, setup.A
    if method is Method.PCS:
        return fuse_pcs(Y, Z, V, A, setup.prior.m, dse=setup.dse)
    if method is Method.PMRA:
        return fuse_pmra(Y, Z, B, V, setup.prior.m, A, dse=setup.dse)
    if method is Method.GSA:
        return fuse_gsa(Y, Z, V, A, dse=setup.dse)
    return fuse_mtf_glp_cbd(Y, Z, B, V, A, dse=setup.dse)


def score(setup: FusionSetup, result: FusionResult, truth: RasterCube | None = None,
          consistent: float | None = None) -> MetricReport:
    X_truth = None if truth is None else as_matrix(truth)
    return evaluate(result.matrix, setup.Y, setup.Z, setup.A.A, result.A_inv_used,
                    setup.B, X_truth=X_truth, consistent=consistent)


@dataclass(frozen=True)
class AblationRow:
    method: Method
    dse: bool
    metrics: MetricReport

    def csv_values(self) -> list[str]:
        return [self.method.value, "true" if self.dse else "false",
                *self.metrics.csv_values()]


def run_ablation(pan: RasterCube, ms: RasterCube, spec: SynthSpec | None = None, *,
                 upsampler: str = "replicate", box: PriorBox = PriorBox(),
                 truth: RasterCube | None = None) -> list[AblationRow]:
    """All four methods with and without down-sampling enhancement.

    Rows come out ordered DSE off then on, and within each by
    MTF-GLP-CBD, GSA, PCS, PMRA. The Consistent RMSE is computed once per
    DSE setting and shared by its four rows.
    """
    if spec is not None:
        pair = CubePair.infer(pan, ms)
        if pair.scale != spec.scale:
            raise ShapeMismatchError(
                f"pair has scale {pair.scale}, synthetic spec says {spec.scale}")
    z_pinv = left_pinv(as_matrix(ms))
    rows = []
    for dse in (False, True):
        setup = build_setup(pan, ms, dse=dse, upsampler=upsampler, box=box, z_pinv=z_pinv)
        for note in setup.warnings:
            log.warning(note)
        consistent = consistent_rmse(setup.Z, setup.A.A, setup.B, setup.Y)
        for method in METHOD_ORDER:
            result = run_method(setup, method)
            rows.append(AblationRow(method, dse, score(setup, result, truth, consistent)))
    return rows


def rows_to_csv(rows: Sequence[AblationRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.csv_values())
    return buf.getvalue()


def rows_to_table(rows: Sequence[AblationRow]) -> str:
    """Two-decimal text table in the layout of the ablation tables."""
    head = f"{'method':<6} {'dse':<5} {'consist':>9} {'spatial':>9} {'spectral':>9} {'A_inv A':>8} {'rmse':>9}"
    lines = [head]
    for row in rows:
        m = row.metrics
        rm = "-" if m.rmse is None else f"{m.rmse:.2f}"
        lines.append(f"{row.method.value:<6} {('yes' if row.dse else 'no'):<5} "
                     f"{m.consistent_rmse:>9.2f} {m.spatial_rmse:>9.2f} "
                     f"{m.spectral_rmse:>9.2f} {m.inverse_ability:>8.2f} {rm:>9}")
    return "\n".join(lines)


def percentile_stretch(band, low: float = 2.0, high: float = 98.0) -> np.ndarray:
    """Map ``band`` to uint8 with its ``low``/``high`` percentiles at 0/255.

    A band with no spread maps to mid gray.
    """
    band = np.asarray(band, dtype=np.float64)
    lo, hi = np.percentile(band, [low, high])
    if hi <= lo:
        return np.full(band.shape, 128, dtype=np.uint8)
    scaled = np.clip((band - lo) / (hi - lo), 0.0, 1.0) * 255.0
    return np.rint(scaled).astype(np.uint8)


def render_composite(X: RasterCube, band_indices: Sequence[int], out_path) -> Path:
    """Write a 3-channel 8-bit preview of the selected (0-based) bands."""
    from PIL import Image

    if len(band_indices) != 3:
        raise DataError(f"a composite needs 3 bands, got {len(band_indices)}")
    sel = band_select(X, band_indices)
    rgb = np.stack([percentile_stretch(b) for b in sel.data], axis=-1)
    out_path = Path(out_path)
    Image.fromarray(rgb).save(out_path)
    return out_path
