"""Pan-sharpening through generalized inverses of the spectral and spatial responses."""

from .cube import CubePair, RasterCube, as_cube, as_matrix, band_select
from .fusion import (FusionResult, Method, fuse_gsa, fuse_mtf_glp_cbd, fuse_pcs,
                     fuse_pmra, residual_identities, total_error_check)
from .linalg import check_generalized_inverse, full_rank_left_pinv, moore_penrose
from .metrics import MetricReport
from .prior import PriorBox, gsa_weights, solve_prior_inverse
from .response import estimate_A_dse, existence_check, kronecker_rank_check
from .sampling import (BilinearUp, BlockMeanDown, ExplicitOperator, ReplicateUp,
                       dse_wrap)
from .synth import SynthSpec, generate_pair, random_cube, run_ablation

__version__ = "0.1.0"
