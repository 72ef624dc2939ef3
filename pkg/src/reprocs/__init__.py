"""Online robust PCA by recursive projected compressed sensing (ReProCS).

Submodules
----------
linalg          basis matrices, EVD, subspace error, denseness and RIC
signal_model    synthetic AR(1) low-rank plus sparse streams
sparse_recovery BPDN, support thresholding, least-squares refit
algorithm       the ReProCS state machine and projection-PCA
bounds          guarantee-quantity calculators
pcp             batch principal component pursuit baseline
experiment      Monte-Carlo runs and result serialization
"""

from .algorithm import FrameEstimate, ReprocsParams, ReprocsState, init, proj_pca, process_frame, run_stream
from .bounds import (
    BoundParams,
    ZetaSequence,
    alpha_add,
    f_inc,
    fact_constants,
    k_of_zeta,
    ric_phi_bounds,
    xi0,
    zeta_plus_seq,
)
from .experiment import ExperimentConfig, RunResult, load_config, run_experiment, write_records
from .linalg import (
    BasisMatrix,
    DensenessReport,
    SymEig,
    denseness_coeff,
    orthonormalize,
    ric_projector,
    spectral_norm,
    subspace_error,
    top_r_evd,
)
from .pcp import PcpConfig, PcpSolution, solve_pcp
from .signal_model import GroundTruth, ModelConfig, gamma_new_k, gen_model
from .sparse_recovery import (
    BpdnConfig,
    BpdnSolution,
    ProjectedOperator,
    estimate_support,
    ls_refit,
    solve_bpdn,
)

__version__ = "0.1.0"
