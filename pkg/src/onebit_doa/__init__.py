"""DoA estimation from one-bit sparse linear array measurements.

Co-array MUSIC estimators for sign-quantized snapshots, the pessimistic
one-bit Cramer-Rao bound, identifiability tests, closed-form asymptotic
error theory, and a reproducible Monte-Carlo benchmark harness.
"""

__version__ = "0.1.0"

from .analysis import (
    AsymptoticErrorModel,
    ResolutionBound,
    asymptotic_error_covariance,
    high_snr_mse_limit,
    resolution_lower_bound,
)
from .bounds import (
    CrbReport,
    FimComponents,
    IdentifiabilityVerdict,
    crb_infinite,
    crb_onebit_pessimistic,
    high_snr_crb_limit,
    identifiability_test,
    worst_case_fim,
)
from .covariance import (
    CovarianceBundle,
    ModelCovariance,
    arcsine_law,
    bundle_from_signs,
    model_covariance,
    offdiag_and_gamma,
    reconstruct_normalized_covariance,
    sample_covariance,
    sine_map,
)
from .estimators import (
    DoaEstimate,
    EstimatorOptions,
    PhiEstimate,
    augmented_covariance,
    baseline_music,
    enhanced_phi,
    eocab_music,
    music,
    rebuild_rbar,
)
from .geometry import (
    ArrayGeometry,
    InvalidGeometryError,
    SelectionSet,
    build_geometry,
    selection_matrices,
    standard_array,
    steering_matrix,
)
from .harness import (
    ExperimentConfig,
    MonteCarloSummary,
    emit_results,
    resolution_experiment,
    run_experiment,
)
from .moments import (
    GammaMatrix,
    SigmaMatrix,
    gamma_matrix,
    orthant_probability,
    sigma_matrix,
    sigma_monte_carlo,
    sign_moment2,
    sign_moment4,
)
from .signal import (
    SourceScene,
    equally_spaced_thetas,
    one_bit_quantize,
    scene_from_snr_db,
    simulate_snapshots,
)

__all__ = [name for name in dir() if not name.startswith("_")]
