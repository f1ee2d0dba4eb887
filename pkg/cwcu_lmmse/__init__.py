import logging

from .estimators import (
    apply_estimator,
    blue_b1,
    blue_b2,
    conditional_mean_coefficients,
    cwcu_error_covariance,
    cwcu_from_moments,
    cwcu_linear_gaussian,
    cwcu_linear_independent,
    cwcu_row_alternative,
    d_matrix_ratio_form,
    generic_error_covariance,
    lmmse_from_moments,
    lmmse_linear,
)
from .exceptions import (
    CwcuError,
    CwcuModelError,
    CwcuNumericalError,
    CwcuValidationError,
    DegenerateRegressorError,
    DimensionMismatchError,
    FactorizationFailureError,
    InconsistentPriorError,
    InsufficientSamplesError,
    NotDiagonalPriorError,
    NotHermitianError,
    NotPositiveDefiniteError,
    RankDeficientError,
    SingularCovarianceError,
    UninformativeComponentError,
    UnobservableComponentError,
)
from .models import (
    AffineEstimator,
    ComponentDistribution,
    ComponentKind,
    ConditionalBiasReport,
    DiagonalGain,
    EmpiricalPerformance,
    EstimatorKind,
    EstimatorPerformance,
    GaussianPrior,
    IndependentPrior,
    JointGaussianModel,
    LinearModel,
    MonteCarloReport,
    SubspaceConstraint,
    TrialConfig,
)
from .montecarlo import MonteCarloRunner, conditional_bias_regression, run_trials, sample_parameters
from .wlan import ChanestSetup, analytic_bmse_curves, assemble_model

__version__ = "0.1.0"

__all__ = [
    "lmmse_from_moments",
    "lmmse_linear",
    "cwcu_from_moments",
    "d_matrix_ratio_form",
    "cwcu_linear_gaussian",
    "cwcu_linear_independent",
    "cwcu_row_alternative",
    "blue_b1",
    "blue_b2",
    "cwcu_error_covariance",
    "generic_error_covariance",
    "apply_estimator",
    "conditional_mean_coefficients",
    "CwcuError",
    "CwcuModelError",
    "CwcuNumericalError",
    "CwcuValidationError",
    "NotHermitianError",
    "NotPositiveDefiniteError",
    "DimensionMismatchError",
    "UnobservableComponentError",
    "NotDiagonalPriorError",
    "InconsistentPriorError",
    "SingularCovarianceError",
    "RankDeficientError",
    "FactorizationFailureError",
    "UninformativeComponentError",
    "DegenerateRegressorError",
    "InsufficientSamplesError",
    "JointGaussianModel",
    "LinearModel",
    "AffineEstimator",
    "DiagonalGain",
    "EstimatorKind",
    "EstimatorPerformance",
    "SubspaceConstraint",
    "ComponentKind",
    "ComponentDistribution",
    "GaussianPrior",
    "IndependentPrior",
    "TrialConfig",
    "ConditionalBiasReport",
    "EmpiricalPerformance",
    "MonteCarloReport",
    "MonteCarloRunner",
    "run_trials",
    "sample_parameters",
    "conditional_bias_regression",
    "ChanestSetup",
    "assemble_model",
    "analytic_bmse_curves",
]

logging.getLogger(__name__).addHandler(logging.NullHandler())
