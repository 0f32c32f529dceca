"""Equal-opportunity bias estimation through a noisy sensitive-attribute classifier."""

from .core import (
    AttributeSource,
    BiasReport,
    CorrectedBias,
    ErrorProfile,
    JointTable,
    PredictionRecord,
    Rates,
    build_bias_report,
    build_joint_table,
    ci_violation,
    conditional_errors,
    corrected_bias,
    deltas,
    distortion_factor,
    error_profile,
    forward_noisy_estimates,
    gamma_values,
    general_corrected_bias,
    naive_bias,
    naive_components,
    rates,
    true_bias,
    true_components,
)
from . import errors

__version__ = "0.1.0"

__all__ = [
    "AttributeSource",
    "BiasReport",
    "CorrectedBias",
    "ErrorProfile",
    "JointTable",
    "PredictionRecord",
    "Rates",
    "build_bias_report",
    "build_joint_table",
    "ci_violation",
    "conditional_errors",
    "corrected_bias",
    "deltas",
    "distortion_factor",
    "error_profile",
    "errors",
    "forward_noisy_estimates",
    "gamma_values",
    "general_corrected_bias",
    "naive_bias",
    "naive_components",
    "rates",
    "true_bias",
    "true_components",
    "__version__",
]
