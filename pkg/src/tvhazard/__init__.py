"""Time-varying additive hazard regression with TV-penalized step coefficients.

Fits hazard models of the form ``lambda(x, t) = w_0(t) + sum_j x_j(t) w_j(t)``
to interval- and right-censored survival data, where every coefficient path
is a piecewise-constant step function with candidate jumps at the censoring
boundaries and feature change times, selected by a total-variation penalty
(optionally under monotone constraints).
"""

from .baseline import (
    ConstantAdditiveModel,
    ProportionalModel,
    SeparationWarning,
    fit_constant_additive,
    fit_proportional,
    proportional_nll,
)
from .datagen import CampaignSpec, default_scenario, generate, sample_event_time, truth_model
from .formats import (
    FormatError,
    read_model,
    read_observations,
    write_model,
    write_observations,
)
from .likelihood import (
    CensoredDesign,
    HazardModel,
    ZeroBracketWarning,
    cumulative_hazard,
    hazard,
    model_matrix,
    matrix_model,
    nll_dataset,
    nll_gradient,
    nll_observation,
    survival,
)
from .penalty import (
    PenaltyConfig,
    fused_lasso_prox,
    isotonic_project,
    nonneg_clip,
    prox_step,
    tv,
)
from .solver import (
    FitResult,
    NumericalError,
    SolverConfig,
    SolverWarning,
    VarianceReduced,
    fit,
    nonzero_parameter_count,
    objective,
    refine_and_compare,
)
from .timeline import (
    FeaturePath,
    KnotSet,
    Observation,
    StepFunction,
    build_knot_set,
    eval_feature,
    eval_step,
    integrate_step,
    integrate_step_product,
    merge_times,
)

__version__ = "0.1.0"

__all__ = [
    "CampaignSpec",
    "CensoredDesign",
    "ConstantAdditiveModel",
    "FeaturePath",
    "FitResult",
    "FormatError",
    "HazardModel",
    "KnotSet",
    "NumericalError",
    "Observation",
    "PenaltyConfig",
    "ProportionalModel",
    "SeparationWarning",
    "SolverConfig",
    "SolverWarning",
    "StepFunction",
    "VarianceReduced",
    "ZeroBracketWarning",
    "build_knot_set",
    "cumulative_hazard",
    "default_scenario",
    "eval_feature",
    "eval_step",
    "fit",
    "fit_constant_additive",
    "fit_proportional",
    "fused_lasso_prox",
    "generate",
    "hazard",
    "integrate_step",
    "integrate_step_product",
    "isotonic_project",
    "matrix_model",
    "merge_times",
    "model_matrix",
    "nll_dataset",
    "nll_gradient",
    "nll_observation",
    "nonneg_clip",
    "nonzero_parameter_count",
    "objective",
    "prox_step",
    "proportional_nll",
    "read_model",
    "read_observations",
    "refine_and_compare",
    "sample_event_time",
    "survival",
    "truth_model",
    "tv",
    "write_model",
    "write_observations",
]
