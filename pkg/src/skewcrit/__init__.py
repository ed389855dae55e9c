"""Numerics for finite-dimensional skew critical problems.

Solve constrained critical-point systems given by a one-form, a graph
distribution, and a constraint map; estimate contact orders and leading
residuals of adapted families; and verify the structural laws relating
perturbed problem data to perturbed solutions.
"""

from .build import (
    adapted_family_from_exprs,
    constraint_from_exprs,
    distribution_from_exprs,
    one_form_from_exprs,
    skew_problem_from_exprs,
)
from .configio import (
    CustomConfig,
    ExperimentConfig,
    ProblemConfig,
    canonical_json,
    config_hash,
    load_config,
    parse_config,
    serialize_config,
)
from .contact import (
    AdaptedFamily,
    ContactEstimate,
    compose_residual_check,
    contact_estimate,
    default_h_seq,
    distribution_residual,
    fdot,
    graph_symmetry_bump_check,
    graph_to_map,
    hat_contact_drop_check,
    hat_divide,
    inverse_residual_check,
    residual_chart_transform_check,
)
from .errors import SkewCritError
from .geometry import (
    AmbientChart,
    Constraint,
    GraphDistribution,
    OneForm,
    SkewProblem,
    alpha_on_D,
    skew_hessian,
)
from .registry import example_config, example_description, example_names, example_raw
from .solver import NewtonSettings, SolveResult, continuation, newton_step, solve
from .variation import (
    GroupAction,
    ProblemFamily,
    assemble_residual_system,
    data_contact_checks,
    equivariance_check,
    predict_solution_residual,
    solution_family,
    verify_gamma_contact,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptedFamily",
    "AmbientChart",
    "Constraint",
    "ContactEstimate",
    "CustomConfig",
    "ExperimentConfig",
    "GraphDistribution",
    "GroupAction",
    "NewtonSettings",
    "OneForm",
    "ProblemConfig",
    "ProblemFamily",
    "SkewCritError",
    "SkewProblem",
    "SolveResult",
    "adapted_family_from_exprs",
    "alpha_on_D",
    "assemble_residual_system",
    "canonical_json",
    "compose_residual_check",
    "config_hash",
    "constraint_from_exprs",
    "contact_estimate",
    "continuation",
    "data_contact_checks",
    "default_h_seq",
    "distribution_from_exprs",
    "distribution_residual",
    "equivariance_check",
    "example_config",
    "example_description",
    "example_names",
    "example_raw",
    "fdot",
    "graph_symmetry_bump_check",
    "graph_to_map",
    "hat_contact_drop_check",
    "hat_divide",
    "inverse_residual_check",
    "load_config",
    "newton_step",
    "one_form_from_exprs",
    "parse_config",
    "predict_solution_residual",
    "residual_chart_transform_check",
    "serialize_config",
    "skew_hessian",
    "skew_problem_from_exprs",
    "solution_family",
    "solve",
    "verify_gamma_contact",
]
