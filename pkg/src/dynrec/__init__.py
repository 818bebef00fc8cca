"""Sparse recovery of quadratic governing equations from under-sampled bursts."""

from .basis import (
    LEGENDRE,
    MONOMIAL,
    AffineTransform,
    DictionaryMatrix,
    assemble_dictionary,
    change_basis,
    legendre_row,
    localized_columns,
    monomial_row,
    num_columns,
    pullback_affine,
)
from .differentiation import NoiseSpec, add_state_noise, fd_velocity, noise_ratio, rel_l2
from .dynamics import (
    Burst,
    IntegrationFailure,
    InvalidSystemError,
    QuadraticModel,
    SystemSpec,
    fisher_rhs,
    generate_bursts,
    integrate_rk45,
    lorenz96_rhs,
    quadratic_rhs,
    true_model,
)
from .estimator import SparseDynamicsRegressor
from .recovery import (
    RecoveryConfig,
    RecoveryResult,
    evaluate_success,
    min_bursts_for_component,
    recover_component,
    recover_system,
    required_bursts,
)
from .solvers import (
    BpdnConfig,
    debias,
    min_norm_least_squares,
    project_l1_ball,
    sequential_threshold_ls,
    solve_bpdn,
    solve_lasso,
    support_of,
)

__version__ = "0.1.0"

__all__ = [
    "AffineTransform",
    "BpdnConfig",
    "Burst",
    "DictionaryMatrix",
    "IntegrationFailure",
    "InvalidSystemError",
    "LEGENDRE",
    "MONOMIAL",
    "NoiseSpec",
    "QuadraticModel",
    "RecoveryConfig",
    "RecoveryResult",
    "SparseDynamicsRegressor",
    "SystemSpec",
    "add_state_noise",
    "assemble_dictionary",
    "change_basis",
    "debias",
    "evaluate_success",
    "fd_velocity",
    "fisher_rhs",
    "generate_bursts",
    "integrate_rk45",
    "legendre_row",
    "localized_columns",
    "lorenz96_rhs",
    "min_bursts_for_component",
    "min_norm_least_squares",
    "monomial_row",
    "noise_ratio",
    "num_columns",
    "project_l1_ball",
    "pullback_affine",
    "quadratic_rhs",
    "recover_component",
    "recover_system",
    "rel_l2",
    "required_bursts",
    "sequential_threshold_ls",
    "solve_bpdn",
    "solve_lasso",
    "support_of",
    "true_model",
]
