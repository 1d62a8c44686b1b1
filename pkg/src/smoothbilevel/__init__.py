"""Smoothing-based bilevel optimization for sparse-regression hyperparameters.

Pipeline: choose a density kernel (rho1..rho6) and a concave penalty
(psi1..psi4), smooth the lp-quasi-norm regularizer, solve a sequence of
smoothed one-level problems with an interior-point inner solver while the
smoothing parameter shrinks, and certify the limit by its scaled bilevel
KKT residuals.
"""

from .driver import (
    OuterConfig,
    RunResult,
    SBKKTResiduals,
    run_algorithm1,
    sb_kkt_residuals,
)
from .harness import (
    ExperimentConfig,
    RunReport,
    load_experiment_config,
    plot_smoothers,
    run_experiment,
)
from .inner_solver import (
    InnerSolveFailure,
    InnerStats,
    Iterate,
    KKTResiduals,
    LinearSolveError,
    MaxIterationsError,
    NonFiniteError,
    kkt_residuals,
    solve_approx_kkt,
)
from .kernels import (
    KERNEL_IDS,
    AssumptionCReport,
    DensityKernel,
    SmoothAbs,
    check_assumption_C,
    erf_approx,
    make_kernel,
    make_smooth_abs,
)
from .penalties import (
    PENALTY_IDS,
    Penalty,
    assumption_A_constants,
    make_penalty,
    psi_derivs,
    psi_eval,
)
from .problem import (
    BilevelProblem,
    ElasticNetInstance,
    SmoothFn,
    derive_instance_seed,
    gen_synthetic,
    load_instance,
    make_elastic_net,
    problem_from_instance,
    save_instance,
)
from .regularizer import (
    RegEval,
    RegSpec,
    RegularizerWarning,
    exact_reg,
    smoothed_reg,
    smoothed_reg_gap,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionCReport",
    "BilevelProblem",
    "DensityKernel",
    "ElasticNetInstance",
    "ExperimentConfig",
    "InnerSolveFailure",
    "InnerStats",
    "Iterate",
    "KERNEL_IDS",
    "KKTResiduals",
    "LinearSolveError",
    "MaxIterationsError",
    "NonFiniteError",
    "OuterConfig",
    "PENALTY_IDS",
    "Penalty",
    "RegEval",
    "RegSpec",
    "RegularizerWarning",
    "RunReport",
    "RunResult",
    "SBKKTResiduals",
    "SmoothAbs",
    "SmoothFn",
    "assumption_A_constants",
    "check_assumption_C",
    "derive_instance_seed",
    "erf_approx",
    "exact_reg",
    "gen_synthetic",
    "kkt_residuals",
    "load_experiment_config",
    "load_instance",
    "make_elastic_net",
    "make_kernel",
    "make_penalty",
    "make_smooth_abs",
    "plot_smoothers",
    "problem_from_instance",
    "psi_derivs",
    "psi_eval",
    "run_algorithm1",
    "run_experiment",
    "save_instance",
    "sb_kkt_residuals",
    "smoothed_reg",
    "smoothed_reg_gap",
    "solve_approx_kkt",
]
