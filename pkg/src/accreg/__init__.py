"""Parallel regularization methods for systems of accretive operator equations."""
from .diagnostics import fit_rate, min_norm_oracle, stagnation_floor, variational_inequality_check
from .errors import (
    CapabilityError,
    ConfigError,
    ContractViolation,
    DimensionMismatch,
    InnerSolveError,
    NoAdmissibleIndex,
    StepError,
)
from .inner import InnerConfig, solve_regularized, solve_shifted_linear
from .newton import (
    NewtonConfig,
    make_source_anchors,
    newton_step,
    rate_gate,
    run_newton,
    run_newton_noisy,
    stopping_index,
)
from .operators import (
    AffineResidual,
    DiagonalMonotone,
    NoiseSpec,
    PsdLinear,
    ResidualOfNonexpansive,
    ScalarMonotone,
    check_accretive,
    check_inverse_uniform_accretive,
    perturb,
)
from .pirm import (
    check_sum_equivalence,
    explicit_collapse_check,
    explicit_step,
    implicit_step,
    run_explicit,
    run_implicit,
    run_implicit_noisy,
)
from .problems import SystemProblem, shared_nullspace_psd
from .schedules import PowerLaw, Table, preset
from .space import SpaceSpec, dual_pair
from .trace import RunTrace

__version__ = "0.1.0"

__all__ = [
    "AffineResidual",
    "CapabilityError",
    "ConfigError",
    "ContractViolation",
    "DiagonalMonotone",
    "DimensionMismatch",
    "InnerConfig",
    "InnerSolveError",
    "NewtonConfig",
    "NoAdmissibleIndex",
    "NoiseSpec",
    "PowerLaw",
    "PsdLinear",
    "ResidualOfNonexpansive",
    "RunTrace",
    "ScalarMonotone",
    "SpaceSpec",
    "StepError",
    "SystemProblem",
    "Table",
    "check_accretive",
    "check_inverse_uniform_accretive",
    "check_sum_equivalence",
    "dual_pair",
    "explicit_collapse_check",
    "explicit_step",
    "fit_rate",
    "implicit_step",
    "make_source_anchors",
    "min_norm_oracle",
    "newton_step",
    "perturb",
    "preset",
    "rate_gate",
    "run_explicit",
    "run_implicit",
    "run_implicit_noisy",
    "run_newton",
    "run_newton_noisy",
    "shared_nullspace_psd",
    "solve_regularized",
    "solve_shifted_linear",
    "stagnation_floor",
    "stopping_index",
    "variational_inequality_check",
]
