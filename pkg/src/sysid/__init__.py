"""Active identification of linear time-invariant systems.

Simulation of controlled LTI dynamics, recursive least-squares estimation,
and input planning: a greedy one-step optimal-design policy solved through a
sphere-constrained quadratic program, projected-gradient planning of whole
input sequences, a Monte-Carlo oracle, and a random baseline, plus an
experiment harness with a CLI.
"""

from ._accel import backend_name
from .criteria import Criterion, criterion_value, design_cost
from .estimation import (
    EstimatorState,
    SingularMomentError,
    ols_fit,
    rls_update,
    squared_error,
)
from .gradient import (
    DesignObjective,
    OracleMseObjective,
    PlanningError,
    Schedule,
    design_cost_gradient,
    oracle_mse_gradient,
    plan_gradient,
    project_power,
    sequential_identify,
)
from .greedy import (
    OneStepProblem,
    RunResult,
    SecularSolveError,
    SphereQp,
    build_one_step,
    greedy_identify,
    greedy_step,
    reduce_to_qp,
    solve_sphere_qp,
)
from .linalg import (
    NearSingularUpdateError,
    RankOneUpdate,
    det_rank_one,
    pinv_differential,
    sm_inverse,
    trace_rank_one,
)
from .system import (
    ControllabilityError,
    IdentMode,
    LtiSystem,
    Trajectory,
    controllability_matrix,
    deterministic_covariates,
    expected_gramian,
    fisher_information,
    gramian,
    mean_fluctuation_decomposition,
    moment_matrix,
    simulate,
    step,
    stream_rng,
)

__version__ = "0.1.0"

__all__ = [
    "Criterion",
    "criterion_value",
    "design_cost",
    "EstimatorState",
    "SingularMomentError",
    "ols_fit",
    "rls_update",
    "squared_error",
    "DesignObjective",
    "OracleMseObjective",
    "PlanningError",
    "Schedule",
    "design_cost_gradient",
    "oracle_mse_gradient",
    "plan_gradient",
    "project_power",
    "sequential_identify",
    "OneStepProblem",
    "RunResult",
    "SecularSolveError",
    "SphereQp",
    "build_one_step",
    "greedy_identify",
    "greedy_step",
    "reduce_to_qp",
    "solve_sphere_qp",
    "NearSingularUpdateError",
    "RankOneUpdate",
    "det_rank_one",
    "pinv_differential",
    "sm_inverse",
    "trace_rank_one",
    "ControllabilityError",
    "IdentMode",
    "LtiSystem",
    "Trajectory",
    "controllability_matrix",
    "deterministic_covariates",
    "expected_gramian",
    "fisher_information",
    "gramian",
    "mean_fluctuation_decomposition",
    "moment_matrix",
    "simulate",
    "step",
    "stream_rng",
    "backend_name",
]
