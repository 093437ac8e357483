"""Parallel-in-time ODE integration by pipelined integral deferred correction.

Wrap a user-supplied first-order explicit or implicit stepper into a
Pth-order integrator whose prediction and correction levels run
concurrently with a one-step lag.
"""

from .core import (
    IvpProblem,
    StepKind,
    StepperContract,
    TimeGrid,
    eval_rhs,
    euler_reference_solve,
)
from .corrector import (
    LevelStencil,
    correct_step_explicit,
    correct_step_implicit,
    predict_step,
)
from .linalg import (
    BandedSystem,
    Damping,
    NewtonConfig,
    NewtonConvergenceError,
    SingularMatrixError,
    finite_difference_jacobian,
    newton_solve,
    solve_banded,
    solve_dense,
)
from .pipeline import (
    MAX_ORDER,
    Executor,
    PipelineState,
    RidcConfig,
    RidcConfigError,
    RidcResult,
    StepFailureError,
    WORKER_ENV_VAR,
    efficiency_ratio,
    ridc_solve,
    startup_schedule,
    startup_steps,
)
from .problems import (
    BrusselatorConfig,
    brusselator_initial_state,
    brusselator_jacobian_bands,
    brusselator_problem,
    brusselator_rhs,
    decay_exact,
    decay_implicit_stepper,
    decay_problem,
    explicit_euler_stepper,
    laplacian_dirichlet,
    poly_exact,
    poly_implicit_stepper,
    poly_problem,
    stiff_exact,
    stiff_implicit_stepper,
    stiff_problem,
)
from .quadrature import IntegrationMatrix, apply_quadrature, build_integration_matrix

__version__ = "0.1.0"

__all__ = [
    "IvpProblem",
    "StepKind",
    "StepperContract",
    "TimeGrid",
    "eval_rhs",
    "euler_reference_solve",
    "LevelStencil",
    "predict_step",
    "correct_step_explicit",
    "correct_step_implicit",
    "IntegrationMatrix",
    "build_integration_matrix",
    "apply_quadrature",
    "MAX_ORDER",
    "Executor",
    "PipelineState",
    "RidcConfig",
    "RidcConfigError",
    "RidcResult",
    "StepFailureError",
    "WORKER_ENV_VAR",
    "efficiency_ratio",
    "ridc_solve",
    "startup_schedule",
    "startup_steps",
    "BandedSystem",
    "Damping",
    "NewtonConfig",
    "NewtonConvergenceError",
    "SingularMatrixError",
    "finite_difference_jacobian",
    "newton_solve",
    "solve_banded",
    "solve_dense",
    "BrusselatorConfig",
    "brusselator_initial_state",
    "brusselator_jacobian_bands",
    "brusselator_problem",
    "brusselator_rhs",
    "decay_exact",
    "decay_implicit_stepper",
    "decay_problem",
    "explicit_euler_stepper",
    "laplacian_dirichlet",
    "poly_exact",
    "poly_implicit_stepper",
    "poly_problem",
    "stiff_exact",
    "stiff_implicit_stepper",
    "stiff_problem",
    "__version__",
]
