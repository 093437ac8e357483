"""Single-step prediction and correction updates around the user stepper.

Level 0 (prediction) is the raw user stepper.  A correction level p+1
advances u from t_n to t_{n+1} by the first-order discretization of the
integral error equation, written directly in terms of the solution:

explicit:  u_{n+1} = step(t_n, dt, u_n) - dt*f(t_n, u_n^{prev}) + Q
implicit:  u_{n+1} = step(t_n, dt, u_n - dt*f(t_{n+1}, u_{n+1}^{prev}) + Q)

where "prev" is the level below, Q is the quadrature approximation of the
integral of f(tau, u^{prev}) over the step, and step is the user stepper.
The explicit form post-processes the stepper output; the implicit form
pre-processes the stepper input, and the implicit stepper contract
u = v + dt*f(t_{n+1}, u) then yields the displayed update exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import IvpProblem, StepKind, StepperContract
from .quadrature import IntegrationMatrix, apply_quadrature


@dataclass(frozen=True)
class LevelStencil:
    """Data a correction level needs from the level below for one step.

    window_f_prev_level holds p+2 stored f-vectors of level p = level - 1,
    ordered per the regime convention of apply_quadrature.
    f_prev_level_at_anchor is the stored f entering the -dt*f term:
    f(t_n, u_n^{prev}) for explicit correctors, f(t_{n+1}, u_{n+1}^{prev})
    for implicit ones; it is always a member of the window.
    """

    level: int
    window_f_prev_level: tuple
    u_current: np.ndarray
    f_prev_level_at_anchor: np.ndarray

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"correction level must be >= 1, got {self.level}")
        if len(self.window_f_prev_level) != self.level + 1:
            raise ValueError(
                f"window has {len(self.window_f_prev_level)} entries, "
                f"expected {self.level + 1} for level {self.level}"
            )


def predict_step(
    stepper: StepperContract,
    problem: IvpProblem,
    t_n: float,
    dt: float,
    u_n: np.ndarray,
) -> np.ndarray:
    """Advance the prediction level: one raw user step from t_n."""
    u = np.asarray(stepper.advance(t_n, dt, u_n), dtype=np.float64)
    if u.shape != (problem.dim,):
        raise ValueError(
            f"stepper returned shape {u.shape}, expected ({problem.dim},)"
        )
    return u


def _check_stencil(stencil: LevelStencil, matrix: IntegrationMatrix):
    if matrix.level != stencil.level - 1:
        raise ValueError(
            f"matrix level {matrix.level} does not serve stencil level {stencil.level}"
        )


def correct_step_explicit(
    stepper: StepperContract,
    problem: IvpProblem,
    stencil: LevelStencil,
    matrix: IntegrationMatrix,
    t_n: float,
    dt: float,
    startup_row: int | None = None,
) -> np.ndarray:
    """One explicit correction step: user step, then post-process.

    Returns step(t_n, dt, u_n) - dt*f(t_n, u_n^{prev}) + quadrature.
    """
    if stepper.kind is not StepKind.EXPLICIT:
        raise ValueError("explicit corrector requires an explicit stepper")
    _check_stencil(stencil, matrix)
    q = apply_quadrature(matrix, stencil.window_f_prev_level, startup_row=startup_row)
    v = predict_step(stepper, problem, t_n, dt, stencil.u_current)
    return v - dt * stencil.f_prev_level_at_anchor + q


def correct_step_implicit(
    stepper: StepperContract,
    problem: IvpProblem,
    stencil: LevelStencil,
    matrix: IntegrationMatrix,
    t_n: float,
    dt: float,
    startup_row: int | None = None,
) -> np.ndarray:
    """One implicit correction step: pre-process, then user step.

    Builds v = u_n - dt*f(t_{n+1}, u_{n+1}^{prev}) + quadrature and returns
    step(t_n, dt, v); the implicit contract makes the result satisfy
    u = u_n + dt*f(t_{n+1}, u) - dt*f(t_{n+1}, u_{n+1}^{prev}) + quadrature.
    """
    if stepper.kind is not StepKind.IMPLICIT:
        raise ValueError("implicit corrector requires an implicit stepper")
    _check_stencil(stencil, matrix)
    q = apply_quadrature(matrix, stencil.window_f_prev_level, startup_row=startup_row)
    v = stencil.u_current - dt * stencil.f_prev_level_at_anchor + q
    return predict_step(stepper, problem, t_n, dt, v)
