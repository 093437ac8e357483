"""Bundled problems exercising the wrapper end to end.

Each problem ships with the steppers a user would write: a plain explicit
Euler advance, a closed-form backward Euler advance where the system is
linear in the state, and for the Brusselator a backward Euler advance whose
nonlinear system is solved by Newton with a banded Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import IvpProblem, StepKind, StepperContract
from .linalg import BandedSystem, NewtonConfig, newton_solve


def explicit_euler_stepper(problem: IvpProblem) -> StepperContract:
    """Forward Euler advance built from the problem's own rhs."""

    def advance(t, dt, v):
        return v + dt * problem.rhs(t, v)

    return StepperContract(StepKind.EXPLICIT, advance)


# -- decaying system ---------------------------------------------------------

def decay_problem() -> IvpProblem:
    """Two decoupled decays y_i' = -(i+1) t y_i, y_i(0) = 1, on [0, 1].

    Exact solution y_i(t) = exp(-(i+1) t^2 / 2).
    """

    def rhs(t, y):
        return np.array([-t * y[0], -2.0 * t * y[1]])

    return IvpProblem(dim=2, t0=0.0, t_final=1.0, y0=np.ones(2), rhs=rhs)


def decay_exact(t: float) -> np.ndarray:
    return np.array([math.exp(-t * t / 2.0), math.exp(-t * t)])


def decay_implicit_stepper() -> StepperContract:
    """Backward Euler for the decay system, solved in closed form."""

    def advance(t, dt, v):
        tn = t + dt
        return np.array([v[0] / (1.0 + dt * tn), v[1] / (1.0 + 2.0 * dt * tn)])

    return StepperContract(StepKind.IMPLICIT, advance)


# -- stiff scalar relaxation -------------------------------------------------

def stiff_problem(lam: float) -> IvpProblem:
    """Scalar y' = lam*(y - cos t) - sin t, y(0) = 1, on [0, 1].

    The solution relaxes onto cos t at rate |lam|; with y(0) = cos 0 the
    exact solution is cos t for every lam, so the error isolates the
    integrator.  Requires lam < 0.
    """
    if not lam < 0:
        raise ValueError(f"lam must be negative, got {lam}")

    def rhs(t, y):
        return np.array([lam * (y[0] - math.cos(t)) - math.sin(t)])

    return IvpProblem(dim=1, t0=0.0, t_final=1.0, y0=np.ones(1), rhs=rhs)


def stiff_exact(t: float) -> np.ndarray:
    return np.array([math.cos(t)])


def stiff_implicit_stepper(lam: float) -> StepperContract:
    """Backward Euler for the stiff relaxation, solved in closed form."""

    def advance(t, dt, v):
        tn = t + dt
        return (v - dt * (lam * math.cos(tn) + math.sin(tn))) / (1.0 - dt * lam)

    return StepperContract(StepKind.IMPLICIT, advance)


# -- polynomial forcing (round-off floor case) -------------------------------

def poly_problem() -> IvpProblem:
    """Scalar y' = 3 t^2, y(0) = 0, on [0, 1]; exact solution t^3.

    The integrand is a degree-2 polynomial in t alone, so any correction
    whose quadrature is exact to degree 2 integrates it exactly and the
    error sits at round-off.  Used to exercise floor handling in
    convergence reports.
    """

    def rhs(t, y):
        return np.array([3.0 * t * t])

    return IvpProblem(dim=1, t0=0.0, t_final=1.0, y0=np.zeros(1), rhs=rhs)


def poly_exact(t: float) -> np.ndarray:
    return np.array([t ** 3])


def poly_implicit_stepper() -> StepperContract:
    # state-independent rhs: the backward Euler solve is explicit
    def advance(t, dt, v):
        tn = t + dt
        return v + dt * np.array([3.0 * tn * tn])

    return StepperContract(StepKind.IMPLICIT, advance)


# -- 1-D Brusselator ---------------------------------------------------------

@dataclass(frozen=True)
class BrusselatorConfig:
    """Reaction-diffusion test problem on the unit interval.

    u_t = a + u^2 v - (b+1) u + alpha u_xx
    v_t = b u - u^2 v + alpha v_xx

    with Dirichlet boundary values (u, v) = (a, b/a) and initial data
    u = a + sin(2 pi x), v = b/a.  interior_points is the number of interior
    grid nodes M; the state interleaves (u_j, v_j) so the Jacobian is banded
    with bandwidth 2.
    """

    interior_points: int
    t_final: float = 1.0
    a: float = 1.0
    b: float = 3.0
    alpha: float = 0.02

    def __post_init__(self):
        if self.interior_points < 3:
            raise ValueError(
                f"interior_points must be >= 3, got {self.interior_points}"
            )
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")

    @property
    def dx(self) -> float:
        return 1.0 / (self.interior_points + 1)

    @property
    def dim(self) -> int:
        return 2 * self.interior_points


def laplacian_dirichlet(w: np.ndarray, left: float, right: float, dx: float):
    """Second-order central Laplacian on interior samples with Dirichlet
    boundary values folded in."""
    out = np.empty_like(w)
    out[1:-1] = w[:-2] - 2.0 * w[1:-1] + w[2:]
    out[0] = left - 2.0 * w[0] + w[1]
    out[-1] = w[-2] - 2.0 * w[-1] + right
    return out / (dx * dx)


def brusselator_initial_state(config: BrusselatorConfig) -> np.ndarray:
    x = (np.arange(config.interior_points) + 1.0) * config.dx
    y = np.empty(config.dim)
    y[0::2] = config.a + np.sin(2.0 * np.pi * x)
    y[1::2] = config.b / config.a
    return y


def brusselator_rhs(config: BrusselatorConfig):
    """Method-of-lines right-hand side for the interleaved (u, v) state."""
    a, b, alpha, dx = config.a, config.b, config.alpha, config.dx
    bc_u, bc_v = a, b / a

    def rhs(t, y):
        u = y[0::2]
        v = y[1::2]
        uuv = u * u * v
        du = a + uuv - (b + 1.0) * u + alpha * laplacian_dirichlet(u, bc_u, bc_u, dx)
        dv = b * u - uuv + alpha * laplacian_dirichlet(v, bc_v, bc_v, dx)
        out = np.empty_like(y)
        out[0::2] = du
        out[1::2] = dv
        return out

    return rhs


def brusselator_jacobian_bands(config: BrusselatorConfig):
    """Band-stored Jacobian of the Brusselator rhs (lower = upper = 2).

    Interleaving keeps the local 2x2 reaction blocks on diagonals 0/±1 and
    the diffusion coupling on diagonals ±2.
    """
    b, alpha, dx = config.b, config.alpha, config.dx
    c = alpha / (dx * dx)
    n = config.dim

    def bands_at(t, y):
        u = y[0::2]
        v = y[1::2]
        bands = np.zeros((5, n))
        bands[0, 2:] = c                                # j = i + 2
        bands[1, 1::2] = u * u                          # du_j / dv_j
        bands[2, 0::2] = 2.0 * u * v - (b + 1.0) - 2.0 * c
        bands[2, 1::2] = -u * u - 2.0 * c
        bands[3, 0::2] = b - 2.0 * u * v                # dv_j / du_j
        bands[4, : n - 2] = c                           # j = i - 2
        return bands

    return bands_at


def brusselator_problem(
    config: BrusselatorConfig, newton: NewtonConfig = NewtonConfig()
) -> tuple[IvpProblem, StepperContract]:
    """The 2M-dimensional Brusselator system and its backward Euler stepper.

    The per-step nonlinear system is solved by newton_solve with the banded
    Jacobian; Newton failures surface as stepper failures.  All workspace
    is allocated per call, so concurrent level workers never share scratch.
    """
    rhs = brusselator_rhs(config)
    bands_at = brusselator_jacobian_bands(config)
    n = config.dim
    problem = IvpProblem(
        dim=n,
        t0=0.0,
        t_final=config.t_final,
        y0=brusselator_initial_state(config),
        rhs=rhs,
    )

    def advance(t, dt, v_in):
        tn = t + dt

        def res(w):
            return w - v_in - dt * rhs(tn, w)

        def jac(w):
            bands = -dt * bands_at(tn, w)
            bands[2] += 1.0
            return BandedSystem(n, 2, 2, bands)

        return newton_solve(res, jac, v_in, newton)

    return problem, StepperContract(StepKind.IMPLICIT, advance)
