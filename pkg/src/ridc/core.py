"""Problem definitions, the user stepper contract, and the shared time grid."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np

RhsFunc = Callable[[float, np.ndarray], np.ndarray]
AdvanceFunc = Callable[[float, float, np.ndarray], np.ndarray]


class StepKind(Enum):
    """Contract a user stepper satisfies when advancing from t to t + dt.

    EXPLICIT: advance(t, dt, v) returns u with u = v + dt*f(t, v).
    IMPLICIT: advance(t, dt, v) returns u solving u = v + dt*f(t + dt, u)
    to the user's own solver tolerance.
    """

    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class IvpProblem:
    """First-order system y'(t) = rhs(t, y) on [t0, t_final] with y(t0) = y0.

    rhs must be a pure function of (t, y); the driver may call it from
    several worker threads concurrently.
    """

    dim: int
    t0: float
    t_final: float
    y0: np.ndarray
    rhs: RhsFunc

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if not self.t_final > self.t0:
            raise ValueError(f"t_final ({self.t_final}) must exceed t0 ({self.t0})")
        y0 = np.array(self.y0, dtype=np.float64)
        if y0.shape != (self.dim,):
            raise ValueError(f"y0 has shape {y0.shape}, expected ({self.dim},)")
        y0.setflags(write=False)
        object.__setattr__(self, "y0", y0)


@dataclass(frozen=True)
class StepperContract:
    """User-supplied first-order advance, declared explicit or implicit.

    advance(t_in, dt, v_in) -> state at t_in + dt.  It must be a pure
    function of its arguments (no hidden mutable state): the pipelined
    executor runs one call per correction level concurrently.
    """

    kind: StepKind
    advance: AdvanceFunc


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of nt steps on [t0, t_final].

    Node times are always computed as t0 + n*dt from one shared formula,
    never accumulated, so every correction level sees bit-identical times.
    """

    t0: float
    t_final: float
    nt: int

    def __post_init__(self):
        if self.nt < 1:
            raise ValueError(f"nt must be a positive integer, got {self.nt}")
        if not self.t_final > self.t0:
            raise ValueError(f"t_final ({self.t_final}) must exceed t0 ({self.t0})")

    @property
    def dt(self) -> float:
        return (self.t_final - self.t0) / self.nt

    def node(self, n: int) -> float:
        return self.t0 + n * self.dt

    @cached_property
    def nodes(self) -> np.ndarray:
        out = self.t0 + np.arange(self.nt + 1) * self.dt
        out.setflags(write=False)
        return out


def eval_rhs(problem: IvpProblem, t: float, y: np.ndarray) -> np.ndarray:
    """Evaluate f(t, y) with hard dimension checks on input and output."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (problem.dim,):
        raise ValueError(f"state has shape {y.shape}, expected ({problem.dim},)")
    out = np.asarray(problem.rhs(t, y), dtype=np.float64)
    if out.shape != (problem.dim,):
        raise ValueError(
            f"rhs returned shape {out.shape}, expected ({problem.dim},)"
        )
    return out


def euler_reference_solve(
    problem: IvpProblem, stepper: StepperContract, grid: TimeGrid
) -> np.ndarray:
    """Apply the user stepper sequentially over the whole grid.

    This is the order-1 serial baseline used for speedup measurements; the
    deferred-correction driver run at order 1 reproduces it bitwise.
    """
    u = np.array(problem.y0, dtype=np.float64)
    dt = grid.dt
    for n in range(grid.nt):
        u = np.asarray(stepper.advance(grid.node(n), dt, u), dtype=np.float64)
    return u
