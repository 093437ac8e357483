"""Deferred-correction driver: startup scheduling, the memory stencil, the
serial and pipelined executors, shutdown, and restarts.

All P levels march over the same uniform grid.  In steady operation level
L+1 trails level L by exactly one node: while the prediction level computes
node n, the first correction computes node n-1, and so on.  Each level
L < P-1 keeps its stored f-evaluations in a ring of the last L+2 nodes,
which is precisely the window its consumer reads, so the steady-state
stored-slot count is sum(L+2) + 1 = P(P+1)/2.

Before that steady staggering is possible the stencil must be filled.  The
startup schedule stalls the lower levels so the stencil never exceeds its
minimal footprint; it is a first-class value (see startup_schedule) that
the serial executor follows tick by tick.  The threaded executor does not
need the schedule: its blocking rules (a consumer waits for the producer
node it reads, a producer waits before evicting a slot its consumer still
needs) force the identical progression, and both executors perform the
identical arithmetic, so their results agree bitwise.
"""

from __future__ import annotations

import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import IvpProblem, StepKind, StepperContract, TimeGrid, eval_rhs
from .corrector import (
    LevelStencil,
    correct_step_explicit,
    correct_step_implicit,
    predict_step,
)
from .quadrature import MAX_ORDER, IntegrationMatrix, build_integration_matrix

# Caps the pipelined executor's worker count below the method order; levels
# are then multiplexed over the available workers without changing results.
WORKER_ENV_VAR = "RIDC_NUM_THREADS"

_STALL_TIMEOUT = 120.0


class Executor(Enum):
    SERIAL = "serial"
    PIPELINED = "pipelined"


class RidcConfigError(ValueError):
    """A solver configuration violates its invariants."""


class StepFailureError(RuntimeError):
    """A stepper, solver, or rhs call failed, annotated with level and step."""

    def __init__(self, level: int, step: int, cause: BaseException):
        super().__init__(f"level {level}, step {step}: {cause}")
        self.level = level
        self.step = step
        self.__cause__ = cause


class _Cancelled(Exception):
    """Internal: another worker failed, unwind quietly."""


def startup_steps(order: int) -> int:
    """Number of initialization steps before steady pipelining at this order."""
    if not 1 <= order <= MAX_ORDER:
        raise RidcConfigError(f"order must be in 1..{MAX_ORDER}, got {order}")
    return max(1, order * (order + 1) // 2 - 1) - 1


def startup_schedule(order: int) -> tuple[tuple[int, ...], ...]:
    """Stall-aware startup: entry k lists the levels advancing at step k+1.

    For each new correction level q the lower levels first pipe one step,
    then level q alone catches up for q-1 steps, then levels 0..q pipe one
    step together.  The last entry is the first step at which all levels
    advance; after the schedule the pipeline repeats that full-width step.
    Order 1 needs no initialization and gets an empty schedule.
    """
    if not 1 <= order <= MAX_ORDER:
        raise RidcConfigError(f"order must be in 1..{MAX_ORDER}, got {order}")
    ticks: list[tuple[int, ...]] = []
    for q in range(1, order):
        ticks.append(tuple(range(q)))
        ticks.extend((q,) for _ in range(q - 1))
        ticks.append(tuple(range(q + 1)))
    return tuple(ticks)


def efficiency_ratio(order: int, restart_interval: int) -> float:
    """Ratio of steps taken versus plain first-order stepping when the
    pipeline is restarted every restart_interval steps: 1 + (P-1)^2/K."""
    if order < 1:
        raise RidcConfigError(f"order must be >= 1, got {order}")
    if restart_interval < 1:
        raise RidcConfigError(
            f"restart_interval must be >= 1, got {restart_interval}"
        )
    return 1.0 + (order - 1) ** 2 / restart_interval


@dataclass(frozen=True)
class RidcConfig:
    """Driver configuration for one solve.

    order is the target method order P (P-1 corrections above the
    prediction level).  mode must match the stepper kind.  With
    restart_interval K, every K steps of the top level its solution is
    copied to all levels and the pipeline is refilled from that node.
    record_trajectories keeps every level's full solution history in the
    result (diagnostics; off by default).
    """

    order: int
    nt: int
    restart_interval: int | None = None
    executor: Executor = Executor.SERIAL
    mode: StepKind = StepKind.EXPLICIT
    record_trajectories: bool = False

    def __post_init__(self):
        if not 1 <= self.order <= MAX_ORDER:
            raise RidcConfigError(f"order must be in 1..{MAX_ORDER}, got {self.order}")
        if self.nt < 1:
            raise RidcConfigError(f"nt must be positive, got {self.nt}")
        need = startup_steps(self.order)
        if self.nt < need:
            raise RidcConfigError(
                f"nt={self.nt} is below the {need} startup steps required "
                f"at order {self.order}"
            )
        if self.restart_interval is not None:
            if self.restart_interval < 1:
                raise RidcConfigError(
                    f"restart_interval must be positive, got {self.restart_interval}"
                )
            if self.restart_interval < need:
                raise RidcConfigError(
                    f"restart_interval={self.restart_interval} is below the "
                    f"{need} startup steps required at order {self.order}"
                )


@dataclass
class RidcResult:
    """Final state plus diagnostics of one solve.

    y_final is the highest level's solution at t_final.  steps_per_level
    and seconds_per_level count every advance each level performed
    (including work discarded by restarts).  efficiency_gamma is the
    theoretical step-count ratio 1 + (P-1)^2/K when restarts are on.
    memory_slots is the steady-state stored-slot count P(P+1)/2.
    trajectories, when recorded, holds one (nt+1, dim) array per level with
    NaN rows at nodes that level never computed.
    """

    y_final: np.ndarray
    level_final: list[np.ndarray]
    startup_step_count: int
    steps_per_level: np.ndarray
    seconds_per_level: np.ndarray
    efficiency_gamma: float | None
    memory_slots: int
    executor: Executor
    workers: int
    segments: int
    trajectories: list[np.ndarray] | None = None


class _LevelRing:
    """Fixed-capacity ring of the last stored f-vectors of one level.

    Each slot remembers which node it holds, so every cross-level read
    verifies it happens after the corresponding write and before the
    slot's eviction.
    """

    __slots__ = ("capacity", "rows", "slot_node")

    def __init__(self, capacity: int, dim: int):
        self.capacity = capacity
        self.rows = np.empty((capacity, dim))
        self.slot_node = np.full(capacity, -1, dtype=np.int64)

    def store(self, node: int, f: np.ndarray):
        i = node % self.capacity
        self.rows[i, :] = f
        self.slot_node[i] = node

    def get(self, node: int) -> np.ndarray:
        i = node % self.capacity
        held = self.slot_node[i]
        if held != node:
            raise RuntimeError(
                f"stencil read of node {node} before its write or after its "
                f"eviction (slot holds node {held})"
            )
        return self.rows[i]


class PipelineState:
    """Per-level memory stencil and cursors for one pipeline segment.

    Levels below the top each own a ring of their stored f-vectors sized to
    their consumer's window; the top level stores only its current
    solution.  node[L] is the highest grid node level L has completed.
    """

    def __init__(self, order: int, dim: int, seg_start: int):
        self.order = order
        self.seg_start = seg_start
        self.rings = [_LevelRing(lvl + 2, dim) for lvl in range(order - 1)]
        self.node = [seg_start] * order
        self.u: list[np.ndarray] = [None] * order  # type: ignore[list-item]

    def stored_slot_count(self) -> int:
        return sum(ring.capacity for ring in self.rings) + 1


@dataclass
class _RunContext:
    problem: IvpProblem
    stepper: StepperContract
    grid: TimeGrid
    order: int
    implicit: bool
    matrices: tuple[IntegrationMatrix, ...]
    schedule: tuple[tuple[int, ...], ...]
    level_steps: np.ndarray
    level_seconds: np.ndarray
    trajectories: list[np.ndarray] | None


def _compute_one(ctx: _RunContext, state: PipelineState, level: int, m: int):
    """Compute level's solution at node m (from m-1) plus its stored f.

    Reads only finalized data: the level's own state and, for corrections,
    the producer ring.  Failures are annotated with (level, step).
    """
    grid = ctx.grid
    t_prev = grid.node(m - 1)
    dt = grid.dt
    try:
        if level == 0:
            u_new = predict_step(ctx.stepper, ctx.problem, t_prev, dt, state.u[0])
        else:
            p = level - 1
            ring = state.rings[p]
            rel = (m - 1) - state.seg_start
            if rel >= p:
                window = tuple(ring.get(m - nu) for nu in range(p + 2))
                row = None
                anchor = window[0] if ctx.implicit else window[1]
            else:
                base = state.seg_start
                window = tuple(ring.get(base + j) for j in range(p + 2))
                row = rel
                anchor = window[rel + 1] if ctx.implicit else window[rel]
            stencil = LevelStencil(level, window, state.u[level], anchor)
            correct = correct_step_implicit if ctx.implicit else correct_step_explicit
            u_new = correct(
                ctx.stepper, ctx.problem, stencil, ctx.matrices[p],
                t_prev, dt, startup_row=row,
            )
        f_new = None
        if level < ctx.order - 1:
            f_new = eval_rhs(ctx.problem, grid.node(m), u_new)
        return u_new, f_new
    except Exception as exc:
        raise StepFailureError(level, m, exc) from exc


def _commit_one(ctx, state, level, m, u_new, f_new):
    state.u[level] = u_new
    state.node[level] = m
    if f_new is not None:
        state.rings[level].store(m, f_new)
    ctx.level_steps[level] += 1
    if ctx.trajectories is not None:
        ctx.trajectories[level][m] = u_new


def _timed_compute(ctx, state, level, m):
    t0 = time.perf_counter()
    out = _compute_one(ctx, state, level, m)
    ctx.level_seconds[level] += time.perf_counter() - t0
    return out


def _run_segment_ticks(ctx, state, seg_end, pool):
    """Advance one segment tick by tick: the startup schedule, then
    full-width steady ticks, each level stopping at the segment end.

    Within a tick every level reads pre-tick data only.  Inline execution
    therefore runs levels highest-first (consumers read a producer's
    oldest slot before the producer's own advance evicts it); with a
    worker pool all computations run against pre-tick state and commits
    follow after the whole tick.
    """
    order = ctx.order
    ticks = iter(ctx.schedule)
    while any(state.node[lvl] < seg_end for lvl in range(order)):
        tick = next(ticks, None)
        if tick is None:
            tick = tuple(range(order))
        active = [lvl for lvl in tick if state.node[lvl] < seg_end]
        if not active:
            continue
        if pool is None:
            for lvl in sorted(active, reverse=True):
                m = state.node[lvl] + 1
                u_new, f_new = _timed_compute(ctx, state, lvl, m)
                _commit_one(ctx, state, lvl, m, u_new, f_new)
        else:
            targets = {lvl: state.node[lvl] + 1 for lvl in active}
            futures = {
                lvl: pool.submit(_timed_compute, ctx, state, lvl, targets[lvl])
                for lvl in active
            }
            results, errors = {}, []
            for lvl, fut in futures.items():
                try:
                    results[lvl] = fut.result()
                except StepFailureError as err:
                    errors.append(err)
            if errors:
                raise min(errors, key=lambda err: (err.level, err.step))
            for lvl in active:
                _commit_one(ctx, state, lvl, targets[lvl], *results[lvl])


def _run_segment_threads(ctx, state, seg_start, seg_end):
    """Advance one segment with one free-running worker per level.

    A consumer blocks until the producer has completed the highest node its
    window reads (max(m, seg_start + level)); a producer blocks before
    storing an f-value that would evict a slot its consumer still needs
    (until the consumer has completed node m-1).  Slots are written under
    the shared condition variable and announced by completion counters, so
    a consumer observing a completion sees the finished vector contents.
    """
    order = ctx.order
    cv = threading.Condition()
    completed = state.node
    failures: list[StepFailureError] = []
    cancelled = False

    def wait_for(pred):
        with cv:
            while not pred():
                if cancelled:
                    raise _Cancelled()
                if not cv.wait(timeout=_STALL_TIMEOUT):
                    raise RuntimeError(
                        f"pipeline stalled: no progress for {_STALL_TIMEOUT} s"
                    )
        if cancelled:
            raise _Cancelled()

    def fail(err: StepFailureError):
        nonlocal cancelled
        with cv:
            failures.append(err)
            cancelled = True
            cv.notify_all()

    def worker(level: int):
        m = seg_start
        try:
            for m in range(seg_start + 1, seg_end + 1):
                if cancelled:
                    return
                if level > 0:
                    need = max(m, seg_start + level)
                    wait_for(lambda: completed[level - 1] >= need)
                u_new, f_new = _timed_compute(ctx, state, level, m)
                if f_new is not None and m - seg_start >= state.rings[level].capacity:
                    wait_for(lambda: completed[level + 1] >= m - 1)
                with cv:
                    _commit_one(ctx, state, level, m, u_new, f_new)
                    cv.notify_all()
        except _Cancelled:
            pass
        except StepFailureError as err:
            fail(err)
        except Exception as exc:  # stalls and framework bugs get context too
            fail(StepFailureError(level, m, exc))

    threads = [
        threading.Thread(target=worker, args=(lvl,), name=f"ridc-level-{lvl}")
        for lvl in range(order)
    ]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if failures:
        raise min(failures, key=lambda err: (err.level, err.step))


def _worker_limit() -> int | None:
    raw = os.environ.get(WORKER_ENV_VAR)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise RidcConfigError(
            f"{WORKER_ENV_VAR} must be an integer, got {raw!r}"
        ) from None
    if value < 1:
        raise RidcConfigError(f"{WORKER_ENV_VAR} must be >= 1, got {value}")
    return value


def _segment_bounds(nt: int, restart_interval: int | None, order: int):
    """Restart segment boundaries [s, e] over the node range 0..nt.

    A trailing remainder too short to refill the pipeline (fewer than the
    startup step count) is merged into the preceding segment instead of
    forcing a restart it could not absorb.
    """
    if restart_interval is None:
        return [(0, nt)]
    need = startup_steps(order)
    bounds = []
    s = 0
    while s < nt:
        e = min(s + restart_interval, nt)
        if e < nt and nt - e < need:
            e = nt
        bounds.append((s, e))
        s = e
    return bounds


def ridc_solve(
    problem: IvpProblem,
    stepper: StepperContract,
    grid: TimeGrid,
    config: RidcConfig,
) -> RidcResult:
    """Integrate the problem at order P by pipelined deferred correction.

    Runs the startup schedule, then the steady pipelined loop, each level
    stopping when it reaches t_final; with restarts, the top level's
    solution is copied to all levels every restart_interval steps and the
    pipeline refills from that node.  Serial and pipelined executors
    perform identical arithmetic and return bitwise-identical states.
    """
    if stepper.kind is not config.mode:
        raise RidcConfigError(
            f"config mode {config.mode.value} does not match stepper kind "
            f"{stepper.kind.value}"
        )
    if grid.nt != config.nt:
        raise RidcConfigError(
            f"grid has nt={grid.nt} but config has nt={config.nt}"
        )
    order = config.order
    dim = problem.dim
    matrices = tuple(build_integration_matrix(p, grid.dt) for p in range(order - 1))
    trajectories = None
    if config.record_trajectories:
        trajectories = [
            np.full((grid.nt + 1, dim), np.nan) for _ in range(order)
        ]
    ctx = _RunContext(
        problem=problem,
        stepper=stepper,
        grid=grid,
        order=order,
        implicit=config.mode is StepKind.IMPLICIT,
        matrices=matrices,
        schedule=startup_schedule(order),
        level_steps=np.zeros(order, dtype=np.int64),
        level_seconds=np.zeros(order),
        trajectories=trajectories,
    )

    if config.executor is Executor.SERIAL:
        workers = 1
        threaded = False
    else:
        cap = _worker_limit()
        workers = order if cap is None else min(order, cap)
        threaded = workers >= order and order > 1

    segments = _segment_bounds(config.nt, config.restart_interval, order)
    pool = None
    if config.executor is Executor.PIPELINED and not threaded and order > 1:
        pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="ridc")
    y = np.array(problem.y0)
    state = None
    try:
        for seg_start, seg_end in segments:
            state = PipelineState(order, dim, seg_start)
            f_start = eval_rhs(problem, grid.node(seg_start), y)
            for lvl in range(order):
                state.u[lvl] = np.array(y)
                if trajectories is not None:
                    trajectories[lvl][seg_start] = y
            for ring in state.rings:
                ring.store(seg_start, f_start)
            if threaded:
                _run_segment_threads(ctx, state, seg_start, seg_end)
            else:
                _run_segment_ticks(ctx, state, seg_end, pool)
            y = state.u[order - 1]
    finally:
        if pool is not None:
            pool.shutdown(wait=True)

    gamma = None
    if config.restart_interval is not None:
        gamma = efficiency_ratio(order, config.restart_interval)
    return RidcResult(
        y_final=np.array(y),
        level_final=[np.array(u) for u in state.u],
        startup_step_count=startup_steps(order),
        steps_per_level=ctx.level_steps,
        seconds_per_level=ctx.level_seconds,
        efficiency_gamma=gamma,
        memory_slots=state.stored_slot_count(),
        executor=config.executor,
        workers=workers,
        segments=len(segments),
        trajectories=trajectories,
    )
