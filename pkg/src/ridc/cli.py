"""Command-line harness: single solves, convergence studies, and benchmarks.

All three subcommands emit rows with the same CSV schema::

    problem,order,nt,dt,mode,executor,error_inf,walltime_s

Reals carry 17 significant digits, files are UTF-8 with LF line endings.
error_inf is the inf-norm error at t_final against the analytic solution
where one exists; convergence studies of the Brusselator measure against a
self-computed reference on an 8x refined grid; plain solves without an
analytic solution report nan.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .core import IvpProblem, StepKind, StepperContract, TimeGrid
from .pipeline import (
    Executor,
    RidcConfig,
    RidcConfigError,
    StepFailureError,
    ridc_solve,
)
from .problems import (
    BrusselatorConfig,
    brusselator_problem,
    decay_exact,
    decay_implicit_stepper,
    decay_problem,
    explicit_euler_stepper,
    poly_exact,
    poly_implicit_stepper,
    poly_problem,
    stiff_exact,
    stiff_implicit_stepper,
    stiff_problem,
)

CSV_HEADER = "problem,order,nt,dt,mode,executor,error_inf,walltime_s"

# Errors at or below this are round-off for the bundled problems (state
# magnitudes near 1); such series get a floor flag instead of a slope fit.
ERROR_FLOOR = 1e-14

_MODES = {"fe": StepKind.EXPLICIT, "be": StepKind.IMPLICIT}
_EXECUTORS = {"serial": Executor.SERIAL, "pipelined": Executor.PIPELINED}


@dataclass(frozen=True)
class ProblemSetup:
    """One bundled problem instance plus its steppers and exact solution."""

    name: str
    problem: IvpProblem
    steppers: dict[StepKind, StepperContract]
    exact: object  # callable t -> state, or None


def _setup_decay(args) -> ProblemSetup:
    prob = decay_problem()
    return ProblemSetup(
        "decay",
        prob,
        {
            StepKind.EXPLICIT: explicit_euler_stepper(prob),
            StepKind.IMPLICIT: decay_implicit_stepper(),
        },
        decay_exact,
    )


def _setup_stiff(args) -> ProblemSetup:
    lam = getattr(args, "lam", -100.0)
    prob = stiff_problem(lam)
    return ProblemSetup(
        "stiff",
        prob,
        {
            StepKind.EXPLICIT: explicit_euler_stepper(prob),
            StepKind.IMPLICIT: stiff_implicit_stepper(lam),
        },
        stiff_exact,
    )


def _setup_poly(args) -> ProblemSetup:
    prob = poly_problem()
    return ProblemSetup(
        "poly",
        prob,
        {
            StepKind.EXPLICIT: explicit_euler_stepper(prob),
            StepKind.IMPLICIT: poly_implicit_stepper(),
        },
        poly_exact,
    )


def _setup_brusselator(args) -> ProblemSetup:
    config = BrusselatorConfig(
        interior_points=getattr(args, "grid_points", 200),
        t_final=getattr(args, "t_final", 1.0),
    )
    prob, implicit = brusselator_problem(config)
    return ProblemSetup(
        "brusselator",
        prob,
        {
            StepKind.EXPLICIT: explicit_euler_stepper(prob),
            StepKind.IMPLICIT: implicit,
        },
        None,
    )


PROBLEMS = {
    "decay": _setup_decay,
    "stiff": _setup_stiff,
    "poly": _setup_poly,
    "brusselator": _setup_brusselator,
}


def problem_setup(name: str, **params) -> ProblemSetup:
    """Build a bundled ProblemSetup by name.

    Recognized params: lam (stiff), grid_points and t_final (brusselator).
    """
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise RidcConfigError(
            f"unknown problem {name!r}; available: {', '.join(sorted(PROBLEMS))}"
        ) from None
    return factory(argparse.Namespace(**params))


def _fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True)
class RunRecord:
    problem: str
    order: int
    nt: int
    dt: float
    mode: StepKind
    executor: Executor
    error_inf: float
    walltime_s: float

    def csv_row(self) -> str:
        mode = "fe" if self.mode is StepKind.EXPLICIT else "be"
        return (
            f"{self.problem},{self.order},{self.nt},{_fmt(self.dt)},{mode},"
            f"{self.executor.value},{_fmt(self.error_inf)},{_fmt(self.walltime_s)}"
        )


@dataclass(frozen=True)
class SeriesFit:
    """Least-squares fit of one order's error series.

    slope is d log(error) / d log(nt), i.e. minus the observed order of
    accuracy; series at the round-off floor carry floor_reached instead of
    a fit.
    """

    order: int
    slope: float | None
    intercept: float | None
    floor_reached: bool


@dataclass
class ConvergenceReport:
    rows: list[RunRecord]
    fits: list[SeriesFit]
    complete: bool = True


def fit_least_squares(xs, ys) -> tuple[float, float]:
    """Plain least-squares line y = slope*x + intercept."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size < 2:
        raise ValueError("need at least two points for a line fit")
    xm = xs.mean()
    ym = ys.mean()
    slope = float(np.sum((xs - xm) * (ys - ym)) / np.sum((xs - xm) ** 2))
    return slope, float(ym - slope * xm)


def fit_error_series(nts, errors) -> tuple[float, float]:
    """Fit log(error) against log(nt); errors decay like nt^slope."""
    return fit_least_squares(np.log(np.asarray(nts, dtype=np.float64)),
                             np.log(np.asarray(errors, dtype=np.float64)))


class ConvergenceAborted(RuntimeError):
    """A run in a convergence series failed; carries the completed rows."""

    def __init__(self, rows: list, cause: StepFailureError):
        super().__init__(str(cause))
        self.rows = rows
        self.cause = cause


def _timed_solve(setup: ProblemSetup, order, nt, mode, executor):
    stepper = setup.steppers[mode]
    grid = TimeGrid(setup.problem.t0, setup.problem.t_final, nt)
    config = RidcConfig(order=order, nt=nt, executor=executor, mode=mode)
    start = time.perf_counter()
    result = ridc_solve(setup.problem, stepper, grid, config)
    walltime = time.perf_counter() - start
    return result, walltime


def _error_against(reference: np.ndarray, y: np.ndarray) -> float:
    return float(np.max(np.abs(y - reference)))


def run_solve(setup: ProblemSetup, order, nt, mode, executor) -> tuple[RunRecord, np.ndarray]:
    result, walltime = _timed_solve(setup, order, nt, mode, executor)
    if setup.exact is not None:
        err = _error_against(setup.exact(setup.problem.t_final), result.y_final)
    else:
        err = math.nan
    grid = TimeGrid(setup.problem.t0, setup.problem.t_final, nt)
    record = RunRecord(setup.name, order, nt, grid.dt, mode, executor, err, walltime)
    return record, result.y_final


def _reference_state(setup: ProblemSetup, orders, nts, mode) -> np.ndarray:
    """Reference final state: analytic when known, otherwise a self-computed
    solve at the highest order on an 8x refined grid."""
    if setup.exact is not None:
        return setup.exact(setup.problem.t_final)
    result, _ = _timed_solve(
        setup, max(orders), 8 * max(nts), mode, Executor.SERIAL
    )
    return result.y_final


def run_convergence_study(
    setup: ProblemSetup, orders, nts, mode, executor=Executor.SERIAL
) -> ConvergenceReport:
    """Run every (order, nt) pair and fit one error slope per order.

    A failed run raises ConvergenceAborted carrying the completed rows.
    """
    rows: list[RunRecord] = []
    fits: list[SeriesFit] = []
    try:
        reference = _reference_state(setup, orders, nts, mode)
        for order in orders:
            errors = []
            for nt in nts:
                result, walltime = _timed_solve(setup, order, nt, mode, executor)
                err = _error_against(reference, result.y_final)
                grid = TimeGrid(setup.problem.t0, setup.problem.t_final, nt)
                rows.append(
                    RunRecord(setup.name, order, nt, grid.dt, mode, executor,
                              err, walltime)
                )
                errors.append(err)
            if min(errors) <= ERROR_FLOOR:
                fits.append(SeriesFit(order, None, None, True))
            else:
                slope, intercept = fit_error_series(nts, errors)
                fits.append(SeriesFit(order, slope, intercept, False))
    except StepFailureError as err:
        raise ConvergenceAborted(rows, err) from err
    return ConvergenceReport(rows=rows, fits=fits)


@dataclass
class BenchmarkEntry:
    order: int
    euler_serial_s: float
    ridc_serial_s: float
    ridc_pipelined_s: float
    workers: int
    error_serial: float
    error_pipelined: float
    identical: bool

    @property
    def parallel_efficiency(self) -> float:
        return self.ridc_serial_s / self.ridc_pipelined_s / self.workers


def run_benchmark(setup: ProblemSetup, orders, nt, mode, repeats) -> tuple[list[RunRecord], list[BenchmarkEntry]]:
    """Median-of-repeats timings of serial Euler, serial and pipelined runs."""
    if setup.exact is not None:
        reference = setup.exact(setup.problem.t_final)
    else:
        reference = None
    rows: list[RunRecord] = []
    entries: list[BenchmarkEntry] = []

    def median_run(order, executor):
        times = []
        result = None
        for _ in range(repeats):
            result, walltime = _timed_solve(setup, order, nt, mode, executor)
            times.append(walltime)
        return result, float(np.median(times))

    euler_result, euler_time = median_run(1, Executor.SERIAL)
    grid = TimeGrid(setup.problem.t0, setup.problem.t_final, nt)

    def err_of(result):
        if reference is None:
            return math.nan
        return _error_against(reference, result.y_final)

    rows.append(
        RunRecord(setup.name, 1, nt, grid.dt, mode, Executor.SERIAL,
                  err_of(euler_result), euler_time)
    )
    for order in orders:
        serial_result, serial_time = median_run(order, Executor.SERIAL)
        pipe_result, pipe_time = median_run(order, Executor.PIPELINED)
        rows.append(
            RunRecord(setup.name, order, nt, grid.dt, mode, Executor.SERIAL,
                      err_of(serial_result), serial_time)
        )
        rows.append(
            RunRecord(setup.name, order, nt, grid.dt, mode, Executor.PIPELINED,
                      err_of(pipe_result), pipe_time)
        )
        entries.append(
            BenchmarkEntry(
                order=order,
                euler_serial_s=euler_time,
                ridc_serial_s=serial_time,
                ridc_pipelined_s=pipe_time,
                workers=pipe_result.workers,
                error_serial=err_of(serial_result),
                error_pipelined=err_of(pipe_result),
                identical=bool(
                    np.array_equal(serial_result.y_final, pipe_result.y_final)
                ),
            )
        )
    return rows, entries


def _write_csv(path, rows, trailer=None):
    lines = [CSV_HEADER] + [row.csv_row() for row in rows]
    if trailer:
        lines.append(trailer)
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _int_list(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return values


def _add_problem_options(parser):
    parser.add_argument("problem", help=f"one of: {', '.join(sorted(PROBLEMS))}")
    parser.add_argument("--lam", type=float, default=-100.0,
                        help="stiffness parameter for the stiff problem")
    parser.add_argument("--grid-points", type=int, default=200,
                        help="interior grid points for the brusselator")
    parser.add_argument("--t-final", type=float, default=1.0,
                        help="final time for the brusselator")


def _build_setup(args) -> ProblemSetup:
    try:
        factory = PROBLEMS[args.problem]
    except KeyError:
        raise RidcConfigError(
            f"unknown problem {args.problem!r}; available: {', '.join(sorted(PROBLEMS))}"
        ) from None
    return factory(args)


def cmd_solve(args) -> int:
    setup = _build_setup(args)
    record, y_final = run_solve(
        setup, args.order, args.steps, _MODES[args.mode], _EXECUTORS[args.executor]
    )
    _write_csv(args.output, [record])
    if args.state_output is not None:
        with open(args.state_output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("index,value\n")
            for i, value in enumerate(y_final):
                fh.write(f"{i},{_fmt(value)}\n")
    if not math.isnan(record.error_inf):
        print(f"# error_inf vs exact solution: {_fmt(record.error_inf)}")
    print(f"# walltime_s: {_fmt(record.walltime_s)}")
    return 0


def cmd_converge(args) -> int:
    setup = _build_setup(args)
    if len(args.steps) < 3:
        raise RidcConfigError("convergence studies need at least 3 step counts")
    try:
        report = run_convergence_study(
            setup, args.orders, args.steps, _MODES[args.mode],
            _EXECUTORS[args.executor],
        )
    except ConvergenceAborted as aborted:
        # the failed run aborts the series; flag whatever completed
        _write_csv(args.output, aborted.rows, trailer=f"# incomplete: {aborted}")
        print(f"runtime failure: {aborted}", file=sys.stderr)
        return 2
    _write_csv(args.output, report.rows)
    for fit in report.fits:
        if fit.floor_reached:
            print(f"# order {fit.order}: error at round-off floor, fit skipped")
        else:
            print(
                f"# order {fit.order}: slope {_fmt(fit.slope)} "
                f"intercept {_fmt(fit.intercept)}"
            )
    return 0


def cmd_bench(args) -> int:
    setup = _build_setup(args)
    if args.repeats < 3:
        raise RidcConfigError("benchmarks need at least 3 repeats")
    rows, entries = run_benchmark(
        setup, args.orders, args.steps, _MODES[args.mode], args.repeats
    )
    _write_csv(args.output, rows)
    for entry in entries:
        print(
            f"# order {entry.order}: euler {_fmt(entry.euler_serial_s)} s, "
            f"serial {_fmt(entry.ridc_serial_s)} s, "
            f"pipelined {_fmt(entry.ridc_pipelined_s)} s "
            f"({entry.workers} workers, efficiency "
            f"{entry.parallel_efficiency:.3f}, bitwise match: "
            f"{'yes' if entry.identical else 'NO'})"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridc",
        description="Deferred-correction wrapper around first-order steppers: "
                    "solves, convergence studies, and speedup benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one integration and report error/walltime")
    _add_problem_options(solve)
    solve.add_argument("--order", type=int, required=True)
    solve.add_argument("--steps", type=int, required=True)
    solve.add_argument("--mode", choices=sorted(_MODES), default="fe")
    solve.add_argument("--executor", choices=sorted(_EXECUTORS), default="serial")
    solve.add_argument("--output", default=None, help="CSV path (default stdout)")
    solve.add_argument("--state-output", default=None,
                       help="optional CSV path for the final state vector")
    solve.set_defaults(func=cmd_solve)

    conv = sub.add_parser("converge", help="error-versus-steps study with slope fits")
    _add_problem_options(conv)
    conv.add_argument("--orders", type=_int_list, required=True,
                      help="comma-separated orders, e.g. 1,2,3,4")
    conv.add_argument("--steps", type=_int_list, required=True,
                      help="comma-separated step counts, at least 3")
    conv.add_argument("--mode", choices=sorted(_MODES), default="fe")
    conv.add_argument("--executor", choices=sorted(_EXECUTORS), default="serial")
    conv.add_argument("--output", default=None, help="CSV path (default stdout)")
    conv.set_defaults(func=cmd_converge)

    bench = sub.add_parser("bench", help="serial versus pipelined timing comparison")
    _add_problem_options(bench)
    bench.add_argument("--orders", type=_int_list, required=True)
    bench.add_argument("--steps", type=int, required=True)
    bench.add_argument("--mode", choices=sorted(_MODES), default="be")
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--output", default=None, help="CSV path (default stdout)")
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; map those onto configuration errors
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (RidcConfigError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except StepFailureError as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
