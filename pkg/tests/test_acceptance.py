"""Acceptance suite: one test per acceptance criterion, each printing a
PASS/FAIL line (run with -s to see them on success).

Criterion 8 (speedup) is machine dependent: on hosts with fewer than four
physical cores a miss prints a warning report instead of failing.
"""

import math
import os

import numpy as np
import pytest

from ridc import (
    Executor,
    RidcConfig,
    StepKind,
    StepperContract,
    TimeGrid,
    build_integration_matrix,
    efficiency_ratio,
    euler_reference_solve,
    ridc_solve,
    startup_schedule,
    startup_steps,
)
from ridc.cli import problem_setup, run_benchmark, run_convergence_study
from ridc.problems import (
    BrusselatorConfig,
    brusselator_problem,
    decay_problem,
    explicit_euler_stepper,
    poly_problem,
    stiff_implicit_stepper,
    stiff_problem,
)

from oracle_ridc import ridc_full_table


def _report(num, name, ok, detail="", warn=False):
    status = "WARN" if warn else ("PASS" if ok else "FAIL")
    print(f"ACCEPTANCE {num} ({name}): {status}  {detail}")
    if not warn:
        assert ok, f"criterion {num} ({name}): {detail}"


def _physical_cores():
    try:
        import psutil

        cores = psutil.cpu_count(logical=False)
        if cores:
            return cores
    except ImportError:
        pass
    return os.cpu_count() or 1


def test_criterion_1_order_of_convergence():
    steps = [25, 50, 100, 200, 400]
    orders = [1, 2, 3, 4]
    details = []
    ok = True

    decay = problem_setup("decay")
    report = run_convergence_study(decay, orders, steps, StepKind.EXPLICIT)
    for fit in report.fits:
        band = (-fit.order - 0.35, -fit.order + 0.35)
        inside = band[0] <= fit.slope <= band[1]
        ok = ok and inside
        details.append(f"decay P={fit.order} slope {fit.slope:+.4f}")
        if fit.order == 4:
            # the order-4 band must bracket the reference fit of -4.0630
            ok = ok and band[0] <= -4.0630 <= band[1]

    stiff = problem_setup("stiff", lam=-100.0)
    report = run_convergence_study(stiff, orders, steps, StepKind.IMPLICIT)
    for fit in report.fits:
        band = (-fit.order - 0.35, -fit.order + 0.35)
        ok = ok and band[0] <= fit.slope <= band[1]
        details.append(f"stiff P={fit.order} slope {fit.slope:+.4f}")

    _report(1, "order of convergence", ok, "; ".join(details))


def test_criterion_2_brusselator_self_convergence():
    setup = problem_setup("brusselator", grid_points=200, t_final=1.0)
    steps = [16, 32, 64, 128]
    orders = [1, 2, 3, 4]
    report = run_convergence_study(setup, orders, steps, StepKind.IMPLICIT)
    ok = True
    details = []
    for fit in report.fits:
        observed = -fit.slope
        ok = ok and abs(observed - fit.order) <= 0.3
        details.append(f"P={fit.order} observed order {observed:.3f}")
    _report(2, "brusselator self-convergence", ok, "; ".join(details))


def _bitwise_problems():
    decay = decay_problem()
    stiff = stiff_problem(-40.0)
    poly = poly_problem()
    bruss_prob, bruss_step = brusselator_problem(
        BrusselatorConfig(interior_points=16, t_final=1.0)
    )
    return [
        ("decay", decay, explicit_euler_stepper(decay), StepKind.EXPLICIT),
        ("stiff", stiff, stiff_implicit_stepper(-40.0), StepKind.IMPLICIT),
        ("poly", poly, explicit_euler_stepper(poly), StepKind.EXPLICIT),
        ("brusselator", bruss_prob, bruss_step, StepKind.IMPLICIT),
    ]


def test_criterion_3_pipelined_serial_bitwise_equivalence():
    checked = 0
    for name, prob, stepper, mode in _bitwise_problems():
        for order in range(1, 7):
            for nt in (startup_steps(order) + 1, 50, 173):
                grid = TimeGrid(prob.t0, prob.t_final, nt)
                serial = ridc_solve(
                    prob, stepper, grid,
                    RidcConfig(order=order, nt=nt, mode=mode,
                               executor=Executor.SERIAL),
                )
                piped = ridc_solve(
                    prob, stepper, grid,
                    RidcConfig(order=order, nt=nt, mode=mode,
                               executor=Executor.PIPELINED),
                )
                identical = np.array_equal(serial.y_final, piped.y_final)
                if not identical:
                    _report(3, "bitwise equivalence", False,
                            f"{name} P={order} nt={nt} differs")
                checked += 1
    # spot check at the benchmark problem size
    prob, stepper = brusselator_problem(BrusselatorConfig(interior_points=200))
    grid = TimeGrid(prob.t0, prob.t_final, 50)
    serial = ridc_solve(prob, stepper, grid,
                        RidcConfig(order=4, nt=50, mode=StepKind.IMPLICIT))
    piped = ridc_solve(prob, stepper, grid,
                       RidcConfig(order=4, nt=50, mode=StepKind.IMPLICIT,
                                  executor=Executor.PIPELINED))
    assert np.array_equal(serial.y_final, piped.y_final)
    checked += 1
    _report(3, "bitwise equivalence", True,
            f"{checked} configurations bitwise identical")


def test_criterion_4_brute_force_oracle_equivalence():
    worst = 0.0
    decay = decay_problem()
    decay_step = explicit_euler_stepper(decay)
    stiff = stiff_problem(-40.0)
    stiff_step = stiff_implicit_stepper(-40.0)
    cases = [
        (decay, decay_step, StepKind.EXPLICIT),
        (stiff, stiff_step, StepKind.IMPLICIT),
    ]
    for prob, stepper, mode in cases:
        for order in range(1, 5):
            for nt in range(max(startup_steps(order), 1), 13):
                grid = TimeGrid(prob.t0, prob.t_final, nt)
                result = ridc_solve(
                    prob, stepper, grid, RidcConfig(order=order, nt=nt, mode=mode)
                )
                table = ridc_full_table(prob, stepper, grid, order, mode)
                want = table[order - 1, nt]
                rel = np.max(np.abs(result.y_final - want)) / max(
                    1.0, np.max(np.abs(want))
                )
                worst = max(worst, rel)
    _report(4, "brute-force oracle equivalence", worst <= 1e-13,
            f"worst relative deviation {worst:.2e}")


def test_criterion_5_startup_arithmetic():
    ok = startup_steps(1) == 0 and startup_steps(4) == 8
    fig2 = (
        (0,), (0, 1), (0, 1), (2,), (0, 1, 2), (0, 1, 2), (3,), (3,),
        (0, 1, 2, 3),
    )
    ok = ok and startup_schedule(4) == fig2
    slots = []
    for order in range(1, 9):
        nt = max(startup_steps(order), 1) + 3
        prob = decay_problem()
        result = ridc_solve(
            prob, explicit_euler_stepper(prob),
            TimeGrid(prob.t0, prob.t_final, nt),
            RidcConfig(order=order, nt=nt),
        )
        slots.append(result.memory_slots)
        ok = ok and result.memory_slots == order * (order + 1) // 2
    _report(5, "startup arithmetic", ok,
            f"startup_steps(1)=0, startup_steps(4)=8, slots={slots}")


def test_criterion_6_quadrature_properties():
    ok = True
    for p in range(0, 9):
        dt = 0.37
        m = build_integration_matrix(p, dt)
        ok = ok and abs(m.steady_weights.sum() - dt) <= 1e-14 * dt
        for row in m.startup_weights:
            ok = ok and abs(row.sum() - dt) <= 1e-14 * dt
        unit = build_integration_matrix(p, 1.0)
        nodes = np.arange(p + 2, dtype=float)
        for d in range(p + 2):
            samples = nodes ** d
            want = ((p + 1) ** (d + 1) - p ** (d + 1)) / (d + 1)
            got = float(np.dot(unit.steady_weights, samples[::-1]))
            ok = ok and abs(got - want) <= 1e-12 * max(1.0, abs(want))
            for n in range(p):
                want = ((n + 1) ** (d + 1) - n ** (d + 1)) / (d + 1)
                got = float(np.dot(unit.startup_weights[n], samples))
                # float64 summation floor: measure against term magnitude
                scale = max(1.0, abs(want),
                            float(np.sum(np.abs(unit.startup_weights[n] * samples))))
                ok = ok and abs(got - want) <= 1e-12 * scale
    m1 = build_integration_matrix(1, 0.25)
    pinned = np.array([5.0, 8.0, -1.0]) / 12.0 * 0.25
    ok = ok and np.max(np.abs(m1.steady_weights - pinned)) <= 1e-14 * 0.25
    _report(6, "quadrature properties", ok,
            "row sums, exactness p<=8, p=1 steady weights pinned")


def test_criterion_7_efficiency_formula():
    ok = efficiency_ratio(4, 100) == 1.09
    ok = ok and all(efficiency_ratio(1, k) == 1.0 for k in (1, 9, 100, 10000))
    _report(7, "efficiency formula", ok,
            f"gamma(4,100)={efficiency_ratio(4, 100)}, gamma(1,K)=1.0")


def test_criterion_8_speedup():
    setup = problem_setup("brusselator", grid_points=200, t_final=1.0)
    rows, entries = run_benchmark(setup, [4], 64, StepKind.IMPLICIT, repeats=3)
    entry = entries[0]
    vs_euler = entry.ridc_pipelined_s / entry.euler_serial_s
    vs_serial = entry.ridc_serial_s / entry.ridc_pipelined_s
    ok = vs_euler <= 2.0 and vs_serial >= 2.0 and entry.identical
    cores = _physical_cores()
    detail = (
        f"euler {entry.euler_serial_s:.3f}s, serial RIDC-4 "
        f"{entry.ridc_serial_s:.3f}s, pipelined {entry.ridc_pipelined_s:.3f}s "
        f"({entry.workers} workers, {cores} physical cores); "
        f"pipelined/euler {vs_euler:.2f}x (need <=2.0), "
        f"serial/pipelined {vs_serial:.2f}x (need >=2.0)"
    )
    if not ok and cores < 4:
        _report(8, "speedup", ok,
                "soft miss on a <4-core host: " + detail, warn=True)
    else:
        _report(8, "speedup", ok, detail)
    # results must agree bitwise regardless of timing
    assert entry.identical


def test_criterion_9_a_stability_smoke():
    nt = 100
    peaks = []
    ok = True
    for lam_dt in (-1e2, -1e4, -1e6):
        lam = lam_dt * nt  # dt = 1/nt on [0, 1]
        prob_rhs = lambda t, y, lam=lam: lam * y
        from ridc import IvpProblem

        prob = IvpProblem(1, 0.0, 1.0, np.ones(1), prob_rhs)
        stepper = StepperContract(
            StepKind.IMPLICIT, lambda t, dt, v, lam=lam: v / (1.0 - dt * lam)
        )
        grid = TimeGrid(0.0, 1.0, nt)
        result = ridc_solve(
            prob, stepper, grid,
            RidcConfig(order=4, nt=nt, mode=StepKind.IMPLICIT,
                       record_trajectories=True),
        )
        peak = max(float(np.nanmax(np.abs(traj))) for traj in result.trajectories)
        peaks.append(peak)
        ok = ok and peak <= 1.0 + 1e-9
    _report(9, "A-stability smoke", ok,
            f"peak |u| per lambda*dt in (-1e2,-1e4,-1e6): "
            + ", ".join(f"{p:.12f}" for p in peaks))
