import numpy as np
import pytest

from ridc import StepKind, StepperContract
from ridc.cli import (
    CSV_HEADER,
    ConvergenceAborted,
    Executor,
    ProblemSetup,
    fit_least_squares,
    main,
    run_convergence_study,
)
from ridc.problems import decay_problem


def read_csv(path):
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    assert lines[0] == CSV_HEADER
    rows = []
    trailer = []
    for line in lines[1:]:
        if line.startswith("#"):
            trailer.append(line)
        elif line:
            rows.append(dict(zip(CSV_HEADER.split(","), line.split(","))))
    return rows, trailer, text


class TestSolveCommand:
    def test_decay_solve_succeeds(self, tmp_path, capsys):
        out = tmp_path / "run.csv"
        code = main(["solve", "decay", "--order", "4", "--steps", "100",
                     "--output", str(out)])
        assert code == 0
        rows, _, text = read_csv(out)
        assert len(rows) == 1
        row = rows[0]
        assert row["problem"] == "decay"
        assert row["order"] == "4"
        assert row["mode"] == "fe"
        assert float(row["error_inf"]) < 1e-8
        # LF endings, no CR anywhere
        assert "\r" not in text
        # error line printed for problems with an analytic solution
        assert "error_inf" in capsys.readouterr().out

    def test_17_significant_digits_round_trip(self, tmp_path):
        out = tmp_path / "run.csv"
        main(["solve", "decay", "--order", "2", "--steps", "40",
              "--output", str(out)])
        rows, _, _ = read_csv(out)
        text_value = rows[0]["error_inf"]
        assert float(repr(float(text_value))) == float(text_value)

    def test_state_output(self, tmp_path):
        state = tmp_path / "state.csv"
        code = main(["solve", "decay", "--order", "2", "--steps", "40",
                     "--output", str(tmp_path / "run.csv"),
                     "--state-output", str(state)])
        assert code == 0
        lines = state.read_text().splitlines()
        assert lines[0] == "index,value"
        assert len(lines) == 3  # two components

    def test_order_out_of_range_is_config_error(self):
        assert main(["solve", "decay", "--order", "0", "--steps", "10"]) == 1
        assert main(["solve", "decay", "--order", "13", "--steps", "10"]) == 1

    def test_unknown_problem_lists_available(self, capsys):
        code = main(["solve", "nosuch", "--order", "2", "--steps", "10"])
        assert code == 1
        err = capsys.readouterr().err
        for name in ("brusselator", "decay", "poly", "stiff"):
            assert name in err

    def test_usage_error_maps_to_exit_1(self):
        assert main(["solve", "decay", "--order", "2"]) == 1  # missing --steps

    def test_brusselator_solve_reports_walltime_without_exact_error(self, tmp_path):
        out = tmp_path / "bruss.csv"
        code = main(["solve", "brusselator", "--order", "3", "--steps", "20",
                     "--mode", "be", "--grid-points", "8",
                     "--t-final", "0.5", "--output", str(out)])
        assert code == 0
        rows, _, _ = read_csv(out)
        assert rows[0]["error_inf"] == "nan"
        assert float(rows[0]["walltime_s"]) > 0.0

    def test_pipelined_executor_through_cli(self, tmp_path):
        out_s = tmp_path / "s.csv"
        out_p = tmp_path / "p.csv"
        main(["solve", "decay", "--order", "4", "--steps", "50",
              "--output", str(out_s)])
        code = main(["solve", "decay", "--order", "4", "--steps", "50",
                     "--executor", "pipelined", "--output", str(out_p)])
        assert code == 0
        rows_s, _, _ = read_csv(out_s)
        rows_p, _, _ = read_csv(out_p)
        assert rows_s[0]["error_inf"] == rows_p[0]["error_inf"]

    def test_serial_runs_are_bit_reproducible(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        main(["solve", "decay", "--order", "3", "--steps", "60", "--output", str(a)])
        main(["solve", "decay", "--order", "3", "--steps", "60", "--output", str(b)])
        rows_a, _, _ = read_csv(a)
        rows_b, _, _ = read_csv(b)
        assert rows_a[0]["error_inf"] == rows_b[0]["error_inf"]


class TestConvergeCommand:
    def test_decay_order_one_slope(self, tmp_path, capsys):
        out = tmp_path / "conv.csv"
        code = main(["converge", "decay", "--orders", "1",
                     "--steps", "20,40,80,160", "--output", str(out)])
        assert code == 0
        rows, _, _ = read_csv(out)
        assert len(rows) == 4
        summary = capsys.readouterr().out
        slope = float(summary.split("slope")[1].split()[0])
        assert -1.25 <= slope <= -0.75

    def test_poly_floor_flag(self, tmp_path, capsys):
        code = main(["converge", "poly", "--orders", "4",
                     "--steps", "20,40,80", "--output", str(tmp_path / "c.csv")])
        assert code == 0
        assert "floor" in capsys.readouterr().out

    def test_requires_three_step_counts(self):
        assert main(["converge", "decay", "--orders", "1", "--steps", "20,40"]) == 1

    def test_failed_run_writes_partial_flagged_csv(self, tmp_path, capsys,
                                                   monkeypatch):
        import ridc.cli as cli_mod

        calls = {"n": 0}

        def flaky_setup(args):
            prob = decay_problem()

            def advance(t, dt, v):
                calls["n"] += 1
                if calls["n"] > 130:  # fail partway through the second series
                    raise ArithmeticError("synthetic failure")
                return v + dt * prob.rhs(t, v)

            return ProblemSetup(
                "flaky", prob,
                {StepKind.EXPLICIT: StepperContract(StepKind.EXPLICIT, advance)},
                lambda t: np.exp([-t * t / 2, -t * t]),
            )

        monkeypatch.setitem(cli_mod.PROBLEMS, "flaky", flaky_setup)
        out = tmp_path / "partial.csv"
        code = main(["converge", "flaky", "--orders", "1,2",
                     "--steps", "30,40,50", "--output", str(out)])
        assert code == 2
        rows, trailer, _ = read_csv(out)
        assert 0 < len(rows) < 6
        assert any("incomplete" in line for line in trailer)


class TestBenchCommand:
    def test_order_one_bench(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        code = main(["bench", "decay", "--orders", "1", "--steps", "40",
                     "--mode", "fe", "--repeats", "3", "--output", str(out)])
        assert code == 0
        rows, _, _ = read_csv(out)
        # baseline euler row + serial and pipelined rows for order 1
        assert len(rows) == 3
        executors = [r["executor"] for r in rows]
        assert executors.count("serial") == 2
        assert executors.count("pipelined") == 1
        assert "bitwise match: yes" in capsys.readouterr().out

    def test_repeats_validated(self):
        assert main(["bench", "decay", "--orders", "1", "--steps", "10",
                     "--repeats", "2"]) == 1

    def test_cheap_rhs_bench_reports_without_speedup_assertion(self, tmp_path,
                                                               capsys):
        # overhead-dominated problems still produce a full report; the
        # command never asserts a speedup
        out = tmp_path / "bench.csv"
        code = main(["bench", "decay", "--orders", "4", "--steps", "30",
                     "--mode", "fe", "--repeats", "3", "--output", str(out)])
        assert code == 0
        rows, _, _ = read_csv(out)
        assert len(rows) == 3
        assert "efficiency" in capsys.readouterr().out


class TestProblemSetupFactory:
    def test_builds_by_name_with_params(self):
        from ridc.cli import problem_setup

        setup = problem_setup("brusselator", grid_points=12, t_final=0.5)
        assert setup.problem.dim == 24
        assert setup.problem.t_final == 0.5

    def test_unknown_name_raises_config_error(self):
        from ridc.cli import problem_setup
        from ridc import RidcConfigError

        with pytest.raises(RidcConfigError):
            problem_setup("nosuch")


class TestFitting:
    def test_least_squares_against_hand_computed_three_point_fit(self):
        # points (0,0), (1,2), (2,3): slope 3/2, intercept 1/6
        slope, intercept = fit_least_squares([0.0, 1.0, 2.0], [0.0, 2.0, 3.0])
        assert slope == pytest.approx(1.5, rel=1e-15)
        assert intercept == pytest.approx(1.0 / 6.0, rel=1e-13)

    def test_rejects_single_point(self):
        with pytest.raises(ValueError):
            fit_least_squares([1.0], [2.0])

    def test_convergence_study_aborts_with_partial_rows(self):
        prob = decay_problem()

        def advance(t, dt, v):
            if t > 0.5:
                raise ArithmeticError("boom")
            return v + dt * prob.rhs(t, v)

        setup = ProblemSetup(
            "flaky", prob,
            {StepKind.EXPLICIT: StepperContract(StepKind.EXPLICIT, advance)},
            lambda t: np.exp([-t * t / 2, -t * t]),
        )
        with pytest.raises(ConvergenceAborted) as excinfo:
            run_convergence_study(setup, [1], [10, 20, 30], StepKind.EXPLICIT,
                                  Executor.SERIAL)
        assert excinfo.value.rows == []
        assert excinfo.value.cause.level == 0
