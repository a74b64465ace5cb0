import csv

import numpy as np
import pytest

from ellipcenter.quadratic import (
    DenseOperator,
    DiagonalOperator,
    QuadraticProblem,
    RankOneOperator,
)
from ellipcenter.solver import (
    Branch,
    EpsilonMode,
    SolveOptions,
    Termination,
    ellipse_center_coeffs,
    level_step,
    me_iterate,
    me_solve,
    write_trace_csv,
)


def diag_problem(entries, b=None, c=0.0):
    entries = np.asarray(entries, dtype=float)
    if b is None:
        b = np.zeros(len(entries))
    return QuadraticProblem(DiagonalOperator(entries), b, c)


def random_problem(rng, n):
    kind = rng.integers(0, 3)
    if kind == 0:
        op = DiagonalOperator(rng.uniform(0.5, 10.0, n))
    elif kind == 1:
        op = RankOneOperator(rng.uniform(0.0, 1.0, n), rng.uniform(1.0, 10.0))
    else:
        r = rng.standard_normal((n, n))
        op = DenseOperator(r @ r.T + n * np.eye(n))
    return QuadraticProblem(op, rng.standard_normal(n))


class TestLevelStep:
    def test_hand_example(self):
        p = diag_problem([1.0, 4.0])
        x = np.array([2.0, 1.0])
        t, y = level_step(p, x, p.gradient(x))
        assert t == pytest.approx(10.0 / 17.0, rel=1e-15)
        np.testing.assert_allclose(y, [14.0 / 17.0, -23.0 / 17.0], rtol=1e-14)
        assert p.value(y) == pytest.approx(p.value(x), rel=1e-12)

    def test_identity_reflects(self):
        p = diag_problem([1.0, 1.0, 1.0])
        x = np.array([0.3, -2.0, 1.0])
        t, y = level_step(p, x, p.gradient(x))
        assert t == pytest.approx(2.0)
        np.testing.assert_allclose(y, -x, rtol=1e-14)

    def test_one_dimensional_reflection(self):
        p = diag_problem([2.0])
        t, y = level_step(p, [3.0], p.gradient([3.0]))
        assert t == pytest.approx(1.0)
        assert y[0] == pytest.approx(-3.0)

    def test_indefinite_operator_rejected(self):
        p = QuadraticProblem(DenseOperator([[1.0, 0.0], [0.0, -1.0]]), [0.0, 0.0])
        with pytest.raises(ValueError, match="positive definite"):
            level_step(p, [0.0, 1.0], [0.0, -1.0])

    def test_level_set_equality_sweep(self):
        rng = np.random.default_rng(20)
        for _ in range(300):
            n = int(rng.integers(1, 101))
            p = random_problem(rng, n)
            x = rng.standard_normal(n) * 3.0
            g = p.gradient(x)
            if np.linalg.norm(g) == 0.0:
                continue
            _, y = level_step(p, x, g)
            fx = p.value(x)
            assert abs(p.value(y) - fx) <= 1e-9 * max(1.0, abs(fx))


class TestEllipseCenterCoeffs:
    def setup_method(self):
        self.p = diag_problem([1.0, 4.0])
        self.g_x = np.array([2.0, 4.0])
        self.g_y = np.array([14.0 / 17.0, -92.0 / 17.0])

    def test_hand_example(self):
        delta, alpha, beta = ellipse_center_coeffs(self.p, self.g_x, self.g_y)
        assert delta == pytest.approx(230400.0 / 289.0, rel=1e-12)
        assert alpha == pytest.approx(-0.825, rel=1e-12)
        assert beta == pytest.approx(-0.425, rel=1e-12)

    def test_matches_two_by_two_solve(self):
        # Independent oracle: solve the Gram system with numpy.
        a = self.p.A.dense()
        m = np.array(
            [
                [self.g_x @ a @ self.g_x, self.g_x @ a @ self.g_y],
                [self.g_x @ a @ self.g_y, self.g_y @ a @ self.g_y],
            ]
        )
        q = np.array([-(self.g_x @ self.g_x), -(self.g_x @ self.g_y)])
        expected = np.linalg.solve(m, q)
        _, alpha, beta = ellipse_center_coeffs(self.p, self.g_x, self.g_y)
        np.testing.assert_allclose([alpha, beta], expected, rtol=1e-12)

    def test_problem_rescaling_keeps_center(self):
        # Scaling A and b by the same factor rescales both gradients but
        # leaves the level sets, and hence the center, unchanged.
        s = 2.0
        p2 = QuadraticProblem(DiagonalOperator(s * np.array([1.0, 4.0])), np.zeros(2))
        x = np.array([2.0, 1.0])
        d1, a1, b1 = ellipse_center_coeffs(self.p, self.g_x, self.g_y)
        d2, a2, b2 = ellipse_center_coeffs(p2, s * self.g_x, s * self.g_y)
        center1 = x + a1 * self.g_x + b1 * self.g_y
        center2 = x + a2 * (s * self.g_x) + b2 * (s * self.g_y)
        np.testing.assert_allclose(center1, center2, atol=1e-12)
        assert a2 == pytest.approx(a1 / s, rel=1e-12)

    def test_orthogonal_pair_under_identity(self):
        p = diag_problem([1.0, 1.0])
        delta, alpha, beta = ellipse_center_coeffs(p, [1.0, 0.0], [0.0, 1.0])
        assert delta == pytest.approx(1.0)
        assert alpha == pytest.approx(-1.0)
        assert beta == pytest.approx(0.0, abs=1e-15)

    def test_dependent_gradients_rejected(self):
        with pytest.raises(ValueError, match="dependent"):
            ellipse_center_coeffs(self.p, self.g_x, 3.0 * self.g_x)

    def test_cross_check_routes_agree(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            n = int(rng.integers(2, 30))
            p = random_problem(rng, n)
            g_x = rng.standard_normal(n)
            g_y = rng.standard_normal(n)
            try:
                ellipse_center_coeffs(p, g_x, g_y, cross_check=True)
            except ValueError:
                pass  # dependent draw; nothing to cross-check


class TestMeIterate:
    def test_two_dimensional_newton_step(self):
        p = diag_problem([1.0, 4.0])
        rec = me_iterate(p, [2.0, 1.0])
        assert rec.branch is Branch.ELLIPSE_CENTER
        assert rec.delta > 0.0
        np.testing.assert_allclose(rec.x_next, np.zeros(2), atol=1e-12)

    def test_identity_takes_midpoint(self):
        p = diag_problem([1.0, 1.0])
        rec = me_iterate(p, [1.0, 0.0])
        assert rec.branch is Branch.MIDPOINT
        assert rec.delta is None and rec.alpha is None and rec.beta is None
        np.testing.assert_allclose(rec.x_next, np.zeros(2), atol=1e-15)

    def test_converged_input(self):
        rng = np.random.default_rng(22)
        p = diag_problem([2.0, 5.0], b=rng.standard_normal(2))
        x_star = np.asarray(p.b) / np.array([2.0, 5.0])
        rec = me_iterate(p, x_star)
        assert rec.branch is Branch.CONVERGED
        np.testing.assert_array_equal(rec.x_next, rec.x)

    def test_descent_and_level_equality(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            n = int(rng.integers(2, 40))
            p = random_problem(rng, n)
            x = rng.standard_normal(n)
            rec = me_iterate(p, x, grad_tolerance=0.0)
            fx = p.value(x)
            assert p.value(rec.x_next) <= fx + 1e-10 * max(1.0, abs(fx))
            assert abs(p.value(rec.y) - fx) <= 1e-9 * max(1.0, abs(fx))

    def test_center_is_plane_minimizer(self):
        rng = np.random.default_rng(24)
        for _ in range(20):
            n = int(rng.integers(2, 21))
            p = random_problem(rng, n)
            x = rng.standard_normal(n)
            rec = me_iterate(p, x, grad_tolerance=0.0)
            if rec.branch is not Branch.ELLIPSE_CENTER:
                continue
            f_center = p.value(rec.x_next)
            for _ in range(50):
                a, b = rng.standard_normal(2) * 2.0
                trial = rec.x + a * rec.g_x + b * rec.g_y
                assert f_center <= p.value(trial) + 1e-9 * max(1.0, abs(f_center))

    def test_orthogonality_at_center(self):
        rng = np.random.default_rng(25)
        for _ in range(200):
            n = int(rng.integers(2, 40))
            p = random_problem(rng, n)
            x = rng.standard_normal(n)
            rec = me_iterate(p, x, grad_tolerance=0.0)
            if rec.branch is not Branch.ELLIPSE_CENTER:
                continue
            g_next = p.gradient(rec.x_next)
            scale = np.linalg.norm(rec.g_x) * max(
                np.linalg.norm(rec.g_x), np.linalg.norm(rec.g_y)
            )
            assert abs(rec.g_x @ g_next) <= 1e-8 * scale
            assert abs(rec.g_y @ g_next) <= 1e-8 * scale


class TestMeSolve:
    def test_two_by_two_single_iteration(self):
        rng = np.random.default_rng(26)
        for _ in range(50):
            r = rng.standard_normal((2, 2))
            p = QuadraticProblem(DenseOperator(r @ r.T + np.eye(2)), rng.standard_normal(2))
            first = me_iterate(p, np.zeros(2), grad_tolerance=0.0)
            if first.branch is not Branch.ELLIPSE_CENTER:
                continue
            result = me_solve(p, np.zeros(2))
            assert result.iterations == 1
            assert result.terminated_by is Termination.GRADIENT_TOLERANCE
            x_star = np.linalg.solve(p.A.dense(), np.asarray(p.b))
            err = np.linalg.norm(result.x_final - x_star)
            assert err <= 1e-8 * (1.0 + np.linalg.norm(x_star))

    def test_start_at_minimizer(self):
        p = diag_problem([1.0, 3.0], b=np.array([2.0, 6.0]))
        result = me_solve(p, [2.0, 2.0])
        assert result.iterations == 0
        assert result.terminated_by is Termination.GRADIENT_TOLERANCE

    def test_hundred_dimensional_diagonal(self):
        rng = np.random.default_rng(27)
        entries = np.arange(1.0, 101.0)
        b = rng.uniform(0.0, 10.0, 100)
        p = QuadraticProblem(DiagonalOperator(entries), b)
        result = me_solve(p, np.zeros(100), SolveOptions(epsilon=1e-8))
        f_star = -0.5 * float(b @ (b / entries))
        assert result.terminated_by is Termination.GRADIENT_TOLERANCE
        g0_norm = np.linalg.norm(b)
        assert result.grad_norm_final <= 1e-8 * g0_norm
        assert result.f_final == pytest.approx(f_star, rel=1e-8)

    def test_monotone_descent_in_trace(self):
        rng = np.random.default_rng(28)
        p = random_problem(rng, 30)
        result = me_solve(p, rng.standard_normal(30), SolveOptions(record_trace=True))
        values = [rec.f_value for rec in result.trace] + [result.f_final]
        for before, after in zip(values, values[1:]):
            assert after <= before + 1e-10 * max(1.0, abs(before))

    def test_delta_positive_on_ellipse_branch(self):
        rng = np.random.default_rng(29)
        p = random_problem(rng, 25)
        result = me_solve(p, rng.standard_normal(25), SolveOptions(record_trace=True))
        assert any(rec.branch is Branch.ELLIPSE_CENTER for rec in result.trace)
        for rec in result.trace:
            if rec.branch is Branch.ELLIPSE_CENTER:
                assert rec.delta > 0.0

    def test_max_iterations_termination(self):
        p = diag_problem(np.linspace(1.0, 1000.0, 50), b=np.ones(50))
        result = me_solve(p, np.zeros(50), SolveOptions(max_iterations=2))
        assert result.iterations == 2
        assert result.terminated_by is Termination.MAX_ITERATIONS

    def test_absolute_mode(self):
        p = diag_problem([1.0, 2.0], b=np.array([5.0, 5.0]))
        opts = SolveOptions(epsilon=1e-3, epsilon_mode=EpsilonMode.ABSOLUTE)
        result = me_solve(p, np.zeros(2), opts)
        assert result.grad_norm_final <= 1e-3

    def test_dimension_mismatch(self):
        p = diag_problem([1.0, 2.0])
        with pytest.raises(ValueError):
            me_solve(p, [1.0, 2.0, 3.0])


class TestSolveOptionsValidation:
    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            SolveOptions(epsilon=0.0)

    def test_bad_max_iterations(self):
        with pytest.raises(ValueError):
            SolveOptions(max_iterations=0)

    def test_bad_dependence_tolerance(self):
        with pytest.raises(ValueError):
            SolveOptions(dependence_tolerance=-1.0)


def test_trace_csv_round_trip(tmp_path):
    rng = np.random.default_rng(30)
    p = random_problem(rng, 10)
    result = me_solve(p, rng.standard_normal(10), SolveOptions(record_trace=True))
    path = tmp_path / "trace.csv"
    write_trace_csv(path, result.trace)
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == result.iterations
    for i, (row, rec) in enumerate(zip(rows, result.trace), start=1):
        assert int(row["iter"]) == i
        assert row["branch"] == rec.branch.value
        # 17 significant digits round-trip doubles exactly.
        assert float(row["f"]) == rec.f_value
        assert float(row["grad_norm"]) == rec.grad_norm
        assert float(row["t"]) == rec.t
