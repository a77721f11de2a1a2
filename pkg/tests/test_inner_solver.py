import math

import numpy as np
import pytest

from mopp import (
    ContractError,
    InnerConfig,
    InnerSolveError,
    evaluate,
    get_problem,
    penalty_objective,
    prox_convex,
    solve_subproblem,
)

Z = np.array([1.0, 1.0]) / math.sqrt(2.0)


class TestSolveSubproblem:
    def test_first_reference_step(self, paper):
        sol = solve_subproblem(paper, [-1.0, 3.0], Z, 1.0)
        np.testing.assert_allclose(sol.x_next, [0.17128, 2.41010], atol=1e-2)
        np.testing.assert_allclose(sol.x_next, [0.17128, 2.41010], atol=1e-5)
        assert sol.feasibility_violation <= 1e-10

    def test_fixed_point(self, paper):
        sol = solve_subproblem(paper, [1.0, 2.0], [0.0, 1.0], 1.0)
        np.testing.assert_allclose(sol.x_next, [1.0, 2.0], atol=1e-12)

    def test_feasible_and_descending(self, paper):
        rng = np.random.default_rng(8)
        for x_k in rng.uniform(-2, 3, size=(10, 2)):
            sol = solve_subproblem(paper, x_k, Z, 1.0)
            assert np.all(evaluate(paper, sol.x_next) <= evaluate(paper, x_k) + 1e-10)
            phi_k = float(evaluate(paper, x_k) @ Z)
            assert sol.phi_value <= phi_k + 1e-12

    def test_unconstrained_one_dimensional_brute_force(self):
        p = get_problem("parabolas_1d")
        grid = np.linspace(-3, 3, 600_001)
        for x_k in (-2.5, 0.3, 2.9):
            sol = solve_subproblem(p, [x_k], Z, 0.5, mode="unconstrained")
            phi = Z[0] * (grid - 1) ** 2 + Z[1] * (grid + 1) ** 2 + 0.25 * (grid - x_k) ** 2
            assert sol.phi_value == pytest.approx(phi.min(), abs=1e-9)
            assert sol.x_next[0] == pytest.approx(grid[np.argmin(phi)], abs=1e-5)

    def test_bounds_are_respected(self):
        p = get_problem("cobb_douglas")
        sol = solve_subproblem(p, [1.9, 1.95], Z, 0.1)
        assert np.all(sol.x_next <= p.bounds[:, 1]) and np.all(sol.x_next >= p.bounds[:, 0])

    def test_contracts(self, paper):
        with pytest.raises(ContractError):
            solve_subproblem(paper, [0.0, 0.0], Z, 0.0)
        with pytest.raises(ContractError):
            solve_subproblem(paper, [0.0, 0.0], Z, 1.0, mode="box")

    def test_failure_keeps_best_point(self, paper):
        cfg = InnerConfig(max_inner=1, rhos=(10.0,), max_rounds=1)
        with pytest.raises(InnerSolveError) as info:
            solve_subproblem(paper, [-1.0, 3.0], Z, 1.0, cfg=cfg)
        assert info.value.best is not None
        assert info.value.best.feasibility_violation <= cfg.feas_tol


class TestPenaltyObjective:
    def test_centre_has_no_penalty(self, paper):
        x = np.array([0.4, -0.3])
        val, _ = penalty_objective(paper, x, x, Z, 1.0, 10.0)
        assert val == pytest.approx(float(evaluate(paper, x) @ Z), abs=1e-15)

    def test_reference_value(self, paper):
        val, _ = penalty_objective(paper, [0.0, 0.0], [-1.0, 3.0], Z, 1.0, 10.0)
        assert val == pytest.approx(5.0 / math.sqrt(2.0) + 5.0, abs=1e-6)
        assert val == pytest.approx(8.535534, abs=1e-6)

    def test_plain_quadratic_penalty(self, paper):
        x, x_k = np.array([1.0, 2.5]), np.array([1.0, 2.0])
        c = evaluate(paper, x) - evaluate(paper, x_k)
        d = x - x_k
        expected = float(evaluate(paper, x) @ Z) + 0.5 * (d @ d) + 3.0 * float(np.sum(np.maximum(c, 0) ** 2))
        assert penalty_objective(paper, x, x_k, Z, 1.0, 3.0)[0] == pytest.approx(expected, rel=1e-14)

    def test_gradient_against_finite_differences(self, paper):
        rng = np.random.default_rng(10)
        worst = 0.0
        for _ in range(20):
            x, x_k = rng.uniform(-2, 3, size=(2, 2))
            shift = rng.uniform(0, 2, size=2)
            _, g = penalty_objective(paper, x, x_k, Z, 0.7, 50.0, shift=shift)
            fd = np.zeros(2)
            for j in range(2):
                e = np.zeros(2)
                e[j] = 1e-6
                fd[j] = (
                    penalty_objective(paper, x + e, x_k, Z, 0.7, 50.0, shift=shift)[0]
                    - penalty_objective(paper, x - e, x_k, Z, 0.7, 50.0, shift=shift)[0]
                ) / 2e-6
            worst = max(worst, np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g)))
        assert worst < 1e-5


class TestProxConvex:
    ABS = get_problem("abs_1d")

    @pytest.mark.parametrize("x_k, expected", [(2.0, 1.0), (0.5, 0.0), (0.0, 0.0), (-1.7, -0.7)])
    def test_soft_threshold(self, x_k, expected):
        x, e = prox_convex(self.ABS, [x_k], [1.0, 0.0], 1.0)
        assert x[0] == pytest.approx(expected, abs=1e-12) and e == 0.0

    def test_both_weights(self):
        x, _ = prox_convex(self.ABS, [2.0], Z, 1.0)
        assert x[0] == pytest.approx(2.0 - math.sqrt(2.0), abs=1e-12)
        assert x[0] == pytest.approx(0.58579, abs=1e-5)

    def test_unconstrained_subproblem_agrees_on_grid(self):
        grid = np.linspace(-3, 3, 600_001)
        phi = math.sqrt(2.0) * np.abs(grid) + 0.5 * (grid - 2.0) ** 2
        x, _ = prox_convex(self.ABS, [2.0], Z, 1.0)
        assert abs(x[0] - grid[np.argmin(phi)]) <= 1e-5

    def test_polyhedral_brute_force(self):
        p = get_problem("polyhedral")
        g = np.linspace(-1, 3, 801)
        X, Y = np.meshgrid(g, g, indexing="ij")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        for x_k in ([2.5, 1.5], [0.3, -0.2], [-2.0, 1.0]):
            F = p.batch_evaluator(pts)
            phi = F @ Z + 0.5 * np.sum((pts - x_k) ** 2, axis=1)
            x, _ = prox_convex(p, x_k, Z, 1.0)
            val = float(evaluate(p, x) @ Z + 0.5 * np.sum((x - np.asarray(x_k)) ** 2))
            assert val <= phi.min() + 1e-12

    def test_subgradient_loop_meets_budget(self):
        p = get_problem("smooth_convex")
        x, e = prox_convex(p, [3.0, -1.0], Z, 1.0, e_budget=1e-8)
        assert e <= 1e-8
        # closed form: (2 z1 + 2 z2 + alpha) x = 2 z2 a + alpha x_k
        s = 2 * Z.sum() + 1.0
        np.testing.assert_allclose(x, (2 * Z[1] * np.array([1.0, 2.0]) + np.array([3.0, -1.0])) / s, atol=1e-8)

    def test_rejects_nonconvex(self, paper):
        with pytest.raises(ContractError):
            prox_convex(paper, [0.0, 0.0], Z, 1.0)
