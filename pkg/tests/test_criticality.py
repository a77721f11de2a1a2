import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mopp import (
    ContractError,
    OracleError,
    ProblemSpec,
    criticality_certificate,
    descent_direction,
    fejer_check,
    get_problem,
    jacobian,
    pareto_grid_oracle,
    weak_pareto_grid_oracle,
)
from mopp.criticality import grid_witness


def lambda_grid(J, step=1e-5):
    lam = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)[:, None]
    return float(np.min(np.linalg.norm(lam * J[0] + (1 - lam) * J[1], axis=1)))


class TestCertificate:
    def test_zero_row_at_1_2(self, paper):
        cert = criticality_certificate(jacobian(paper, [1.0, 2.0]))
        assert cert.is_critical and cert.residual == 0.0
        np.testing.assert_allclose(cert.lam, [0.0, 1.0])
        assert cert.descent is None

    def test_zero_row_at_origin(self, paper):
        assert criticality_certificate(jacobian(paper, [0.0, 0.0])).is_critical

    def test_orthogonal_closed_form(self, paper):
        J = jacobian(paper, [1.0, 0.0])
        cert = criticality_certificate(J)
        assert cert.residual == pytest.approx(0.7237, abs=1e-4)
        assert cert.residual == pytest.approx(lambda_grid(J), abs=1e-9)
        assert not cert.is_critical

    def test_non_finite_rejected(self):
        with pytest.raises(ContractError):
            criticality_certificate([[np.nan, 0.0]])

    def test_normalized_ignores_row_scale(self):
        J = np.array([[1e-9, 0.0], [0.0, 1.0]])
        assert criticality_certificate(J).residual < 1e-8
        assert criticality_certificate(J, normalize=True).residual == pytest.approx(1 / math.sqrt(2))

    def test_interior_hull_point_past_iteration_cap(self):
        # zero is interior to the hull; plain Frank-Wolfe is still short at its cap
        J = np.array([[1.0, -1.0], [-0.5, 2.0], [-0.5, -0.5]])
        cert = criticality_certificate(J)
        assert cert.is_critical
        np.testing.assert_allclose(cert.lam, [1 / 3, 4 / 15, 2 / 5], atol=1e-12)

    def test_to_dict(self, paper):
        d = criticality_certificate(jacobian(paper, [1.0, 0.0])).to_dict()
        assert set(d) == {"lambda", "residual", "relative_residual", "is_critical", "descent"}

    @settings(max_examples=60, deadline=None)
    @given(arrays(float, (3, 2), elements=st.floats(-5, 5)))
    def test_descent_property(self, J):
        cert = criticality_certificate(J, tol=1e-6)
        if cert.descent is not None:
            assert np.max(J @ cert.descent) < 0
            if cert.gap <= 1e-13:
                assert np.max(J @ cert.descent) <= -cert.residual / 2 + 1e-12
        # residual never exceeds the shortest row
        assert cert.residual <= np.min(np.linalg.norm(J, axis=1)) + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(arrays(float, (2, 2), elements=st.floats(-5, 5)))
    def test_agrees_with_lambda_grid(self, J):
        cert = criticality_certificate(J, tol=1e-9)
        grid = lambda_grid(J, 1e-5)
        # grid error is second order in the step when the residual is positive
        assert cert.residual <= grid + 1e-10
        assert grid - cert.residual <= max(1e-6, 2e-5 * np.linalg.norm(J[0] - J[1]))


class TestDescentDirection:
    def test_both_products_negative(self, paper):
        J = jacobian(paper, [1.0, 0.0])
        v = descent_direction(J)
        assert np.all(J @ v < 0)
        assert np.max(np.abs(v)) == pytest.approx(1.0)

    def test_none_at_critical(self, paper):
        assert descent_direction(jacobian(paper, [1.0, 2.0])) is None

    def test_single_objective(self):
        np.testing.assert_allclose(descent_direction(np.array([[1.0, 0.0]])), [-1.0, 0.0])

    def test_cap(self):
        v = descent_direction(np.array([[3.0, 4.0]]), v_cap=0.5)
        assert np.max(np.abs(v)) == pytest.approx(0.5)


class TestGridOracle:
    BOX = [[-2.0, 3.0], [-2.0, 3.0]]

    def test_minimizer_of_f2(self, paper):
        assert weak_pareto_grid_oracle(paper, self.BOX, 0.05, [1.0, 2.0])

    def test_start_point_is_dominated(self, paper):
        assert not weak_pareto_grid_oracle(paper, self.BOX, 0.05, [-1.0, 3.0])
        w = grid_witness(paper, self.BOX, 0.05, [-1.0, 3.0])
        f = paper.evaluator(w)
        assert np.all(f < paper.evaluator(np.array([-1.0, 3.0])))
        # a hand-checked witness: (0.5, 1)
        np.testing.assert_allclose(paper.evaluator(np.array([0.5, 1.0])), [0.7135, 1.25], atol=1e-4)

    def test_one_objective_parabola(self):
        p = ProblemSpec(n=1, m=1, evaluator=lambda x: (x - 0.3) ** 2, bounds=[[-1.0, 1.0]])
        assert weak_pareto_grid_oracle(p, [[-1.0, 1.0]], 0.01, [0.3])

    def test_polyhedral_segment(self):
        p = get_problem("polyhedral")
        box = [[-3.0, 5.0], [-3.0, 5.0]]
        assert weak_pareto_grid_oracle(p, box, 0.02, [1.0, 0.0])
        assert pareto_grid_oracle(p, box, 0.02, [1.0, 0.0])
        assert not pareto_grid_oracle(p, box, 0.02, [1.0, 0.5])

    def test_shrinking_box_cannot_create_witness(self, paper):
        # monotonicity: a smaller box never turns true into false
        assert weak_pareto_grid_oracle(paper, self.BOX, 0.05, [0.5, 1.0])
        assert weak_pareto_grid_oracle(paper, [[0.0, 1.0], [0.0, 1.0]], 0.05, [0.5, 1.0])
        assert not weak_pareto_grid_oracle(paper, [[-1.0, 1.0], [0.5, 3.0]], 0.1, [-1.0, 3.0])

    def test_refuses_large_dimension(self):
        p = ProblemSpec(n=5, m=1, evaluator=lambda x: [x @ x])
        with pytest.raises(OracleError):
            weak_pareto_grid_oracle(p, [[-1.0, 1.0]], 0.5, np.zeros(5))

    def test_box_outside_bounds(self, paper):
        with pytest.raises(ContractError):
            weak_pareto_grid_oracle(paper, [[-20.0, 0.0], [0.0, 1.0]], 0.5, [0.0, 0.0])

    def test_bad_resolution(self, paper):
        with pytest.raises(ContractError):
            weak_pareto_grid_oracle(paper, self.BOX, 0.0, [0.0, 0.0])


class TestFejer:
    def test_increasing_distance(self):
        assert not fejer_check([[0.0], [2.0], [1.0]], [0.0])

    def test_constant(self):
        assert fejer_check([[1.0, 1.0]] * 4, [0.0, 0.0])

    def test_golden_trajectory(self, golden_report):
        assert fejer_check(golden_report.trajectory, [0.99277, 1.98565], 1e-6)

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            fejer_check([[0.0, 1.0]], [0.0])

    def test_empty(self):
        with pytest.raises(ContractError):
            fejer_check([], [0.0])
