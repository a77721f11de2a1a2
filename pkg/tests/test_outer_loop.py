import math
from dataclasses import replace

import numpy as np
import pytest

from mopp import (
    AlphaSchedule,
    BudgetError,
    ConfigError,
    ContractError,
    IterationRecord,
    SolverConfig,
    SummableSequence,
    check_stop,
    criticality_certificate,
    delta_k,
    get_problem,
    jacobian,
    pareto_grid_oracle,
    run,
    run_cispp,
    run_ispp,
    run_spp,
    scalarize,
    step_residual,
)

Z = np.array([1.0, 1.0]) / math.sqrt(2.0)


def config(**kw):
    base = dict(variant="SPP", x0=(-1.0, 3.0), z=Z, alpha=AlphaSchedule("const", 1.0))
    base.update(kw)
    return SolverConfig(**base)


class TestSchedules:
    def test_summable_sequence(self):
        s = SummableSequence(0.1, 2.0)
        assert s(0) == 0.1 and s(1) == pytest.approx(0.025)
        assert s.partial_sum(1) == pytest.approx(0.125)

    def test_non_summable_rejected(self):
        with pytest.raises(ConfigError):
            SummableSequence(1.0, 1.0)

    def test_zero_budget_allowed(self):
        assert SummableSequence(0.0, 1.0)(5) == 0.0

    def test_alpha_kinds(self):
        assert AlphaSchedule("harmonic", 2.0)(3) == 0.5
        assert AlphaSchedule("list", values=(1.0, 0.5))(7) == 0.5

    @pytest.mark.parametrize("kw", [dict(value=-1.0), dict(value=0.0), dict(kind="sqrt"), dict(value=2.0, alpha_bar=1.0)])
    def test_alpha_rejected(self, kw):
        with pytest.raises(ConfigError):
            AlphaSchedule(**kw)


class TestSolverConfig:
    def test_weights_normalized(self):
        np.testing.assert_allclose(config(z=(1, 1)).z, Z)

    def test_cispp_defaults_unconstrained(self):
        assert config(variant="CISPP").constraint_mode == "unconstrained"

    @pytest.mark.parametrize(
        "kw",
        [
            dict(variant="XPP"),
            dict(z=(0, 0)),
            dict(x0=()),
            dict(variant="CISPP", constraint_mode="sublevel"),
            dict(stop_step_tol=0.0),
            dict(criticality_measure="relative"),
        ],
    )
    def test_rejected(self, kw):
        with pytest.raises(ConfigError):
            config(**kw)

    def test_start_outside_bounds(self, paper):
        with pytest.raises(ConfigError):
            run_spp(paper, config(x0=(20.0, 0.0)))


class TestSmallOps:
    def test_step_residual(self):
        np.testing.assert_allclose(step_residual([0, 0], [0.1, 0.2], 2.0), [-0.2, -0.4])
        np.testing.assert_array_equal(step_residual([1, 2], [1, 2], 3.0), [0, 0])
        with pytest.raises(ContractError):
            step_residual([0, 0], [0], 1.0)
        with pytest.raises(ContractError):
            step_residual([0], [0], 0.0)

    @pytest.mark.parametrize("args, expected", [((0.02, 0.01, 2), 0.01), ((0, 0, 1), 0.0), ((0.3, 0.6, 3), 0.2)])
    def test_delta_k(self, args, expected):
        assert delta_k(*args) == pytest.approx(expected)

    def test_delta_k_contract(self):
        with pytest.raises(ContractError):
            delta_k(0.1, 0.1, 0.0)

    def test_check_stop(self, paper):
        cfg = config()
        rec = IterationRecord(12, np.zeros(2), np.zeros(2), Z, 0.0, step_norm=0.00008)
        far = criticality_certificate(jacobian(paper, [1.0, 0.0]))
        assert check_stop(rec, far, cfg) == "step_tol"
        crit = criticality_certificate(jacobian(paper, [1.0, 2.0]))
        assert check_stop(rec, crit, cfg) == "critical_point"
        rec.step_norm = 0.5
        assert check_stop(rec, far, cfg) is None


class TestSPP:
    def test_reference_table(self, golden_report):
        rep = golden_report
        assert rep.termination == "step_tol" and rep.iterations == 12
        np.testing.assert_allclose(rep.x_final, [0.99277, 1.98565], atol=5e-3)
        assert rep.records[-1].step_norm == pytest.approx(0.00008, abs=5e-6)
        assert rep.final_certificate.residual < 1e-2

    def test_first_row(self, golden_report):
        r = golden_report.records[1]
        np.testing.assert_allclose(r.x, [0.17128, 2.41010], atol=5e-6)
        assert r.step_norm == pytest.approx(1.31144, abs=5e-6)
        assert r.scalarized == pytest.approx(1.30959, abs=5e-6)

    def test_invariants(self, golden_report):
        for a, b in zip(golden_report.records, golden_report.records[1:]):
            assert np.all(b.f <= a.f + 1e-10)
            assert scalarize(b.f, b.z) <= scalarize(a.f, b.z) + 1e-10
            assert b.residual_g_norm == b.alpha * b.step_norm

    def test_start_at_critical_point(self, paper):
        rep = run_spp(paper, config(x0=(1.0, 2.0)))
        assert rep.termination == "critical_point" and rep.iterations == 0

    def test_max_outer(self, paper):
        rep = run_spp(paper, config(max_outer=3))
        assert rep.termination == "max_outer" and rep.iterations == 3

    def test_weight_callback(self, paper):
        rep = run_spp(paper, config(z=lambda k, x: (1.0, 1.0 + 1.0 / (k + 1))))
        assert rep.termination in ("step_tol", "critical_point")
        np.testing.assert_allclose(np.linalg.norm(rep.records[1].z), 1.0)

    def test_absolute_measure_stops_in_flat_tail(self, paper):
        # F1 is nearly flat here, so the raw certificate is tiny although the point is not critical
        x0 = (-1.99, 3.64)
        assert run_spp(paper, config(x0=x0, criticality_measure="absolute")).termination == "critical_point"
        assert run_spp(paper, config(x0=x0)).termination == "step_tol"

    def test_deterministic(self, paper):
        a, b = run_spp(paper, config()), run_spp(paper, config())
        for ra, rb in zip(a.records, b.records):
            np.testing.assert_array_equal(ra.x, rb.x)

    def test_inner_failure_is_reported(self, paper):
        from mopp import InnerConfig

        cfg = config(inner=InnerConfig(max_inner=1, rhos=(10.0,), max_rounds=1))
        rep = run_spp(paper, cfg)
        assert rep.termination == "inner_failure" and rep.message


class TestISPP:
    def test_close_to_spp(self, paper, golden_report):
        rep = run_ispp(paper, config(variant="ISPP"))
        assert np.linalg.norm(rep.x_final - golden_report.x_final) <= 1e-2
        budget = rep.config_echo.delta_budget
        assert all(r.delta_sum <= budget.partial_sum(r.k - 1) + 1e-15 for r in rep.records[1:])
        assert all(r.delta_k <= budget(r.k - 1) for r in rep.records[1:])

    def test_zero_budget_matches_spp_until_constraint_binds(self, paper, golden_report):
        with pytest.raises(BudgetError) as info:
            run_ispp(paper, config(variant="ISPP", delta_budget=SummableSequence(0.0)))
        err = info.value
        assert err.budget == 0.0 and err.achieved > 0.0
        partial = err.report
        for a, b in zip(partial.records, golden_report.records):
            np.testing.assert_allclose(a.x, b.x, atol=1e-10)

    def test_requires_smooth(self):
        with pytest.raises(ContractError):
            run_ispp(get_problem("polyhedral"), config(variant="ISPP", x0=(1.0, 1.0)))


class TestCISPP:
    def cfg(self, x0):
        return config(variant="CISPP", x0=x0, e_budget=SummableSequence(0.0), stop_step_tol=1e-10, max_outer=50)

    def test_stabilizes_on_segment(self):
        p = get_problem("polyhedral")
        rep = run_cispp(p, self.cfg((5.0, 4.0)))
        assert rep.termination == "step_tol" and rep.iterations <= 50
        x = rep.x_final
        assert x[1] == 0.0 and 0.0 <= x[0] <= 2.0
        assert pareto_grid_oracle(p, [[-3.0, 5.0], [-3.0, 5.0]], 0.02, x, tol=1e-12)

    def test_pareto_start_is_fixed(self):
        rep = run_cispp(get_problem("polyhedral"), self.cfg((1.0, 0.0)))
        assert rep.iterations == 1 and rep.records[1].step_norm == 0.0
        np.testing.assert_array_equal(rep.x_final, [1.0, 0.0])

    def test_smooth_convex_trend(self):
        p = get_problem("smooth_convex")
        cfg = config(variant="CISPP", x0=(3.0, -2.0), stop_step_tol=1e-6, max_outer=200)
        rep = run_cispp(p, cfg)
        steps = [r.step_norm for r in rep.records[1:]]
        assert steps[-1] < 1e-6
        assert all(b <= a + 1e-12 for a, b in zip(steps, steps[1:]))
        assert all(r.e_norm <= cfg.e_budget(r.k - 1) for r in rep.records[1:])

    def test_rejects_nonconvex(self, paper):
        with pytest.raises(ContractError):
            run_cispp(paper, config(variant="CISPP"))


def test_dispatch(paper):
    assert run(paper, config(max_outer=1)).config_echo.variant == "SPP"
    assert run(paper, replace(config(max_outer=1), variant="ISPP")).config_echo.variant == "ISPP"
