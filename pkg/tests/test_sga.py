import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holdergrad.errors import ConfigError, DomainViolationError, NumericFailureError
from holdergrad.problems import builtin_problems, make_log_sum_exp, make_power_norm, make_quadratic
from holdergrad.sga import (
    Constant,
    Diminishing,
    IntervalConstant,
    SgaConfig,
    StepMode,
    StopRule,
    alpha_cap,
    default_alpha,
    policy_alpha,
    run_sga,
    sga_step,
    validate_policy,
)
from holdergrad.trace import RunStatus


class TestStep:
    def test_nu_one_is_plain_gradient_step(self):
        # exact arithmetic identity, not just approximate
        x = np.array([1.3, -0.7, 0.2])
        g = np.array([0.11, -3.0, 1e-9])
        alpha = 0.37
        np.testing.assert_array_equal(sga_step(x, g, alpha, 1.0), x - alpha * g)

    def test_scaling_coefficient(self):
        x = np.zeros(2)
        g = np.array([3.0, 4.0])  # norm 5
        out = sga_step(x, g, 0.1, 0.5)
        # (1-nu)/nu = 1, so the step is alpha * ||g|| * g
        np.testing.assert_allclose(out, -0.1 * 5.0 * g, rtol=1e-14)

    def test_zero_gradient_returns_copy(self):
        x = np.array([1.0, 2.0])
        out = sga_step(x, np.zeros(2), 1.0, 0.5)
        np.testing.assert_array_equal(out, x)
        assert out is not x

    def test_tiny_gradient_norm_stays_finite(self):
        # below the 1e-100 cutoff the coefficient is formed in the log domain
        g = np.array([1e-150, 0.0])
        out = sga_step(np.ones(2), g, 0.5, 0.5)
        assert np.all(np.isfinite(out))
        expected = np.ones(2) - 0.5 * 1e-150 * g
        np.testing.assert_allclose(out, expected, rtol=1e-12)

    def test_branches_agree_near_cutoff(self):
        x = np.array([1.0, -1.0])
        direction = np.array([0.6, 0.8])
        below = sga_step(x, 0.99e-100 * direction, 1.0, 0.5)
        above = sga_step(x, 1.01e-100 * direction, 1.0, 0.5)
        np.testing.assert_allclose(below - x, (above - x) * (0.99 / 1.01) ** 2, rtol=1e-9)

    @pytest.mark.parametrize("alpha", [0.0, -0.1])
    def test_bad_alpha(self, alpha):
        with pytest.raises(ValueError):
            sga_step(np.zeros(1), np.ones(1), alpha, 1.0)

    @pytest.mark.parametrize("nu", [0.0, -0.5, 1.5])
    def test_bad_nu(self, nu):
        with pytest.raises(ValueError):
            sga_step(np.zeros(1), np.ones(1), 0.1, nu)

    def test_nonfinite_input(self):
        with pytest.raises(NumericFailureError):
            sga_step(np.array([np.nan]), np.ones(1), 0.1, 1.0)
        with pytest.raises(NumericFailureError):
            sga_step(np.zeros(1), np.array([np.inf]), 0.1, 1.0)


class TestStepConstants:
    def test_function_optimal(self):
        assert default_alpha(1.0, 10.0, StepMode.FUNCTION_OPTIMAL) == pytest.approx(0.1)
        assert default_alpha(0.5, 2.0, StepMode.FUNCTION_OPTIMAL) == pytest.approx(0.25)

    def test_distance_optimal(self):
        # 2 nu / ((1+nu) L^(1/nu))
        assert default_alpha(0.5, 2.0, StepMode.DISTANCE_OPTIMAL) == pytest.approx(1.0 / 6.0)
        assert default_alpha(1.0, 10.0, StepMode.DISTANCE_OPTIMAL) == pytest.approx(0.1)

    def test_cap(self):
        assert alpha_cap(0.5, 2.0) == pytest.approx(0.5625)
        assert alpha_cap(1.0, 4.0) == pytest.approx(0.5)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            default_alpha(1.0, 1.0, "nope")


class TestPolicies:
    def test_constant_at_cap_allowed(self):
        validate_policy(Constant(alpha_cap(0.5, 2.0)), 0.5, 2.0)

    def test_constant_above_cap_rejected(self):
        with pytest.raises(ConfigError):
            validate_policy(Constant(alpha_cap(0.5, 2.0) * 1.01), 0.5, 2.0)

    def test_constant_zero_rejected(self):
        with pytest.raises(ConfigError):
            validate_policy(Constant(0.0), 1.0, 1.0)

    def test_interval_emits_mode_optimum(self):
        pol = IntervalConstant(alpha_bar=0.05, mode=StepMode.FUNCTION_OPTIMAL)
        validate_policy(pol, 1.0, 10.0)
        for k in (0, 3, 100):
            assert policy_alpha(pol, k, 1.0, 10.0) == default_alpha(1.0, 10.0, StepMode.FUNCTION_OPTIMAL)

    def test_interval_anchor_above_optimum_rejected(self):
        with pytest.raises(ConfigError):
            validate_policy(IntervalConstant(alpha_bar=0.2, mode=StepMode.FUNCTION_OPTIMAL), 1.0, 10.0)

    def test_diminishing_schedules(self):
        nu, L = 1.0, 1.0
        assert policy_alpha(Diminishing("harmonic", alpha0=1.0), 3, nu, L) == pytest.approx(0.25)
        assert policy_alpha(Diminishing("sqrt", alpha0=1.0), 3, nu, L) == pytest.approx(0.5)
        assert policy_alpha(Diminishing("geometric", alpha0=1.0, ratio=0.5), 3, nu, L) == pytest.approx(0.125)

    def test_diminishing_alpha0_defaults_to_cap(self):
        pol = Diminishing("harmonic")
        validate_policy(pol, 1.0, 4.0)
        assert policy_alpha(pol, 0, 1.0, 4.0) == pytest.approx(alpha_cap(1.0, 4.0))

    def test_diminishing_validation(self):
        with pytest.raises(ConfigError):
            validate_policy(Diminishing("cubic"), 1.0, 1.0)
        with pytest.raises(ConfigError):
            validate_policy(Diminishing("geometric"), 1.0, 1.0)  # ratio missing
        with pytest.raises(ConfigError):
            validate_policy(Diminishing("geometric", ratio=1.0), 1.0, 1.0)
        with pytest.raises(ConfigError):
            validate_policy(Diminishing("harmonic", alpha0=100.0), 1.0, 1.0)

    def test_unknown_policy_object(self):
        with pytest.raises(ConfigError):
            validate_policy(object(), 1.0, 1.0)


class TestStopRule:
    def test_defaults(self):
        rule = StopRule()
        assert rule.grad_tol == 1e-8
        assert rule.max_iter == 100_000

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"grad_tol": -1.0},
            {"max_iter": -1},
            {"f_tol": -0.1},
            {"grad_tol": 0.0, "max_iter": None},
        ],
    )
    def test_rejections(self, kwargs):
        with pytest.raises(ConfigError):
            StopRule(**kwargs)

    def test_zero_grad_tol_with_max_iter_ok(self):
        StopRule(grad_tol=0.0, max_iter=10)


class TestSgaConfig:
    def test_validations(self):
        with pytest.raises(ConfigError):
            SgaConfig(nu=0.0, L=1.0, policy=Constant(0.1))
        with pytest.raises(ConfigError):
            SgaConfig(nu=1.0, L=0.0, policy=Constant(0.1))
        with pytest.raises(ConfigError):
            SgaConfig(nu=1.0, L=1.0, policy=Constant(0.1), snapshot_every=0)


class TestRun:
    def diag_quad(self):
        return make_quadratic(np.diag([1.0, 10.0]), np.zeros(2))

    def test_quadratic_closed_form(self):
        # with nu=1 every coordinate contracts by (1 - alpha * lambda_i) per step
        obj = self.diag_quad()
        alpha = 0.05
        cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(alpha),
                        stop=StopRule(grad_tol=0.0, max_iter=20), snapshot_every=1)
        x0 = np.array([1.0, 1.0])
        trace = run_sga(obj, x0, cfg)
        assert trace.status == RunStatus.MAX_ITER
        assert trace.n_rows == 21
        for k in range(21):
            expected = np.array([(1.0 - alpha) ** k, (1.0 - alpha * 10.0) ** k])
            np.testing.assert_allclose(trace.snapshot_at(k), expected, rtol=1e-12)
            assert trace.f[k] == pytest.approx(obj.value(expected), rel=1e-12)
        np.testing.assert_allclose(trace.gap, trace.f, rtol=1e-15)  # f_star = 0
        np.testing.assert_allclose(
            trace.dist_opt, np.linalg.norm(trace.snapshots, axis=1), rtol=1e-12
        )

    def test_converged_status(self):
        obj = self.diag_quad()
        cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(0.1),
                        stop=StopRule(grad_tol=1e-6, max_iter=10_000))
        trace = run_sga(obj, np.array([1.0, 1.0]), cfg)
        assert trace.status == RunStatus.CONVERGED
        assert trace.grad_norm[-1] <= 1e-6
        assert np.all(trace.grad_norm[:-1] > 1e-6)

    def test_f_tol_stop(self):
        obj = self.diag_quad()
        cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(0.1),
                        stop=StopRule(grad_tol=0.0, max_iter=10_000, f_tol=1e-5))
        trace = run_sga(obj, np.array([1.0, 1.0]), cfg)
        assert trace.status == RunStatus.CONVERGED
        assert trace.gap[-1] <= 1e-5

    def test_f_tol_without_truth(self):
        obj = make_log_sum_exp(np.array([[1.0], [-1.0]]), np.zeros(2))
        cfg = SgaConfig(nu=1.0, L=1.0, policy=Constant(0.5),
                        stop=StopRule(f_tol=1e-3))
        with pytest.raises(ConfigError):
            run_sga(obj, np.zeros(1), cfg)

    def test_missing_truth_drops_columns(self):
        obj = make_log_sum_exp(np.array([[1.0], [-1.0]]), np.zeros(2))
        cfg = SgaConfig(nu=1.0, L=1.0, policy=Constant(0.5),
                        stop=StopRule(grad_tol=1e-6, max_iter=50))
        trace = run_sga(obj, np.array([0.3]), cfg)
        assert trace.gap is None
        assert trace.dist_opt is None

    def test_x0_shape_check(self):
        cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(0.1))
        with pytest.raises(ConfigError):
            run_sga(self.diag_quad(), np.zeros(3), cfg)

    def test_x0_outside_domain(self):
        obj, _ = builtin_problems()["poisson_unit"]
        cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(0.05))
        with pytest.raises(DomainViolationError):
            run_sga(obj, np.array([-2.0]), cfg)

    def test_mid_run_domain_violation_truncates(self):
        # a huge step shoots the poisson iterate across the log barrier
        obj, _ = builtin_problems()["poisson_unit"]
        cfg = SgaConfig(nu=1.0, L=0.01, policy=Constant(80.0),
                        stop=StopRule(grad_tol=0.0, max_iter=50))
        trace = run_sga(obj, np.array([0.05]), cfg)
        assert trace.status == RunStatus.DOMAIN_VIOLATION
        assert trace.n_rows >= 1
        assert np.all(np.isfinite(trace.f))

    def test_snapshot_cadence_and_forced_final(self):
        obj = self.diag_quad()
        cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(0.05),
                        stop=StopRule(grad_tol=0.0, max_iter=20), snapshot_every=7)
        trace = run_sga(obj, np.array([1.0, 1.0]), cfg)
        np.testing.assert_array_equal(trace.snapshot_ks, [0, 7, 14, 20])
        assert trace.has_every_iterate() is False
        np.testing.assert_array_equal(trace.x_final, trace.snapshots[-1])

    def test_every_iterate_snapshots(self):
        obj = self.diag_quad()
        cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(0.05),
                        stop=StopRule(grad_tol=0.0, max_iter=5), snapshot_every=1)
        trace = run_sga(obj, np.array([1.0, 1.0]), cfg)
        assert trace.has_every_iterate()
        assert trace.iterations == 5

    def test_meta(self):
        obj = self.diag_quad()
        cfg = SgaConfig(nu=1.0, L=10.0, policy=Constant(0.05),
                        stop=StopRule(grad_tol=0.0, max_iter=2))
        trace = run_sga(obj, np.array([1.0, 1.0]), cfg)
        assert trace.meta["solver"] == "sga"
        assert trace.meta["nu"] == 1.0
        assert trace.meta["L"] == 10.0

    def test_power_norm_converges(self):
        obj = make_power_norm(0.5, 2)
        L = obj.truth.holder_L
        cfg = SgaConfig(nu=0.5, L=L,
                        policy=Constant(default_alpha(0.5, L, StepMode.FUNCTION_OPTIMAL)),
                        stop=StopRule(grad_tol=1e-10, max_iter=10_000))
        trace = run_sga(obj, np.array([1.0, 1.0]), cfg)
        assert trace.status == RunStatus.CONVERGED
        assert trace.f[-1] < 1e-12


@given(
    x0=st.floats(min_value=-2.0, max_value=2.0),
    x1=st.floats(min_value=-2.0, max_value=2.0),
    alpha=st.floats(min_value=1e-3, max_value=1.125),
)
@settings(max_examples=60, deadline=None)
def test_sufficient_decrease_power_norm(x0, x1, alpha):
    """One admissible step drops f by at least (alpha - L/(1+nu) alpha^(1+nu)) ||g||^((1+nu)/nu)."""
    nu = 0.5
    obj = make_power_norm(nu, 2)
    L = obj.truth.holder_L
    x = np.array([x0, x1])
    f, g = obj.eval(x)
    gn = np.linalg.norm(g)
    if gn == 0.0:
        return
    x_next = sga_step(x, g, alpha, nu)
    f_next = obj.value(x_next)
    guaranteed = (alpha - (L / (1.0 + nu)) * alpha ** (1.0 + nu)) * gn ** ((1.0 + nu) / nu)
    assert f_next <= f - guaranteed + 1e-10 * (1.0 + abs(f))
