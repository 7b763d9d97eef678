import numpy as np
import pytest

from irpam import core
from irpam.core import (
    NOT_APPLICABLE,
    PASS,
    IterationRecord,
    PenaltyConfig,
    compute_weights,
    continuation_step,
    descent_diagnostic,
    feasibility_residual,
    original_objective,
    penalty_objective,
    power_weight_rule,
    run,
    stabilization_index,
    subgradient_gap,
    y_update,
)
from irpam.errors import NumericBreakdownError, UnsupportedStructureError
from irpam.oracles import GridSpec, brute_force_tiny, prox_oracle_1d

from conftest import scalar_problem


def default_cfg(**kw):
    base = dict(gamma0=10.0, gamma_bar=1000.0, a=1.1, delta=1e-6, max_iters=50)
    base.update(kw)
    return PenaltyConfig(**base)


class TestPenaltyConfig:
    def test_valid(self):
        default_cfg()

    @pytest.mark.parametrize("bad", [
        dict(gamma0=0.0),
        dict(gamma0=-1.0),
        dict(gamma_bar=5.0),          # below gamma0
        dict(a=0.9),
        dict(a=1.0),                  # a == 1 but gamma0 != gamma_bar
        dict(delta=0.0),
        dict(max_iters=0),
        dict(step_tol=-1.0),
    ])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            default_cfg(**bad)

    def test_no_continuation_accepted_at_cap(self):
        PenaltyConfig(gamma0=7.0, gamma_bar=7.0, a=1.0, delta=1e-6, max_iters=3)


class TestObjectives:
    def test_original_simple(self):
        p = scalar_problem()  # f = x^2/2, h = id, g = |.|
        assert original_objective(p, np.array([1.0]), np.array([1.0])) == pytest.approx(1.5)

    def test_original_zero_y(self):
        p = scalar_problem(lam=3.0, q=0.5, x_target=0.2)
        x = np.array([0.7])
        assert original_objective(p, x, np.zeros(1)) == pytest.approx(p.f_eval(x))

    def test_penalty_feasible_equals_original(self):
        p = scalar_problem(a=1.0, b_sign=1, c=1.0)
        x, y = np.array([0.4]), np.array([0.6])  # x + y = 1
        psi = original_objective(p, x, y)
        for gamma in (0.0, 1.0, 500.0):
            assert penalty_objective(p, x, y, gamma) == pytest.approx(psi)

    def test_penalty_simple_arithmetic(self):
        p = scalar_problem(a=1.0, b_sign=1, c=0.0)
        val = penalty_objective(p, np.array([1.0]), np.array([1.0]), 2.0)
        assert val == pytest.approx(5.5)

    def test_penalty_rejects_negative_gamma(self):
        p = scalar_problem()
        with pytest.raises(ValueError):
            penalty_objective(p, np.zeros(1), np.zeros(1), -1.0)

    def test_phi_dominates_psi(self, rng):
        p = scalar_problem(a=1.3, b_sign=-1, c=0.7, lam=0.5, q=0.5)
        for _ in range(20):
            x = rng.normal(size=1)
            y = rng.normal(size=1)
            phi = penalty_objective(p, x, y, 10.0)
            assert phi >= original_objective(p, x, y) - 1e-12


class TestFeasibilityResidual:
    def test_feasible_zero(self):
        p = scalar_problem(a=2.0, b_sign=1, c=1.0)
        assert feasibility_residual(p, np.array([0.25]), np.array([0.5])) == 0.0

    def test_unit_vectors(self):
        # A = B = identity on R^2, c = 0, x = y = e1 -> residual 2
        p = scalar_problem()
        p.apply_A = lambda x: np.asarray(x, dtype=float)
        p.apply_B = lambda y: np.asarray(y, dtype=float)
        p.c = np.zeros(2)
        e1 = np.array([1.0, 0.0])
        assert feasibility_residual(p, e1, e1) == pytest.approx(2.0)

    def test_matches_dense_oracle(self, rng):
        A = rng.normal(size=(5, 3))
        B = rng.normal(size=(5, 4))
        c = rng.normal(size=5)
        p = scalar_problem()
        p.apply_A = lambda x: A @ x
        p.apply_B = lambda y: B @ y
        p.c = c
        for _ in range(10):
            x = rng.normal(size=3)
            y = rng.normal(size=4)
            got = feasibility_residual(p, x, y)
            want = float(np.sqrt(np.sum((A.dot(x) + B.dot(y) - c) ** 2)))
            assert got == pytest.approx(want, abs=1e-12)

    def test_shape_mismatch_rejected(self):
        p = scalar_problem()
        p.c = np.zeros(3)
        with pytest.raises(ValueError):
            feasibility_residual(p, np.zeros(1), np.zeros(1))


class TestWeights:
    def test_identity_h_gives_unit_weights(self):
        p = scalar_problem(lam=1.0, q=1.0)
        w = compute_weights(p, np.array([-2.0, 0.0, 3.5]))
        np.testing.assert_array_equal(w, np.ones(3))

    def test_power_rule_value(self):
        p = scalar_problem(lam=1.0, q=0.5)
        w = compute_weights(p, np.array([4.0]))
        assert w[0] == pytest.approx(0.25, rel=1e-8)

    def test_smoothing_at_zero(self):
        p = scalar_problem(lam=1.0, q=0.5)
        w = compute_weights(p, np.zeros(1))
        assert w[0] == pytest.approx(0.5 * 1e4)

    def test_rule_validation(self):
        with pytest.raises(ValueError):
            power_weight_rule(1.0, 0.0)
        with pytest.raises(ValueError):
            power_weight_rule(1.0, 1.5)
        with pytest.raises(ValueError):
            power_weight_rule(-1.0, 0.5)


class TestYUpdate:
    def test_zero_weight_gives_quadratic_minimizer(self):
        p = scalar_problem(a=1.0, b_sign=1, c=0.3)
        y_prev = np.array([0.8])
        x_new = np.array([0.1])
        delta = 0.2
        got = y_update(p, y_prev, x_new, np.zeros(1), 2.0, delta)
        want = (delta * 0.8 + (0.3 - 0.1)) / (1 + delta)
        assert got[0] == pytest.approx(want)

    def test_soft_shrinkage_example(self):
        # drive 1.2, weight 0.5, gamma 1, delta 0 -> 0.7
        p = scalar_problem(a=1.0, b_sign=1, c=1.2)
        got = y_update(p, np.zeros(1), np.zeros(1), np.array([0.5]), 1.0, 0.0)
        assert got[0] == pytest.approx(0.7)

    def test_negative_identity_block(self):
        # B = -I: residual a*x - y - c; same shrinkage around s*(c - ax)
        p = scalar_problem(a=1.0, b_sign=-1, c=-1.2)
        got = y_update(p, np.zeros(1), np.zeros(1), np.array([0.5]), 1.0, 0.0)
        assert got[0] == pytest.approx(0.7)

    def test_beats_grid_oracle(self, rng):
        p = scalar_problem()
        for _ in range(25):
            w = float(rng.uniform(0.0, 2.0))
            gamma = float(rng.uniform(0.5, 50.0))
            delta = float(rng.uniform(0.0, 0.5))
            y_prev = float(rng.normal())
            c = float(rng.normal())
            ax = float(rng.normal())
            prob = scalar_problem(a=1.0, b_sign=1, c=c)
            x_new = np.array([ax])
            got = y_update(prob, np.array([y_prev]), x_new, np.array([w]),
                           gamma, delta)[0]

            def objective(t):
                return (w * abs(t) + 0.5 * gamma * (ax + t - c) ** 2
                        + 0.5 * delta * gamma * (t - y_prev) ** 2)

            _, oracle_val = prox_oracle_1d(objective, GridSpec(-6.0, 6.0, 300, 3))
            assert objective(got) <= oracle_val + 1e-8

    def test_requires_identity_structure(self):
        p = scalar_problem()
        p.b_sign = None
        with pytest.raises(UnsupportedStructureError):
            y_update(p, np.zeros(1), np.zeros(1), np.zeros(1), 1.0, 0.0)

    def test_fallback_y_solver_used(self):
        p = scalar_problem()
        p.b_sign = None
        p.y_solver = lambda y_prev, x_new, w, gamma, delta: np.array([42.0])
        got = y_update(p, np.zeros(1), np.zeros(1), np.zeros(1), 1.0, 0.0)
        assert got[0] == 42.0

    def test_validates_parameters(self):
        p = scalar_problem()
        with pytest.raises(ValueError):
            y_update(p, np.zeros(1), np.zeros(1), np.zeros(1), 0.0, 0.0)
        with pytest.raises(ValueError):
            y_update(p, np.zeros(1), np.zeros(1), np.zeros(1), 1.0, -0.1)

    def test_repeatable_at_q1(self):
        # with h = id the weights are constant, so identical inputs give
        # identical outputs (plain alternating minimization)
        p = scalar_problem(lam=1.0, q=1.0, c=0.9)
        args = (np.array([0.3]), np.array([0.2]), np.ones(1), 5.0, 0.1)
        first = y_update(p, *args)
        second = y_update(p, *args)
        np.testing.assert_array_equal(first, second)


class TestContinuation:
    def test_step(self):
        cfg = default_cfg()
        assert continuation_step(10.0, cfg) == pytest.approx(11.0)

    def test_fixed_point_at_cap(self):
        cfg = default_cfg()
        assert continuation_step(1000.0, cfg) == 1000.0

    def test_no_continuation_mode(self):
        cfg = PenaltyConfig(5.0, 5.0, 1.0, 1e-6, 10)
        assert continuation_step(5.0, cfg) == 5.0

    def test_stabilization_zero_when_capped(self):
        cfg = PenaltyConfig(5.0, 5.0, 1.0, 1e-6, 10)
        assert stabilization_index(cfg) == 0

    def test_stabilization_default_parameters(self):
        assert stabilization_index(default_cfg()) == 49

    def test_stabilization_exact_power(self):
        cfg = PenaltyConfig(1.0, 8.0, 2.0, 1e-6, 10)
        assert stabilization_index(cfg) == 3

    def test_stabilization_near_exact_power(self):
        cfg = PenaltyConfig(1.0, 1.21, 1.1, 1e-6, 10)
        assert stabilization_index(cfg) == 2

    def test_stabilization_rejects_flat_ratio(self):
        cfg = default_cfg()
        cfg.a = 1.0  # bypasses construction check on purpose
        with pytest.raises(ValueError):
            stabilization_index(cfg)

    def test_gamma_reaches_cap_at_index(self):
        cfg = default_cfg()
        K = stabilization_index(cfg)
        gamma = cfg.gamma0
        for _ in range(K):
            gamma = continuation_step(gamma, cfg)
        assert gamma == cfg.gamma_bar


class TestRun:
    def test_fixed_point_stays(self):
        p = scalar_problem(a=1.0, b_sign=1, c=0.0)
        cfg = default_cfg(max_iters=30)
        sol = run(p, cfg, np.zeros(1), np.zeros(1))
        assert len(sol.trace) == 30
        for rec in sol.trace:
            assert rec.dx == 0.0 and rec.dy == 0.0
        np.testing.assert_array_equal(sol.x_final, np.zeros(1))

    def test_trace_complete_and_finite(self):
        p = scalar_problem(a=1.0, b_sign=1, c=1.0, lam=0.3, q=0.5)
        cfg = default_cfg(max_iters=80)
        sol = run(p, cfg, np.zeros(1), np.zeros(1))
        assert len(sol.trace) == 80
        assert sol.stabilization_index == 49
        for k, rec in enumerate(sol.trace):
            assert rec.k == k
            for v in (rec.gamma, rec.phi, rec.psi, rec.feas, rec.dx, rec.dy):
                assert np.isfinite(v)
            assert rec.phi >= rec.psi - 1e-12

    def test_toy_matches_bruteforce_feasible_minimum(self):
        p = scalar_problem(a=1.0, b_sign=1, c=1.0, lam=1.0, q=1.0)
        cfg = default_cfg(max_iters=200)
        sol = run(p, cfg, np.zeros(1), np.zeros(1))
        psi = original_objective(p, sol.x_final, sol.y_final)
        box = GridSpec(-2.0, 2.0, 4000, 0)  # step 1e-3
        _, _, best = brute_force_tiny(p, [box], [box], gamma=None)
        assert psi <= best + 1e-4

    def test_early_stop_on_step_tol(self):
        p = scalar_problem(a=1.0, b_sign=1, c=1.0, lam=0.1, q=1.0)
        cfg = PenaltyConfig(5.0, 5.0, 1.0, 1e-6, 500, step_tol=1e-10)
        sol = run(p, cfg, np.zeros(1), np.zeros(1))
        assert len(sol.trace) < 500
        assert max(sol.trace[-1].dx, sol.trace[-1].dy) < 1e-10

    def test_numeric_breakdown_carries_index(self):
        p = scalar_problem()
        calls = {"n": 0}

        def bad_solver(y, gamma):
            calls["n"] += 1
            return np.array([np.nan]) if calls["n"] >= 3 else np.zeros(1)

        p.x_solver = bad_solver
        with pytest.raises(NumericBreakdownError) as err:
            run(p, default_cfg(), np.zeros(1), np.zeros(1))
        assert err.value.iteration == 2

    def test_observer_sees_every_iteration(self):
        p = scalar_problem(a=1.0, b_sign=1, c=1.0, lam=0.2, q=0.5)
        seen = []
        run(p, default_cfg(max_iters=12), np.zeros(1), np.zeros(1),
            observer=lambda k, x, y_prev, y, w, rec: seen.append(k))
        assert seen == list(range(12))


class TestDiagnostics:
    def test_zero_steps_pass(self):
        cfg = default_cfg()
        K = stabilization_index(cfg)
        prev = IterationRecord(k=K + 1, gamma=1000.0, phi=5.0, psi=5.0,
                               feas=0.0, dx=0.0, dy=0.0)
        nxt = IterationRecord(k=K + 2, gamma=1000.0, phi=5.0, psi=5.0,
                              feas=0.0, dx=0.0, dy=0.0)
        assert descent_diagnostic(prev, nxt, 0.5, cfg) == PASS

    def test_before_stabilization_not_applicable(self):
        cfg = default_cfg()
        prev = IterationRecord(k=3, gamma=13.3, phi=5.0, psi=5.0,
                               feas=0.0, dx=1.0, dy=1.0)
        nxt = IterationRecord(k=4, gamma=14.6, phi=9.0, psi=9.0,
                              feas=0.0, dx=1.0, dy=1.0)
        assert descent_diagnostic(prev, nxt, 0.5, cfg) == NOT_APPLICABLE

    def test_fail_when_descent_insufficient(self):
        cfg = default_cfg()
        K = stabilization_index(cfg)
        prev = IterationRecord(k=K + 1, gamma=1000.0, phi=5.0, psi=5.0,
                               feas=0.0, dx=0.0, dy=0.0)
        nxt = IterationRecord(k=K + 2, gamma=1000.0, phi=4.9, psi=4.9,
                              feas=0.0, dx=1.0, dy=0.0)
        assert descent_diagnostic(prev, nxt, 0.5, cfg) == "fail"

    def test_subgradient_gap_zero_for_identical(self):
        p = scalar_problem(lam=2.0, q=0.5)
        y = np.array([0.4, -0.8])
        w = compute_weights(p, y)
        assert subgradient_gap(p, y, y, w) == 0.0

    def test_subgradient_gap_zero_for_linear_h(self, rng):
        p = scalar_problem(lam=1.0, q=1.0)
        for _ in range(10):
            y0 = rng.normal(size=4)
            y1 = rng.normal(size=4)
            w = compute_weights(p, y0)
            assert abs(subgradient_gap(p, y0, y1, w)) < 1e-12

    def test_subgradient_gap_nonneg_with_exact_weights(self, rng):
        lam, q = 0.7, 0.5
        p = scalar_problem(lam=lam, q=q)
        for _ in range(50):
            y0 = rng.uniform(0.1, 2.0, size=6) * rng.choice([-1, 1], size=6)
            y1 = rng.normal(size=6)
            w_exact = lam * q * np.abs(y0) ** (q - 1.0)
            assert subgradient_gap(p, y0, y1, w_exact) >= -1e-12
