"""Box-constrained ascent tests on analytic objectives with known optima."""

from __future__ import annotations

import numpy as np
import pytest

from fairdice.optimize import (
    OptimizerConfig,
    default_initial_guess,
    finite_difference_gradient,
    kkt_residual,
    optimize,
    projected_gradient_norm,
)

N = 8


def quadratic(x: np.ndarray) -> float:
    return -float(np.sum((x - 0.5) ** 2))


def quadratic_grad(x: np.ndarray) -> np.ndarray:
    return -2.0 * (x - 0.5)


def quadratic_batch(pts: np.ndarray) -> np.ndarray:
    return -np.sum((pts - 0.5) ** 2, axis=1)


UNIT_BOX = (np.zeros(N), np.ones(N))


class TestOptimize:
    def test_interior_quadratic_optimum(self):
        res = optimize(quadratic, UNIT_BOX, np.full(N, 0.1))
        np.testing.assert_allclose(res.x, 0.5, atol=1e-6)
        assert res.welfare == pytest.approx(0.0, abs=1e-10)
        assert res.converged

    def test_active_bound_optimum(self):
        lo = np.full(N, 0.6)
        hi = np.ones(N)
        res = optimize(quadratic, (lo, hi), np.full(N, 0.9))
        np.testing.assert_allclose(res.x, 0.6, atol=1e-6)

    def test_history_is_monotone_ascent(self):
        res = optimize(quadratic, UNIT_BOX, np.full(N, 0.05))
        hist = np.asarray(res.history)
        assert len(hist) >= 2
        assert np.all(np.diff(hist) >= -1e-12)
        assert hist[-1] > hist[0]

    def test_kkt_residual_small_with_exact_gradient(self):
        res = optimize(quadratic, UNIT_BOX, np.full(N, 0.1), gradient=quadratic_grad)
        assert res.kkt_residual <= 1e-6
        assert res.projected_gradient_norm <= 1e-6

    def test_kkt_residual_small_at_active_bounds(self):
        lo = np.full(N, 0.6)
        res = optimize(quadratic, (lo, np.ones(N)), np.full(N, 0.8), gradient=quadratic_grad)
        assert res.kkt_residual <= 1e-6

    def test_fixed_coordinates_stay_pinned(self):
        lo = np.zeros(N)
        hi = np.ones(N)
        lo[2] = hi[2] = 0.15
        lo[7] = hi[7] = 0.9
        res = optimize(quadratic, (lo, hi), np.clip(np.full(N, 0.1), lo, hi))
        assert res.x[2] == 0.15
        assert res.x[7] == 0.9
        free = np.delete(np.arange(N), [2, 7])
        np.testing.assert_allclose(res.x[free], 0.5, atol=1e-6)

    def test_deterministic_given_config(self):
        cfg = OptimizerConfig(restarts=2, seed=11)
        a = optimize(quadratic, UNIT_BOX, np.full(N, 0.3), cfg)
        b = optimize(quadratic, UNIT_BOX, np.full(N, 0.3), cfg)
        assert np.array_equal(a.x, b.x)
        assert a.welfare == b.welfare
        assert a.history == b.history

    def test_restarts_never_hurt(self):
        base = optimize(quadratic, UNIT_BOX, np.full(N, 0.3))
        restarted = optimize(
            quadratic, UNIT_BOX, np.full(N, 0.3), OptimizerConfig(restarts=3, seed=5)
        )
        assert restarted.welfare >= base.welfare - 1e-12

    def test_never_worse_than_initial_guess(self):
        # one iteration is not enough to converge, but the result must not
        # regress below the start
        x0 = np.full(N, 0.45)
        res = optimize(quadratic, UNIT_BOX, x0, OptimizerConfig(max_iterations=1))
        assert res.welfare >= quadratic(x0)

    def test_batch_objective_path_matches_scalar(self):
        scalar = optimize(quadratic, UNIT_BOX, np.full(N, 0.2))
        batched = optimize(
            quadratic, UNIT_BOX, np.full(N, 0.2), batch_objective=quadratic_batch
        )
        np.testing.assert_allclose(batched.x, scalar.x, atol=1e-8)

    def test_infeasible_box_rejected(self):
        with pytest.raises(ValueError, match="bounds"):
            optimize(quadratic, (np.ones(N), np.zeros(N)), np.full(N, 0.5))

    def test_nonquadratic_objective(self):
        # maximum of sum sin(x) over [0, 2] is at pi/2
        res = optimize(
            lambda x: float(np.sum(np.sin(x))),
            (np.zeros(4), np.full(4, 2.0)),
            np.full(4, 0.3),
            gradient=lambda x: np.cos(x),
        )
        np.testing.assert_allclose(res.x, np.pi / 2.0, atol=1e-6)


class TestGradients:
    def test_matches_analytic_gradient(self):
        x = np.array([0.2, 0.8, 0.41])
        lo, hi = np.zeros(3), np.ones(3)
        g = finite_difference_gradient(quadratic, x, lo, hi, 1e-7)
        np.testing.assert_allclose(g, quadratic_grad(x), atol=1e-5)

    def test_steps_back_off_upper_bound(self):
        x = np.array([1.0, 0.5])
        lo, hi = np.zeros(2), np.ones(2)
        g = finite_difference_gradient(quadratic, x, lo, hi, 1e-7)
        # gradient at the bound is computed from a backward step and still
        # approximates -2*(x-0.5)
        np.testing.assert_allclose(g, [-1.0, 0.0], atol=1e-5)

    def test_fixed_coordinates_get_zero(self):
        x = np.array([0.2, 0.7, 0.4])
        lo = np.array([0.0, 0.7, 0.0])
        hi = np.array([1.0, 0.7, 1.0])
        g = finite_difference_gradient(quadratic, x, lo, hi, 1e-7)
        assert g[1] == 0.0
        assert g[0] != 0.0

    def test_batch_equals_loop(self):
        x = np.array([0.2, 0.8, 0.41, 0.05])
        lo, hi = np.zeros(4), np.ones(4)
        loop = finite_difference_gradient(quadratic, x, lo, hi, 1e-6)
        batch = finite_difference_gradient(
            quadratic, x, lo, hi, 1e-6, batch_objective=quadratic_batch
        )
        np.testing.assert_allclose(batch, loop, rtol=1e-12)


class TestFirstOrderMeasures:
    LO = np.zeros(3)
    HI = np.ones(3)

    def test_interior_uses_absolute_gradient(self):
        x = np.array([0.5, 0.5, 0.5])
        g = np.array([0.3, -0.2, 0.0])
        assert kkt_residual(x, g, self.LO, self.HI) == pytest.approx(0.3)

    def test_correctly_signed_bound_gradients_vanish(self):
        # at a lower bound a downhill pull is fine; at an upper bound an
        # uphill push is fine
        x = np.array([0.0, 1.0, 0.5])
        g = np.array([-5.0, 7.0, 0.0])
        assert kkt_residual(x, g, self.LO, self.HI) == 0.0

    def test_wrongly_signed_bound_gradients_count(self):
        x = np.array([0.0, 1.0, 0.5])
        g = np.array([2.0, -3.0, 0.0])
        assert kkt_residual(x, g, self.LO, self.HI) == pytest.approx(3.0)

    def test_fixed_coordinate_ignored(self):
        lo = np.array([0.0, 0.4, 0.0])
        hi = np.array([1.0, 0.4, 1.0])
        x = np.array([0.5, 0.4, 0.5])
        g = np.array([0.0, 100.0, 0.0])
        assert kkt_residual(x, g, lo, hi) == 0.0

    def test_projected_norm_clips_at_bounds(self):
        x = np.array([0.95, 0.5, 0.0])
        g = np.array([0.2, 0.1, -0.4])
        # moving along g is truncated to 0.05 in the first coordinate and to
        # zero in the third
        assert projected_gradient_norm(x, g, self.LO, self.HI) == pytest.approx(0.1)


class TestInitialGuess:
    def test_respects_bounds_and_ramp(self):
        mu_upper = np.minimum(0.15 * np.arange(1, 161), 1.2)
        mu_upper[0] = 0.15
        mu, s = default_initial_guess(mu_upper, terminal_savings=0.258, pinned_tail=10)
        assert np.all(mu <= mu_upper + 1e-15)
        assert np.all(mu >= 0.0)
        assert mu[0] == 0.15
        assert mu[-1] == pytest.approx(0.9 * 1.2)
        np.testing.assert_allclose(s[:-10], 0.25)
        np.testing.assert_allclose(s[-10:], 0.258)

    def test_deterministic(self):
        mu_upper = np.minimum(0.15 * np.arange(1, 161), 1.2)
        a = default_initial_guess(mu_upper, terminal_savings=0.3)
        b = default_initial_guess(mu_upper, terminal_savings=0.3)
        assert np.array_equal(a[0], b[0])
        assert np.array_equal(a[1], b[1])
