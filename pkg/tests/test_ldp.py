import math

import numpy as np
import pytest

from fsabr.fbm import kernel_integral
from fsabr.ldp import (
    b_from_y,
    discrete_kernel,
    energy,
    fsabr_smile_ldp,
    minimize_rate,
    optimal_x_given_b,
    y_from_b,
)
from fsabr.params import ModelParams, TimeGrid
from fsabr.smile import implied_vol_fsabr, sabr_formula

from oracles import kkt_constrained_quadratic

BENCH = ModelParams(x0=0.0, y0=0.13927, nu=0.5778, rho=-0.06867, hurst=0.5)


def sabr_ref(k: float) -> float:
    return sabr_formula(k, 1.0, 1.0, 0.13927, 0.5778, -0.06867, 1.0)


class TestDiscreteKernel:
    def test_half_weights_are_one(self):
        grid = TimeGrid.uniform(0.7, 24)
        K = discrete_kernel(grid, 0.5)
        tri = np.tril_indices(24)
        np.testing.assert_allclose(K.entries[tri], 1.0, atol=1e-14)
        assert np.all(K.entries[np.triu_indices(24, k=1)] == 0.0)

    @pytest.mark.parametrize("h", [0.1, 0.3, 0.75])
    def test_row_sums_match_kernel_integral(self, h):
        grid = TimeGrid.uniform(1.0, 32)
        K = discrete_kernel(grid, h)
        for i in (1, 7, 16, 32):
            row_sum = K.entries[i - 1, :i].sum() * grid.dt
            assert row_sum == pytest.approx(
                kernel_integral(grid.nodes[i], h), abs=1e-6
            )

    def test_constant_control_reproduces_integral(self, ):
        grid = TimeGrid.uniform(1.0, 64)
        h = 0.22
        K = discrete_kernel(grid, h)
        acc = (K.entries @ np.ones(64)) * grid.dt
        assert acc[-1] == pytest.approx(kernel_integral(1.0, h), rel=1e-9)


class TestIntegralEquation:
    p = ModelParams(0.0, 1.0, 1.3, -0.4, 0.25)

    def test_zero_control(self):
        grid = TimeGrid.uniform(1.0, 16)
        K = discrete_kernel(grid, self.p.hurst)
        y = y_from_b(np.zeros(16), K, self.p)
        np.testing.assert_array_equal(y, np.full(17, self.p.y0))

    def test_half_constant_control_exponential(self):
        grid = TimeGrid.uniform(1.0, 16)
        p = ModelParams(0.0, 0.8, 1.5, 0.0, 0.5)
        K = discrete_kernel(grid, 0.5)
        y = y_from_b(np.full(16, 0.7), K, p)
        expected = 0.8 * np.exp(1.5 * 0.7 * grid.nodes)
        np.testing.assert_allclose(y, expected, rtol=1e-12)

    def test_roundtrip_identity(self):
        grid = TimeGrid.uniform(1.0, 32)
        K = discrete_kernel(grid, self.p.hurst)
        rng = np.random.default_rng(3)
        y = np.concatenate([[self.p.y0], self.p.y0 * np.exp(rng.normal(0, 0.3, 32))])
        y_back = y_from_b(b_from_y(y, K, self.p), K, self.p)
        np.testing.assert_allclose(y_back, y, atol=1e-10)

    def test_half_inverse_is_log_derivative(self):
        grid = TimeGrid.uniform(1.0, 20)
        p = ModelParams(0.0, 1.0, 1.3, 0.0, 0.5)
        K = discrete_kernel(grid, 0.5)
        rng = np.random.default_rng(5)
        y = np.exp(np.concatenate([[0.0], np.cumsum(rng.normal(0, 0.1, 20))]))
        b = b_from_y(y, K, p)
        expected = np.diff(np.log(y)) / (p.nu * grid.dt)
        np.testing.assert_allclose(b, expected, atol=1e-12)

    def test_dense_quadrature_oracle(self):
        # y from a random control must match brute-force integration of the
        # Volterra equation with a 40x finer within-cell rule
        from fsabr.fbm import mg_kernel

        h, n = 0.3, 64
        grid = TimeGrid.uniform(1.0, n)
        p = ModelParams(0.0, 1.0, 0.9, 0.0, h)
        K = discrete_kernel(grid, h)
        rng = np.random.default_rng(8)
        b = rng.normal(0.0, 1.0, n)
        y = y_from_b(b, K, p)
        sub = 40
        for i in (3, 17, 40, 64):
            t_i = grid.nodes[i]
            total = 0.0
            for j in range(1, i + 1):
                lo, hi_ = grid.nodes[j - 1], grid.nodes[j]
                if j == i:
                    hi_ = t_i - (hi_ - lo) * 1e-9  # avoid the s = t pole
                u = np.linspace(lo, hi_, sub + 1)
                mids = 0.5 * (u[1:] + u[:-1])
                du = np.diff(u)
                vals = np.array([mg_kernel(t_i, s, h) for s in mids])
                total += b[j - 1] * float(np.dot(vals, du))
            assert math.log(y[i] / p.y0) / p.nu == pytest.approx(total, abs=5e-3)

    def test_singular_diagonal_raises(self):
        grid = TimeGrid.uniform(1.0, 8)
        K = discrete_kernel(grid, 0.5)
        K.entries[4, 4] = 0.0
        y = np.ones(9)
        with pytest.raises(np.linalg.LinAlgError):
            b_from_y(y, K, self.p)


class TestEnergy:
    def test_linear_path_constant_integrand(self):
        p = ModelParams(0.0, 1.2, 1.0, -0.3, 0.5)
        grid = TimeGrid.uniform(2.0, 32)
        delta = 0.5
        x = np.linspace(0.0, delta, 33)
        val = energy(x, np.zeros(32), np.full(33, 1.2), p, grid)
        assert val == pytest.approx(delta**2 / (2 * p.rho_bar**2 * 1.2**2 * 2.0), rel=1e-12)

    def test_rest_path_zero(self):
        p = ModelParams(0.0, 1.0, 1.0, 0.4, 0.3)
        grid = TimeGrid.uniform(1.0, 16)
        assert energy(np.zeros(17), np.zeros(16), np.ones(17), p, grid) == 0.0

    def test_half_matches_hyperbolic_form(self):
        # b = ydot/y turns the functional into the hyperbolic path energy
        p = ModelParams(0.0, 1.0, 1.0, -0.55, 0.5)
        n = 128
        grid = TimeGrid.uniform(0.7, n)
        rng = np.random.default_rng(12)
        for _ in range(10):
            x = np.concatenate([[0.0], np.cumsum(rng.normal(0, 0.05, n))])
            y = np.exp(np.concatenate([[0.0], np.cumsum(rng.normal(0, 0.04, n))]))
            b = (np.diff(y) / grid.dt) / y[:-1]
            got = energy(x, b, y, p, grid)
            dx = np.diff(x) / grid.dt
            dy = np.diff(y) / grid.dt
            hyp = 0.5 * grid.dt * np.sum(
                (dx**2 - 2 * p.rho * dx * dy + dy**2) / (p.rho_bar**2 * y[:-1] ** 2)
            )
            assert got == pytest.approx(hyp, abs=1e-8)


class TestOptimalX:
    p = ModelParams(0.0, 1.0, 1.0, -0.3, 0.5)
    grid = TimeGrid.uniform(1.0, 16)

    def test_unconstrained_target_hits_mu_zero(self):
        rng = np.random.default_rng(4)
        b = rng.normal(0, 1, 16)
        y = np.exp(np.concatenate([[0], np.cumsum(rng.normal(0, 0.1, 16))]))
        k_free = self.p.rho * self.grid.dt * float(np.dot(y[:-1], b))
        x = optimal_x_given_b(b, y, k_free, self.p, self.grid)
        price_resid = np.diff(x) / self.grid.dt / y[:-1] - self.p.rho * b
        np.testing.assert_allclose(price_resid, 0.0, atol=1e-12)

    def test_zero_control_linear_path(self):
        x = optimal_x_given_b(np.zeros(16), np.ones(17), 0.4, self.p, self.grid)
        np.testing.assert_allclose(np.diff(x), 0.4 / 16, rtol=1e-12)
        val = energy(x, np.zeros(16), np.ones(17), self.p, self.grid)
        assert val == pytest.approx(0.4**2 / (2 * self.p.rho_bar**2), rel=1e-12)

    def test_terminal_constraint(self):
        rng = np.random.default_rng(6)
        b = rng.normal(0, 1, 16)
        y = np.exp(np.concatenate([[0], np.cumsum(rng.normal(0, 0.2, 16))]))
        x = optimal_x_given_b(b, y, -0.7, self.p, self.grid)
        assert abs(x[-1] - (-0.7)) < 1e-10

    def test_against_kkt_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            b = rng.normal(0, 1, 16)
            y = np.exp(np.concatenate([[0], np.cumsum(rng.normal(0, 0.1, 16))]))
            k = rng.normal(0, 0.5)
            x = optimal_x_given_b(b, y, k, self.p, self.grid)
            dt = self.grid.dt
            rb2 = self.p.rho_bar**2
            y_left = y[:-1]
            h_diag = dt / (rb2 * y_left**2)
            lin = dt * self.p.rho * b / (rb2 * y_left)
            xd = kkt_constrained_quadratic(h_diag, lin, np.full(16, dt), k)
            x_oracle = np.concatenate([[0.0], np.cumsum(xd) * dt])
            np.testing.assert_allclose(x, x_oracle, atol=1e-9)


class TestMinimizeRate:
    def test_sabr_recovery_at_half(self):
        for k in (0.1, -0.1, 0.3, -0.3, 0.5, -0.5):
            sig = fsabr_smile_ldp(k, 1.0, BENCH, n=128)
            assert abs(sig - sabr_ref(k)) / sabr_ref(k) < 1e-2

    def test_atm_limit_matches_spot_vol(self):
        p = ModelParams(0.0, 0.139, 0.6, 0.0, 0.5)
        assert fsabr_smile_ldp(0.002, 1.0, p, n=64) == pytest.approx(0.139, rel=2e-3)

    def test_quadratic_energy_scaling(self):
        p = ModelParams(0.0, 0.5, 0.8, -0.5, 0.3)
        big = minimize_rate(0.02, 0.5, p, 64).energy
        small = minimize_rate(0.01, 0.5, p, 64).energy
        assert big / small == pytest.approx(4.0, rel=0.05)

    def test_descent_is_monotone(self):
        p = ModelParams(0.0, 0.5, 0.8, -0.5, 0.3)
        sol = minimize_rate(0.3, 1.0, p, 64)
        trace = np.array(sol.energy_trace)
        assert np.all(np.diff(trace) <= 1e-12)
        assert sol.converged

    def test_minimum_beats_random_perturbations(self):
        p = ModelParams(0.0, 0.7, 1.1, -0.4, 0.35)
        sol = minimize_rate(0.25, 0.5, p, 32)
        grid = sol.grid
        K = discrete_kernel(grid, p.hurst)
        rng = np.random.default_rng(15)
        for _ in range(100):
            b_alt = sol.b + rng.normal(0, 0.05, 32)
            y_alt = y_from_b(b_alt, K, p)
            x_alt = optimal_x_given_b(b_alt, y_alt, 0.25, p, grid)
            assert energy(x_alt, b_alt, y_alt, p, grid) >= sol.energy - 1e-12

    def test_solution_paths_consistent(self):
        p = ModelParams(0.0, 0.7, 1.1, 0.3, 0.25)
        sol = minimize_rate(0.2, 0.5, p, 32)
        K = discrete_kernel(sol.grid, p.hurst)
        np.testing.assert_allclose(sol.y, y_from_b(sol.b, K, p), rtol=1e-12)
        assert abs(sol.x[-1] - 0.2) < 1e-10
        assert sol.x[0] == p.x0
        assert sol.energy >= 0.0

    def test_refinement_stability(self):
        p = ModelParams(0.0, 0.5, 0.8, -0.5, 0.3)
        vals = [minimize_rate(0.2, 0.1, p, n).energy for n in (64, 128, 256)]
        assert abs(vals[2] - vals[1]) / vals[2] < 0.02

    def test_scaling_symmetry_hyperbolic(self):
        pa = ModelParams(0.0, 1.0, 1.0, 0.0, 0.5)
        pb = ModelParams(0.0, 2.0, 1.0, 0.0, 0.5)
        ia = minimize_rate(0.3, 1.0, pa, 64).energy
        ib = minimize_rate(0.6, 1.0, pb, 64).energy
        assert ia == pytest.approx(ib, abs=1e-6)

    def test_cross_method_same_order(self):
        p = ModelParams(0.0, 0.13927, 0.5778, -0.06867, 0.3)
        ldp_sig = fsabr_smile_ldp(0.2, 0.1, p, n=96)
        asym_sig = implied_vol_fsabr(0.2, 0.1, p).implied_vol
        assert 0.7 < ldp_sig / asym_sig < 1.3

    def test_input_validation(self):
        p = ModelParams(0.0, 1.0, 1.0, 0.0, 0.4)
        with pytest.raises(ValueError):
            minimize_rate(0.2, 1.0, p, 8)
        with pytest.raises(ValueError):
            minimize_rate(0.0, 1.0, p, 32)
        with pytest.raises(ValueError):
            fsabr_smile_ldp(0.0, 1.0, p, 32)
