import math

import numpy as np
import pytest

from fsabr.params import ModelParams
from fsabr.smile import (
    SmilePoint,
    UnsupportedHurstError,
    bs_implied_vol,
    bs_price,
    eta_objective,
    implied_vol_fsabr,
    implied_vol_fsabr_atm,
    iv_from_log_price,
    log_call_asymptotic,
    minimize_eta,
    sabr_formula,
)

from oracles import dense_grid_argmin, two_stage_argmin

# frozen mpmath references
ETA_OBJ_FROZEN = 0.845423701274430587  # eta=.5 m=.3 rho=-.7 nu=y0=1 H=.25
SABR_K05_FROZEN = 0.190431183041580686  # F=1 K=e^.5 alpha=.13927 nu=.5778 rho=-.06867

BENCH_PARAMS = dict(alpha=0.13927, nu=0.5778, rho=-0.06867)


def bench_model(hurst: float) -> ModelParams:
    return ModelParams(x0=0.0, y0=0.13927, nu=0.5778, rho=-0.06867, hurst=hurst)


def cer_half_closed(eta):
    eta = np.asarray(eta, dtype=float)
    safe = np.where(np.abs(eta) < 1e-10, 1.0, eta)
    return np.where(np.abs(eta) < 1e-10, 1.0 + eta, np.expm1(2.0 * safe) / (2.0 * safe))


class TestEtaObjective:
    def test_eta_zero(self):
        p = ModelParams(0.0, 1.3, 0.9, -0.5, 0.3)
        from fsabr.density import psi

        m = 0.4
        assert eta_objective(0.0, m, p) == pytest.approx(
            m**2 / (1.3**2 * psi(0.0, -0.5, 0.3)), rel=1e-12
        )

    def test_zero_at_origin(self):
        p = ModelParams(0.0, 1.0, 1.0, -0.5, 0.3)
        assert eta_objective(0.0, 0.0, p) == 0.0

    def test_frozen_value(self):
        p = ModelParams(0.0, 1.0, 1.0, -0.7, 0.25)
        assert eta_objective(0.5, 0.3, p) == pytest.approx(ETA_OBJ_FROZEN, rel=1e-11)

    def test_nonnegative(self):
        p = ModelParams(0.0, 0.8, 1.4, 0.6, 0.45)
        etas = np.linspace(-4, 4, 33)
        assert np.all(eta_objective(etas, -0.7, p) >= 0.0)


class TestMinimizeEta:
    def test_trivial_at_zero_moneyness(self):
        p = ModelParams(0.0, 1.0, 1.0, -0.3, 0.4)
        assert minimize_eta(0.0, p) == (0.0, 0.0)

    def test_against_closed_form_scan(self):
        # rho = 0, H = 1/2: Phi(eta) = eta^2 + m^2 / c_er(eta) in closed form
        p = ModelParams(0.0, 1.0, 1.0, 0.0, 0.5)
        eta_star, _ = minimize_eta(1.0, p)
        oracle_eta, _ = dense_grid_argmin(
            lambda g: g**2 + 1.0 / cer_half_closed(g), -8.0, 8.0, 1e-4
        )
        assert eta_star == pytest.approx(oracle_eta, abs=1e-3)

    def test_agrees_with_dense_scan_sweep(self):
        rng = np.random.default_rng(23)
        cases = []
        for h in (0.15, 0.3, 0.45, 0.5):
            for _ in range(5):
                cases.append(
                    (
                        ModelParams(
                            x0=0.0,
                            y0=rng.uniform(0.3, 1.5),
                            nu=rng.uniform(0.4, 1.6),
                            rho=rng.uniform(-0.8, 0.8),
                            hurst=h,
                        ),
                        rng.uniform(-1.5, 1.5),
                    )
                )
        for p, m in cases:
            eta_star, val = minimize_eta(m, p)
            scan_eta, scan_val = two_stage_argmin(lambda g: eta_objective(g, m, p), -8.0, 8.0)
            assert eta_star == pytest.approx(scan_eta, abs=1e-3)
            assert val <= scan_val + 1e-10

    def test_unique_local_minimum_contour_slices(self):
        # fixed-x slices of the rate objective at rho=-0.7, t=0.5, H=0.25
        p = ModelParams(0.0, 1.0, 1.0, -0.7, 0.25)
        t = 0.5
        grid = np.arange(-8.0, 8.0, 1e-2)
        for dx in (-0.6, -0.3, 0.3, 0.6, 1.0):
            vals = eta_objective(grid, dx / t**0.25, p)
            interior = (vals[1:-1] < vals[:-2]) & (vals[1:-1] < vals[2:])
            assert int(np.sum(interior)) == 1


class TestLogCallAsymptotic:
    p = ModelParams(0.0, 1.0, 1.0, 0.0, 0.5)

    def test_vanishes_at_the_money(self):
        vals = [log_call_asymptotic(k, 0.25, self.p) for k in (0.2, 0.1, 0.05, 0.01)]
        assert all(v < 0 for v in vals)
        assert all(abs(a) > abs(b) for a, b in zip(vals, vals[1:]))
        assert abs(vals[-1]) < 0.01

    def test_derived_value_closed_form_oracle(self):
        # k-x0=0.2, t=0.25, H=1/2, rho=0: eta* from a closed-form scan
        m = 0.2
        _, phi = dense_grid_argmin(
            lambda g: g**2 + m**2 / cer_half_closed(g), -8.0, 8.0, 1e-5
        )
        expected = -0.5 * phi / 0.25
        assert log_call_asymptotic(0.2, 0.25, self.p) == pytest.approx(
            expected, rel=1e-6
        )

    def test_more_vol_of_vol_raises_price(self):
        vals = []
        for nu in (0.5, 1.0, 2.0):
            p = ModelParams(0.0, 1.0, nu, 0.0, 0.4)
            vals.append(log_call_asymptotic(0.3, 0.1, p))
        assert vals[0] <= vals[1] <= vals[2]

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            log_call_asymptotic(-0.1, 0.25, self.p)
        with pytest.raises(UnsupportedHurstError):
            log_call_asymptotic(0.2, 0.25, ModelParams(0.0, 1.0, 1.0, 0.0, 0.7))


class TestImpliedVolFsabr:
    def test_time_independent_at_half(self):
        p = bench_model(0.5)
        for k in (-0.4, 0.2, 0.7):
            s1 = implied_vol_fsabr(k, 0.5, p).implied_vol
            s2 = implied_vol_fsabr(k, 1.0, p).implied_vol
            assert abs(s1 - s2) < 1e-10

    def test_atm_numeric_limit_matches_sabr_alpha(self):
        # rho=0: the k -> x0 limit recovers the SABR ATM level alpha0 = y0
        p = ModelParams(0.0, 0.139, 1.0, 0.0, 0.5)
        sigmas = [implied_vol_fsabr(dk, 1.0, p).implied_vol for dk in (1e-2, 1e-3, 1e-4)]
        extrap = sigmas[2] + (sigmas[2] - sigmas[1]) / 9.0
        assert extrap == pytest.approx(0.139, rel=1e-3)
        assert implied_vol_fsabr_atm(1.0, p) == pytest.approx(0.139, rel=1e-3)

    def test_sabr_difference_band(self):
        # max |sigma_fsabr - sigma_sabr| over k in [-1, 1] is about one vol point
        p = bench_model(0.5)
        diffs = []
        for k in np.arange(-1.0, 1.0001, 0.05):
            if abs(k) < 1e-12:
                sf = implied_vol_fsabr_atm(1.0, p)
            else:
                sf = implied_vol_fsabr(k, 1.0, p).implied_vol
            ss = sabr_formula(k, 1.0, 1.0, **BENCH_PARAMS, beta=1.0)
            diffs.append(abs(sf - ss))
        assert 0.005 <= max(diffs) <= 0.02

    def test_small_t_steepening_in_hurst(self):
        sig = {
            h: implied_vol_fsabr(0.5, 0.01, bench_model(h)).implied_vol
            for h in (0.1, 0.3, 0.5)
        }
        assert sig[0.1] > sig[0.3] > sig[0.5]
        long_gap = abs(
            implied_vol_fsabr(0.5, 1.0, bench_model(0.1)).implied_vol
            - implied_vol_fsabr(0.5, 1.0, bench_model(0.5)).implied_vol
        )
        short_gap = abs(sig[0.1] - sig[0.5])
        assert long_gap < short_gap

    def test_smile_point_fields(self):
        p = bench_model(0.3)
        pt = implied_vol_fsabr(0.25, 0.5, p)
        assert isinstance(pt, SmilePoint)
        assert pt.logmoneyness == 0.25
        assert pt.expiry == 0.5
        assert pt.implied_vol > 0.0
        assert pt.objective_value >= 0.0

    def test_atm_rejected(self):
        with pytest.raises(ValueError):
            implied_vol_fsabr(0.0, 1.0, bench_model(0.5))

    def test_h_above_half_rejected(self):
        with pytest.raises(UnsupportedHurstError):
            implied_vol_fsabr(0.3, 1.0, bench_model(0.7))


class TestSabrFormula:
    def test_atm_limit(self):
        assert sabr_formula(0.0, 1.0, 1.0, 0.2, 0.6, -0.3, 1.0) == pytest.approx(0.2)
        # beta < 1: ATM level is alpha * F^(beta-1)
        assert sabr_formula(math.log(2.0), 1.0, 2.0, 0.2, 0.6, -0.3, 0.5) == pytest.approx(
            0.2 / math.sqrt(2.0)
        )

    def test_zeta_one_closed_form(self):
        # rho=0, beta=1, zeta=1: D = ln(1 + sqrt 2) = arcsinh(1)
        alpha, nu = 0.13927, 0.5778
        k = -alpha / nu  # log(F/K) = alpha/nu makes zeta = 1
        got = sabr_formula(k, 1.0, 1.0, alpha, nu, 0.0, 1.0)
        assert got == pytest.approx(nu * (alpha / nu) / math.asinh(1.0), rel=1e-12)

    def test_frozen_value(self):
        got = sabr_formula(0.5, 1.0, 1.0, **BENCH_PARAMS, beta=1.0)
        assert got == pytest.approx(SABR_K05_FROZEN, rel=1e-12)

    def test_continuity_near_atm(self):
        ref = sabr_formula(0.0, 1.0, 1.0, 0.2, 0.6, -0.3, 1.0)
        close = sabr_formula(1e-9, 1.0, 1.0, 0.2, 0.6, -0.3, 1.0)
        assert close == pytest.approx(ref, rel=1e-6)


class TestBlackScholes:
    def test_worthless_option(self):
        assert bs_price(1.0, 2.0, 1.0, 1e-14, True) == 0.0

    def test_atm_identity(self):
        from scipy.stats import norm

        got = bs_price(1.0, 1.0, 1.0, 0.2, True)
        assert got == pytest.approx(2.0 * norm.cdf(0.1) - 1.0, rel=1e-14)

    def test_put_call_parity(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            spot = rng.uniform(0.5, 2.0)
            strike = rng.uniform(0.5, 2.0)
            t = rng.uniform(0.05, 2.0)
            sigma = rng.uniform(0.05, 0.8)
            c = bs_price(spot, strike, t, sigma, True)
            pv = bs_price(spot, strike, t, sigma, False)
            assert c - pv == pytest.approx(spot - strike, abs=1e-12)

    @pytest.mark.parametrize("sigma", [0.05, 0.2, 1.0])
    def test_implied_vol_roundtrip(self, sigma):
        price = bs_price(1.0, 1.1, 0.5, sigma, True)
        assert bs_implied_vol(price, 1.0, 1.1, 0.5, True) == pytest.approx(
            sigma, abs=1e-8
        )

    def test_roundtrip_random_batch(self):
        # strikes within three sigma of the money keep the inversion
        # well conditioned
        rng = np.random.default_rng(101)
        for _ in range(100):
            sigma = rng.uniform(0.02, 1.5)
            t = rng.uniform(0.02, 3.0)
            k = rng.uniform(-3.0, 3.0) * sigma * math.sqrt(t)
            is_call = bool(rng.integers(2))
            price = bs_price(1.0, math.exp(k), t, sigma, is_call)
            got = bs_implied_vol(price, 1.0, math.exp(k), t, is_call)
            assert abs(got - sigma) < 1e-8

    def test_intrinsic_price_rejected(self):
        with pytest.raises(ValueError):
            bs_implied_vol(0.0, 1.0, 1.5, 1.0, True)
        with pytest.raises(ValueError):
            bs_implied_vol(0.5, 1.5, 1.0, 1.0, True)


class TestIvFromLogPrice:
    def test_route_coincidence(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            p = ModelParams(
                x0=0.0,
                y0=rng.uniform(0.4, 1.4),
                nu=rng.uniform(0.5, 1.5),
                rho=rng.uniform(-0.7, 0.7),
                hurst=rng.uniform(0.1, 0.5),
            )
            k = rng.uniform(0.05, 0.6)
            t = rng.uniform(0.05, 1.0)
            via_log = iv_from_log_price(k, 0.0, t, log_call_asymptotic(k, t, p))
            direct = implied_vol_fsabr(k, t, p).implied_vol
            assert abs(via_log - direct) < 1e-10

    def test_gaussian_toy(self):
        sigma0, k, t = 0.35, 0.2, 0.5
        log_call = -(k**2) / (2.0 * t * sigma0**2)
        assert iv_from_log_price(k, 0.0, t, log_call) == pytest.approx(sigma0, rel=1e-13)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            iv_from_log_price(0.2, 0.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            iv_from_log_price(0.0, 0.0, 1.0, -1.0)
