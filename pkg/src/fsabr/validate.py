"""Self-check suites behind the CLI's validate command.

Each check returns {check, value, tolerance, pass}; `value` is the measured
quantity the tolerance applies to.  All checks are deterministic given the
seed, so a report is byte-reproducible.
"""

from __future__ import annotations

import math

import numpy as np

from . import density, fbm, laplace, ldp, smile
from .params import ModelParams, TimeGrid

__all__ = ["run_suites", "SUITE_NAMES"]

SUITE_NAMES = ("kernel", "density", "smile", "ldp", "laplace")

_BENCH = dict(y0=0.13927, nu=0.5778, rho=-0.06867)


def _check(name, value, tolerance, ok=None):
    value = float(value)
    if ok is None:
        ok = value <= tolerance
    return {"check": name, "value": value, "tolerance": float(tolerance), "pass": bool(ok)}


def _suite_kernel(seed: int):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100):
        t = rng.uniform(0.1, 5.0)
        s = rng.uniform(1e-6, 1.0) * t
        worst = max(worst, abs(fbm.mg_kernel(t, s, 0.5) - 1.0))
    checks = [_check("kernel_identity_at_h_half", worst, 1e-10)]
    for h in (0.1, 0.25, 0.5, 0.75, 0.9):
        checks.append(
            _check(f"kernel_sq_norm_h{h}", abs(fbm.kernel_sq_norm(h) - 1.0), 1e-6)
        )
    sym = 0.0
    for _ in range(50):
        t, s = rng.uniform(0.0, 3.0, size=2)
        h = rng.uniform(0.05, 0.95)
        sym = max(sym, abs(fbm.autocov(t, s, h) - fbm.autocov(s, t, h)))
    checks.append(_check("autocov_symmetry", sym, 0.0, ok=sym == 0.0))
    grid = TimeGrid.uniform(1.0, 24)
    for h in (0.2, 0.7):
        sigma = fbm.joint_covariance(grid, h)
        checks.append(
            _check(f"covariance_symmetry_h{h}", np.max(np.abs(sigma - sigma.T)), 1e-12)
        )
        try:
            np.linalg.cholesky(sigma)
            failed = 0.0
        except np.linalg.LinAlgError:
            failed = 1.0
        checks.append(_check(f"covariance_cholesky_h{h}", failed, 0.5))
    return checks


def _box_mass(p: ModelParams, t: float) -> float:
    sx = p.y0 * math.sqrt(t)
    xs = np.linspace(p.x0 - 10 * sx, p.x0 + 10 * sx, 161)
    etas = np.linspace(-10 * p.nu * t**p.hurst, 10 * p.nu * t**p.hurst, 161)
    ys = p.y0 * np.exp(etas)
    vals = density.approx_joint_density(p, t, xs[:, None], ys[None, :]) * ys[None, :]
    return float(np.trapezoid(np.trapezoid(vals, etas, axis=1), xs))


def _suite_density(seed: int):
    checks = [
        _check(
            "cer_closed_form_h_half",
            abs(density.c_er(1.0, 0.5) - (math.e**2 - 1.0) / 2.0),
            1e-8,
        )
    ]
    mass = _box_mass(ModelParams(0.0, 1.0, 1.0, -0.3, 0.3), 0.005)
    checks.append(_check("density_normalization", mass, 0.15, ok=0.85 < mass < 1.15))
    p_hyp = ModelParams(0.0, 1.0, 1.0, 0.0, 0.5)
    worst = 0.0
    for x in np.linspace(-0.1, 0.1, 5):
        for y in np.exp(np.linspace(-0.15, 0.15, 5)):
            ratio = density.approx_joint_density(p_hyp, 0.01, x, y)
            ratio /= density.hyperbolic_hk_density(0.01, x, y, 0.0, 1.0)
            worst = max(worst, abs(ratio - 1.0))
    checks.append(_check("hyperbolic_reduction_ratio", worst, 0.05))
    psi_min = min(
        float(np.min(density.psi(np.linspace(-3, 3, 25), rho, h)))
        for rho in (-0.9, -0.5, 0.0, 0.5, 0.9)
        for h in (0.1, 0.25, 0.5, 0.75, 0.9)
    )
    checks.append(_check("psi_positive", psi_min, 0.0, ok=psi_min > 0.0))
    return checks


def _suite_smile(seed: int):
    p = ModelParams(x0=0.0, hurst=0.5, **_BENCH)
    diffs = []
    for k in np.arange(-1.0, 1.0001, 0.1):
        if abs(k) < 1e-12:
            sf = smile.implied_vol_fsabr_atm(1.0, p)
        else:
            sf = smile.implied_vol_fsabr(k, 1.0, p).implied_vol
        ss = smile.sabr_formula(k, 1.0, 1.0, p.y0, p.nu, p.rho, 1.0)
        diffs.append(abs(sf - ss))
    max_diff = max(diffs)
    checks = [_check("sabr_comparison_max_diff", max_diff, 0.02, ok=0.005 <= max_diff <= 0.02)]
    tindep = max(
        abs(
            smile.implied_vol_fsabr(k, 0.5, p).implied_vol
            - smile.implied_vol_fsabr(k, 1.0, p).implied_vol
        )
        for k in (-0.4, 0.2, 0.7)
    )
    checks.append(_check("smile_t_independence_h_half", tindep, 1e-10))
    rng = np.random.default_rng(seed)
    route = 0.0
    for _ in range(5):
        pr = ModelParams(0.0, rng.uniform(0.4, 1.4), rng.uniform(0.5, 1.5),
                         rng.uniform(-0.7, 0.7), rng.uniform(0.1, 0.5))
        k = rng.uniform(0.05, 0.6)
        t = rng.uniform(0.05, 1.0)
        via_log = smile.iv_from_log_price(k, 0.0, t, smile.log_call_asymptotic(k, t, pr))
        route = max(route, abs(via_log - smile.implied_vol_fsabr(k, t, pr).implied_vol))
    checks.append(_check("smile_route_identity", route, 1e-10))
    sig = {
        h: smile.implied_vol_fsabr(0.5, 0.01, ModelParams(x0=0.0, hurst=h, **_BENCH)).implied_vol
        for h in (0.1, 0.3, 0.5)
    }
    gap = min(sig[0.1] - sig[0.3], sig[0.3] - sig[0.5])
    checks.append(_check("small_t_steepening_gap", gap, 0.0, ok=gap > 0.0))
    return checks


def _suite_ldp(seed: int):
    rng = np.random.default_rng(seed)
    p = ModelParams(0.0, 1.0, 1.3, -0.4, 0.25)
    grid = TimeGrid.uniform(1.0, 32)
    K = ldp.discrete_kernel(grid, p.hurst)
    worst = 0.0
    for _ in range(10):
        y = np.concatenate([[p.y0], p.y0 * np.exp(rng.normal(0.0, 0.3, 32))])
        y_back = ldp.y_from_b(ldp.b_from_y(y, K, p), K, p)
        worst = max(worst, float(np.max(np.abs(y_back - y))))
    checks = [_check("ldp_roundtrip", worst, 1e-10)]

    p_h = ModelParams(0.0, 1.0, 1.0, -0.55, 0.5)
    grid_h = TimeGrid.uniform(0.7, 128)
    worst = 0.0
    for _ in range(50):
        x = np.concatenate([[0.0], np.cumsum(rng.normal(0, 0.05, 128))])
        y = np.exp(np.concatenate([[0.0], np.cumsum(rng.normal(0, 0.04, 128))]))
        b = (np.diff(y) / grid_h.dt) / y[:-1]
        got = ldp.energy(x, b, y, p_h, grid_h)
        dx = np.diff(x) / grid_h.dt
        dy = np.diff(y) / grid_h.dt
        hyp = 0.5 * grid_h.dt * float(
            np.sum((dx**2 - 2 * p_h.rho * dx * dy + dy**2) / (p_h.rho_bar**2 * y[:-1] ** 2))
        )
        worst = max(worst, abs(got - hyp))
    checks.append(_check("ldp_h_half_energy_identity", worst, 1e-8))

    p_bench = ModelParams(x0=0.0, hurst=0.5, **_BENCH)
    worst = 0.0
    for k in (0.1, -0.1, 0.3, -0.3, 0.5, -0.5):
        ref = smile.sabr_formula(k, 1.0, 1.0, p_fig.y0, p_fig.nu, p_fig.rho, 1.0)
        worst = max(worst, abs(ldp.fsabr_smile_ldp(k, 1.0, p_bench, n=128) - ref) / ref)
    checks.append(_check("ldp_sabr_recovery", worst, 1e-2))
    return checks


def _suite_laplace(seed: int):
    theta = laplace.ScalarField(
        value=lambda x: x[0] + x[1] ** 2,
        grad=lambda x: np.array([1.0, 2.0 * x[1]]),
        hess=lambda x: np.array([[0.0, 0.0], [0.0, 2.0]]),
    )

    def _e(x):
        return math.exp(-x[0] ** 2 - x[1] ** 2)

    f = laplace.ScalarField(
        value=lambda x: x[0] * _e(x),
        grad=lambda x: np.array(
            [(1.0 - 2.0 * x[0] ** 2) * _e(x), -2.0 * x[1] * x[0] * _e(x)]
        ),
        hess=lambda x: np.array(
            [
                [
                    (4.0 * x[0] ** 3 - 6.0 * x[0]) * _e(x),
                    -2.0 * x[1] * (1.0 - 2.0 * x[0] ** 2) * _e(x),
                ],
                [
                    -2.0 * x[1] * (1.0 - 2.0 * x[0] ** 2) * _e(x),
                    x[0] * (4.0 * x[1] ** 2 - 2.0) * _e(x),
                ],
            ]
        ),
    )
    domain = laplace.HalfPlane(normal=np.array([1.0, 0.0]), offset=0.0)
    t = 1e-3
    lt = laplace.laplace_leading_term(theta, f, np.zeros(2), t)
    qd = laplace.adaptive_quad_2d(
        lambda x: math.exp(-theta(x) / t) * f.value(x), domain, t
    )
    checks = [
        _check("laplace_ratio_minus_one", abs(lt / qd - 1.0), 0.05),
        _check(
            "laplace_exact_value",
            abs(lt / (math.sqrt(math.pi) * t**2.5) - 1.0),
            1e-10,
        ),
    ]
    got = laplace.adaptive_quad_2d(
        lambda x: math.exp(-(x[0] ** 2 + x[1] ** 2) / 0.01), laplace.HalfPlane.full_plane(), 0.01
    )
    checks.append(_check("quad2d_gaussian", abs(got / (math.pi * 0.01) - 1.0), 1e-6))
    return checks


_SUITES = {
    "kernel": _suite_kernel,
    "density": _suite_density,
    "smile": _suite_smile,
    "ldp": _suite_ldp,
    "laplace": _suite_laplace,
}


def run_suites(which: str, seed: int = 0):
    """Run one named suite or 'all'; returns a list of check dicts."""
    if which == "all":
        names = SUITE_NAMES
    elif which in _SUITES:
        names = (which,)
    else:
        raise ValueError(f"unknown suite {which!r}; choose from {SUITE_NAMES + ('all',)}")
    checks = []
    for name in names:
        checks.extend(_SUITES[name](seed))
    return checks
