"""Small-time implied volatility: rate objective, asymptotic formulas, SABR
reference and Black-Scholes utilities.

For an out-of-money call (k > x0) and H <= 1/2 the log price satisfies

    ln C(k, t) ~ -(1 / (2 t^{2H})) * Phi(eta*),

    Phi(eta) = eta^2 / nu^2
               + (m - rho y0 c_rk(eta) eta / nu)^2 / (y0^2 psi(eta)),

with m = (k - x0) / t^{1/2 - H} and eta* the global minimiser of Phi.  The
leading-order conversion sigma = |k - x0| / sqrt(2 t |ln C|) then gives

    sigma^2(k, t) = (k - x0)^2 / t^{2 alpha} / Phi(eta*),   alpha = 1/2 - H,

which is evaluated for puts (k < x0) through the same objective with
negative m.  For H > 1/2 the boundary-minimum hypothesis of the Laplace
formula fails and these routines refuse to run; the variational route in
``fsabr.ldp`` covers that regime.

Rates and dividends are zero throughout, so Black-Scholes prices are
undiscounted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .density import coeff_pair
from .params import ModelParams

__all__ = [
    "SmilePoint",
    "UnsupportedHurstError",
    "eta_objective",
    "minimize_eta",
    "log_call_asymptotic",
    "implied_vol_fsabr",
    "implied_vol_fsabr_atm",
    "sabr_formula",
    "bs_price",
    "bs_implied_vol",
    "iv_from_log_price",
]

_SCAN_POINTS = 4097
_ETA_TOL = 1e-8
_ETA_LIMIT = 64.0
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class UnsupportedHurstError(ValueError):
    """The one-dimensional implied-vol asymptotics require H <= 1/2."""


@dataclass(frozen=True)
class SmilePoint:
    """One point of the asymptotic smile with its optimiser diagnostics."""

    logmoneyness: float
    expiry: float
    implied_vol: float
    eta_star: float
    objective_value: float


def eta_objective(eta, m_scaled: float, p: ModelParams):
    """Rate objective Phi(eta) for scaled moneyness m = (k - x0)/t^(1/2-H).

    Nonnegative; zero exactly at (eta, m) = (0, 0).  Vectorised over eta.
    """
    eta_arr = np.asarray(eta, dtype=float)
    cer, crk = coeff_pair(eta_arr, p.hurst)
    ps = cer - p.rho**2 * np.square(crk)
    resid = m_scaled - p.rho * p.y0 * crk * eta_arr / p.nu
    val = eta_arr**2 / p.nu**2 + resid**2 / (p.y0**2 * ps)
    return float(val) if np.ndim(eta) == 0 else val


def minimize_eta(m_scaled: float, p: ModelParams):
    """Global minimiser of the rate objective.

    Scans [-8, 8], doubling the bracket until the boundary values exceed
    the interior minimum, then refines by golden section to |d eta| < 1e-8.
    Grid ties are broken towards the smallest |eta|.
    """
    if m_scaled == 0.0:
        return 0.0, 0.0
    lo, hi = -8.0, 8.0
    while True:
        grid = np.linspace(lo, hi, _SCAN_POINTS)
        vals = eta_objective(grid, m_scaled, p)
        vmin = float(np.min(vals))
        ties = np.flatnonzero(vals <= vmin + 1e-12 * (1.0 + abs(vmin)))
        idx = int(ties[np.argmin(np.abs(grid[ties]))])
        interior = 0 < idx < len(grid) - 1
        if interior and vals[0] > vmin and vals[-1] > vmin:
            break
        lo, hi = 2.0 * lo, 2.0 * hi
        if hi > _ETA_LIMIT:
            raise RuntimeError(
                "eta bracket expansion exceeded |eta| = 64; objective looks flat or unbounded"
            )
    a, b = grid[idx - 1], grid[idx + 1]
    # golden-section refinement
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = eta_objective(c, m_scaled, p)
    fd = eta_objective(d, m_scaled, p)
    while b - a > _ETA_TOL:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = eta_objective(c, m_scaled, p)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = eta_objective(d, m_scaled, p)
    eta_star = 0.5 * (a + b)
    return float(eta_star), float(eta_objective(eta_star, m_scaled, p))


def _require_h_le_half(p: ModelParams):
    if p.hurst > 0.5:
        raise UnsupportedHurstError(
            f"hurst={p.hurst} > 1/2: the boundary-minimum asymptotics do not "
            "apply; use the variational (ldp) route instead"
        )


def log_call_asymptotic(k: float, t: float, p: ModelParams) -> float:
    """Leading-order ln C(k, t) for an out-of-money call, H <= 1/2."""
    _require_h_le_half(p)
    if t <= 0.0:
        raise ValueError("t must be positive")
    if k <= p.x0:
        raise ValueError(f"out-of-money call requires k > x0, got k={k}, x0={p.x0}")
    m_scaled = (k - p.x0) / t ** (0.5 - p.hurst)
    _, value = minimize_eta(m_scaled, p)
    return -0.5 * value / t ** (2.0 * p.hurst)


def implied_vol_fsabr(k: float, t: float, p: ModelParams) -> SmilePoint:
    """Asymptotic implied volatility at log strike k, H <= 1/2, k != x0.

    Out-of-money puts (k < x0) run through the same objective with negative
    scaled moneyness.  The strike k = x0 is a 0/0 limit and is refused; see
    implied_vol_fsabr_atm for the numeric limit.
    """
    _require_h_le_half(p)
    if t <= 0.0:
        raise ValueError("t must be positive")
    if k == p.x0:
        raise ValueError("k = x0 is not covered by the formula (0/0 limit)")
    alpha = 0.5 - p.hurst
    m_scaled = (k - p.x0) / t**alpha
    eta_star, value = minimize_eta(m_scaled, p)
    sigma = abs(m_scaled) / math.sqrt(value)
    return SmilePoint(
        logmoneyness=k - p.x0,
        expiry=t,
        implied_vol=sigma,
        eta_star=eta_star,
        objective_value=value,
    )


def implied_vol_fsabr_atm(t: float, p: ModelParams) -> float:
    """Numeric at-the-money limit of the asymptotic implied volatility.

    Richardson extrapolation of sigma(m) from m = 1e-3 and 5e-4 on both
    sides of the money.
    """
    _require_h_le_half(p)
    alpha = 0.5 - p.hurst
    out = []
    for sign in (1.0, -1.0):
        sig = []
        for m in (1e-3, 5e-4):
            k = p.x0 + sign * m * t**alpha
            sig.append(implied_vol_fsabr(k, t, p).implied_vol)
        out.append(2.0 * sig[1] - sig[0])
    return 0.5 * (out[0] + out[1])


def sabr_formula(
    k: float,
    t: float,
    F: float,
    alpha: float,
    nu: float,
    rho: float,
    beta: float = 1.0,
) -> float:
    """Classical SABR implied volatility at zeroth order in time to expiry.

    k is the log strike (K = e^k), F the forward.  The O(t) correction is
    deliberately omitted, so t does not enter.
    """
    if F <= 0.0 or alpha <= 0.0 or nu <= 0.0:
        raise ValueError("F, alpha, nu must be positive")
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if not abs(rho) < 1.0:
        raise ValueError("|rho| must be < 1")
    strike = math.exp(k)
    log_fk = math.log(F / strike)
    if abs(log_fk) < 1e-12:
        return alpha * F ** (beta - 1.0)
    if beta == 1.0:
        zeta = nu / alpha * log_fk
    else:
        zeta = nu / alpha * (F ** (1.0 - beta) - strike ** (1.0 - beta)) / (1.0 - beta)
    # D(zeta) = log((sqrt(1-2 rho zeta + zeta^2) + zeta - rho)/(1 - rho)),
    # written via log1p to stay accurate for small zeta
    root = math.sqrt(1.0 - 2.0 * rho * zeta + zeta * zeta)
    d_zeta = math.log1p((zeta * (zeta - 2.0 * rho) / (1.0 + root) + zeta) / (1.0 - rho))
    return nu * log_fk / d_zeta


def bs_price(spot: float, strike: float, t: float, sigma: float, is_call: bool) -> float:
    """Undiscounted Black-Scholes price (zero rates and dividends)."""
    if spot <= 0.0 or strike <= 0.0 or t <= 0.0 or sigma < 0.0:
        raise ValueError("spot, strike, t must be positive and sigma >= 0")
    sq = sigma * math.sqrt(t)
    if sq < 1e-12:
        return max(spot - strike, 0.0) if is_call else max(strike - spot, 0.0)
    d1 = (math.log(spot / strike) + 0.5 * sq * sq) / sq
    d2 = d1 - sq
    if is_call:
        return spot * norm.cdf(d1) - strike * norm.cdf(d2)
    return strike * norm.cdf(-d2) - spot * norm.cdf(-d1)


def bs_implied_vol(price: float, spot: float, strike: float, t: float, is_call: bool) -> float:
    """Invert the Black-Scholes price, bracketed Newton with bisection fallback.

    The price must lie strictly inside the no-arbitrage band (intrinsic
    value excluded); the result reproduces the price to about 1e-10.
    """
    if spot <= 0.0 or strike <= 0.0 or t <= 0.0:
        raise ValueError("spot, strike, t must be positive")
    intrinsic = max(spot - strike, 0.0) if is_call else max(strike - spot, 0.0)
    upper = spot if is_call else strike
    if not intrinsic < price < upper:
        raise ValueError(
            f"price {price} outside the open no-arbitrage band ({intrinsic}, {upper})"
        )
    lo, hi = 0.0, 1.0
    while bs_price(spot, strike, t, hi, is_call) < price:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("implied volatility bracket exceeded 1e6")
    # Brenner-Subrahmanyam starting point, clipped into the bracket
    sigma = min(max(math.sqrt(2.0 * math.pi / t) * price / spot, 1e-4), hi)
    sqrt_t = math.sqrt(t)
    for _ in range(200):
        val = bs_price(spot, strike, t, sigma, is_call)
        diff = val - price
        if abs(diff) < 1e-12 * max(1.0, spot):
            return sigma
        if diff > 0.0:
            hi = sigma
        else:
            lo = sigma
        sq = sigma * sqrt_t
        d1 = (math.log(spot / strike) + 0.5 * sq * sq) / sq
        vega = spot * norm.pdf(d1) * sqrt_t
        if vega > 1e-14:
            step = sigma - diff / vega
            sigma = step if lo < step < hi else 0.5 * (lo + hi)
        else:
            sigma = 0.5 * (lo + hi)
        if hi - lo < 1e-15:
            return sigma
    return sigma


def iv_from_log_price(k: float, x0: float, t: float, log_call: float) -> float:
    """Leading-order conversion sigma = |k - x0| / sqrt(2 t |ln C(k, t)|).

    The higher-order correction term is omitted.
    """
    if log_call >= 0.0:
        raise ValueError(f"log call price must be negative, got {log_call}")
    if k == x0:
        raise ValueError("k = x0 is a 0/0 limit")
    if t <= 0.0:
        raise ValueError("t must be positive")
    return abs(k - x0) / math.sqrt(2.0 * t * abs(log_call))
