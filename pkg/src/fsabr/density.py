"""Small-time joint density of (log price, volatility) and hyperbolic references.

Leading-order density of (X_t, Y_t) with eta = ln(y/y0):

    p(t; x, y) = 1/(2 pi) * 1/(y nu t^H) * exp(-eta^2 / (2 nu^2 t^{2H}))
                 * 1/(y0 sqrt(t psi(eta)))
                 * exp(-(1/(2 y0^2 psi(eta))) * A^2),

    A = (x - x0)/sqrt(t) + (y0^2 sqrt(t)/2) c_er(eta)
        - rho y0 t^{-H} c_rk(eta) eta / nu,

with the volatility-bridge coefficients

    c_er(eta) = int_0^1 exp(2 R(1,u) eta) du,
    c_rk(eta) = int_0^1 exp(R(1,u) eta) K_H(1,u) du,
    psi(eta)  = c_er(eta) - rho^2 c_rk(eta)^2.

The exponents follow the conditional-moment computation (conditioning the
volatility path on its endpoint gives the mean path R(1, s/t) eta / nu, so
e^{2 nu m_s} = e^{2 R eta}); the closed form c_er(eta) = (e^{2 eta} - 1)/(2 eta)
at H = 1/2 pins this normalisation down.

At H = 1/2, nu = 1, rho = 0 the model is Brownian motion on the hyperbolic
plane; the McKean heat kernel and the geodesic distance of the Poincare
upper half plane are provided for the comparison checks.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .fbm import QuadratureError, _node_table, _tail_left, _tail_right
from .params import ModelParams

__all__ = [
    "c_er",
    "c_rk",
    "coeff_pair",
    "psi",
    "approx_joint_density",
    "approx_log_density",
    "hyperbolic_hk_density",
    "mckean_kernel",
    "hyperbolic_distance",
    "approx_geodesic",
]

_CHUNK = 8192


class _CoeffTable:
    """Per-Hurst quadrature table for the eta -> coefficient maps.

    The integration nodes do not depend on eta, so each evaluation is a
    single exp plus a dot product; smiles and optimisers call these maps
    thousands of times.
    """

    def __init__(self, hurst: float):
        tbl = _node_table(hurst)
        h2 = 2.0 * hurst
        self.hurst = hurst
        # R(1, u) with the exact coordinate at each endpoint: u near 0,
        # d = 1 - u near 1
        self.r = 0.5 * (1.0 + tbl.u**h2 - tbl.d**h2)
        self.w = tbl.w
        self.wk = tbl.w * tbl.k1
        self.tau = tbl.tau
        self.tail_k_left = _tail_left(hurst, tbl.tau, power=1)
        self.tail_k_right = _tail_right(hurst, tbl.tau, power=1)

    def pair(self, eta_col: np.ndarray):
        """(c_er, c_rk) from one exp evaluation over the node table."""
        e = np.exp(eta_col * self.r)
        cer = (e * e) @ self.w + self.tau * (1.0 + np.exp(2.0 * eta_col[:, 0]))
        crk = e @ self.wk + self.tail_k_left + self.tail_k_right * np.exp(eta_col[:, 0])
        return cer, crk

    def exp_avg(self, eta_col: np.ndarray) -> np.ndarray:
        return self.pair(eta_col)[0]

    def exp_kernel_avg(self, eta_col: np.ndarray) -> np.ndarray:
        return self.pair(eta_col)[1]


@lru_cache(maxsize=64)
def _coeff_table(hurst: float) -> _CoeffTable:
    return _CoeffTable(hurst)


def _eval_table(fn_name: str, eta, hurst: float):
    fn = getattr(_coeff_table(float(hurst)), fn_name)
    flat = np.atleast_1d(np.asarray(eta, dtype=float)).ravel()
    out = np.empty_like(flat)
    for start in range(0, flat.size, _CHUNK):
        sl = slice(start, min(start + _CHUNK, flat.size))
        out[sl] = fn(flat[sl, None])
    if not np.all(np.isfinite(out)):
        raise QuadratureError(
            f"coefficient integral not finite (eta range {np.min(flat)}..{np.max(flat)})"
        )
    return float(out[0]) if np.ndim(eta) == 0 else out.reshape(np.shape(eta))


def coeff_pair(eta, hurst: float):
    """(c_er(eta), c_rk(eta)) sharing one pass over the quadrature table.

    The smile objective evaluates both on dense eta grids; fusing them
    halves the dominant exp cost.
    """
    flat = np.atleast_1d(np.asarray(eta, dtype=float)).ravel()
    cer = np.empty_like(flat)
    crk = np.empty_like(flat)
    table = _coeff_table(float(hurst))
    for start in range(0, flat.size, _CHUNK):
        sl = slice(start, min(start + _CHUNK, flat.size))
        cer[sl], crk[sl] = table.pair(flat[sl, None])
    if not (np.all(np.isfinite(cer)) and np.all(np.isfinite(crk))):
        raise QuadratureError(
            f"coefficient integral not finite (eta range {np.min(flat)}..{np.max(flat)})"
        )
    if np.ndim(eta) == 0:
        return float(cer[0]), float(crk[0])
    shape = np.shape(eta)
    return cer.reshape(shape), crk.reshape(shape)


def c_er(eta, hurst: float):
    """Average of exp(2 R(1,u) eta) over u in [0, 1].

    Equals (e^{2 eta} - 1)/(2 eta) at H = 1/2 and 1 at eta = 0.
    """
    return _eval_table("exp_avg", eta, hurst)


def c_rk(eta, hurst: float):
    """Kernel-weighted average int_0^1 exp(R(1,u) eta) K_H(1,u) du."""
    return _eval_table("exp_kernel_avg", eta, hurst)


def psi(eta, rho: float, hurst: float):
    """Residual variance factor c_er(eta) - rho^2 c_rk(eta)^2; positive for |rho| < 1.

    Positivity is Cauchy-Schwarz (c_rk^2 <= c_er * int K^2 = c_er); a
    non-positive value can only come from quadrature failure and raises.
    """
    if not abs(rho) < 1.0:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    val = c_er(eta, hurst) - rho * rho * np.square(c_rk(eta, hurst))
    if np.any(np.asarray(val) <= 0.0):
        raise QuadratureError("psi not positive; coefficient quadrature inconsistent")
    return val


def _check_density_domain(t, y):
    if np.any(np.asarray(t) <= 0.0):
        raise ValueError("t must be positive")
    if np.any(np.asarray(y) <= 0.0):
        raise ValueError("y must be positive")


def approx_joint_density(p: ModelParams, t, x, y):
    """Leading-order small-time joint density of (X_t, Y_t); strictly positive."""
    _check_density_domain(t, y)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = np.log(y / p.y0)
    cer = c_er(eta, p.hurst)
    ps = psi(eta, p.rho, p.hurst)
    crk = c_rk(eta, p.hurst)
    th = t**p.hurst
    a = (
        (x - p.x0) / np.sqrt(t)
        + 0.5 * p.y0**2 * np.sqrt(t) * cer
        - p.rho * p.y0 * crk * eta / (p.nu * th)
    )
    val = (
        (0.5 / math.pi)
        / (y * p.nu * th)
        * np.exp(-(eta**2) / (2.0 * p.nu**2 * th**2))
        / (p.y0 * np.sqrt(t * ps))
        * np.exp(-(a**2) / (2.0 * p.y0**2 * ps))
    )
    return float(val) if val.ndim == 0 else val


def approx_log_density(p: ModelParams, t, x, y):
    """Log-scale leading term of the density; drops the O(ln t) prefactors."""
    _check_density_domain(t, y)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = np.log(y / p.y0)
    cer = c_er(eta, p.hurst)
    ps = psi(eta, p.rho, p.hurst)
    crk = c_rk(eta, p.hurst)
    alpha = 0.5 - p.hurst
    b = (
        (x - p.x0) / t**alpha
        + 0.5 * p.y0**2 * t ** (p.hurst + 0.5) * cer
        - p.rho * p.y0 * crk * eta / p.nu
    )
    val = -0.5 / t ** (2.0 * p.hurst) * (eta**2 / p.nu**2 + b**2 / (p.y0**2 * ps))
    return float(val) if val.ndim == 0 else val


def _cer_half_closed(eta):
    """(e^{2 eta} - 1) / (2 eta), the H = 1/2 closed form, stable near 0."""
    eta = np.asarray(eta, dtype=float)
    small = np.abs(eta) < 1e-8
    safe = np.where(small, 1.0, eta)
    out = np.where(small, 1.0 + eta, np.expm1(2.0 * safe) / (2.0 * safe))
    return out


def hyperbolic_hk_density(t, x, y, x0: float, y0: float):
    """Small-time hyperbolic heat-kernel form of the joint density.

    Valid reduction of the leading-order density at H = 1/2, nu = 1,
    rho = 0; the two agree up to a 1 + O(t) factor.
    """
    _check_density_domain(t, y)
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = np.log(y / y0)
    cer = _cer_half_closed(eta)
    dist2 = eta**2 + (x - x0) ** 2 / (y0**2 * cer)
    val = (
        (0.5 / math.pi)
        / t
        * np.exp(-dist2 / (2.0 * t))
        * np.exp(-0.5 * (x - x0))
        / (y * y0 * np.sqrt(cer))
    )
    return float(val) if val.ndim == 0 else val


def mckean_kernel(t: float, d: float) -> float:
    """Heat kernel of the hyperbolic plane at geodesic distance d.

        p(t; d) = sqrt(2) e^{-t/8} / (2 pi t)^{3/2}
                  * int_d^inf xi e^{-xi^2/(2t)} / sqrt(cosh xi - cosh d) dxi

    The substitution xi = d + v^2 removes the inverse-square-root endpoint
    singularity; cosh xi - cosh d is evaluated as
    2 sinh((xi+d)/2) sinh((xi-d)/2) to avoid cancellation.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    if d < 0.0:
        raise ValueError("d must be >= 0")

    def integrand(v):
        xi = d + v * v
        denom_sq = 2.0 * math.sinh(0.5 * (xi + d)) * math.sinh(0.5 * v * v)
        if denom_sq <= 0.0:
            return 0.0
        return 2.0 * v * xi * math.exp(-(xi * xi - d * d) / (2.0 * t)) / math.sqrt(denom_sq)

    # truncate where the Gaussian factor is ~1e-23 of its peak
    xi_max = math.sqrt(d * d + 104.0 * t)
    v_max = math.sqrt(xi_max - d) if xi_max > d else 1e-8
    val, abserr = quad(integrand, 0.0, v_max, epsabs=1e-14, epsrel=1e-11, limit=300)
    if not math.isfinite(val) or (val > 0 and abserr > 1e-6 * val):
        raise QuadratureError(f"McKean kernel quadrature failed at (t={t}, d={d})")
    prefactor = math.sqrt(2.0) * math.exp(-t / 8.0) / (2.0 * math.pi * t) ** 1.5
    return prefactor * math.exp(-d * d / (2.0 * t)) * val


def hyperbolic_distance(x, y, x0: float, y0: float):
    """Geodesic distance in the Poincare upper half plane.

    cosh d = ((x - x0)^2 + y^2 + y0^2) / (2 y y0); zero iff (x,y) = (x0,y0).
    """
    if np.any(np.asarray(y) <= 0.0) or y0 <= 0.0:
        raise ValueError("y and y0 must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    arg = ((x - x0) ** 2 + y**2 + y0**2) / (2.0 * y * y0)
    val = np.arccosh(np.maximum(arg, 1.0))
    return float(val) if val.ndim == 0 else val


def approx_geodesic(x, y, x0: float, y0: float):
    """Small-distance approximation sqrt(eta^2 + 2 eta (x-x0)^2 / (y^2 - y0^2)).

    The factor 2 eta / (y^2 - y0^2) equals 2 eta / (y0^2 expm1(2 eta)),
    which extends continuously to 1/y0^2 at y = y0.
    """
    if np.any(np.asarray(y) <= 0.0) or y0 <= 0.0:
        raise ValueError("y and y0 must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = np.log(y / y0)
    small = np.abs(eta) < 1e-10
    safe = np.where(small, 1.0, eta)
    factor = np.where(small, 1.0, 2.0 * safe / np.expm1(2.0 * safe)) / y0**2
    val = np.sqrt(eta**2 + factor * (x - x0) ** 2)
    return float(val) if val.ndim == 0 else val
