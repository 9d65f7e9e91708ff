"""Gauss hypergeometric function 2F1 on the non-positive real axis.

Only z <= 0 is supported: the Molchan-Golosov kernel evaluates
F(H - 1/2, 1/2 - H; H + 1/2; 1 - t/s) with 0 < s <= t, so the argument
ranges over (-inf, 0].  Three regimes are used:

* -0.5 < z <= 0: the defining power series, which converges geometrically.
* -9 <= z <= -0.5: the Pfaff transformation
      F(a, b; c; z) = (1 - z)^(-a) F(a, c - b; c; z / (z - 1))
  maps the argument into [1/3, 0.9) where the series is still fast.
* z < -9: the connection formula in 1/z (two series with argument in
  (-1/9, 0)), which handles arbitrarily large |z|.  When a - b is an
  integer the connection coefficients are singular and we fall back to a
  long Pfaff series.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gamma, rgamma

__all__ = ["hyp2f1", "Hyp2F1Error", "series_vec"]

_SERIES_RTOL = 1e-16
_SERIES_MAX_TERMS = 200_000
_PFAFF_FALLBACK_MAX_TERMS = 4_000_000
_DEEP_Z = -9.0
_CHUNK = 8192


class Hyp2F1Error(ArithmeticError):
    """Series failed to converge; carries the offending (a, b, c, z)."""

    def __init__(self, message: str, a: float, b: float, c: float, z: float):
        super().__init__(f"{message} for 2F1(a={a}, b={b}; c={c}; z={z})")
        self.abcz = (a, b, c, z)


def _is_nonpositive_int(x: float, tol: float = 1e-12) -> bool:
    return x <= tol and abs(x - round(x)) < tol


def _series(a: float, b: float, c: float, x: float, max_terms: int = _SERIES_MAX_TERMS,
            orig=None) -> float:
    """Sum 2F1(a, b; c; x) by its power series, |x| < 1.

    Terms are generated in chunks with a cumulative product so that very
    long sums (slowly converging Pfaff fallback) stay cheap.
    """
    if x == 0.0 or a == 0.0 or b == 0.0:
        return 1.0
    total = 1.0
    term = 1.0
    n0 = 0
    while n0 < max_terms:
        n = np.arange(n0, min(n0 + _CHUNK, max_terms), dtype=float)
        ratios = (a + n) * (b + n) / ((c + n) * (1.0 + n)) * x
        chunk = term * np.cumprod(ratios)
        total += float(np.sum(chunk))
        term = float(chunk[-1])
        n0 += len(n)
        # two consecutive tiny terms guard against alternating-series stalls
        if abs(chunk[-1]) <= _SERIES_RTOL * abs(total) and (
            len(chunk) < 2 or abs(chunk[-2]) <= _SERIES_RTOL * abs(total)
        ):
            return total
    args = orig if orig is not None else (a, b, c, x)
    raise Hyp2F1Error(f"series did not converge within {max_terms} terms", *args)


def _deep_connection(a: float, b: float, c: float, z: float) -> float:
    """Analytic continuation via 1/z for large negative arguments."""
    recip = 1.0 / z
    t1 = gamma(c) * gamma(b - a) * rgamma(b) * rgamma(c - a)
    if t1 != 0.0:
        t1 *= (-z) ** (-a) * _series(a, 1.0 - c + a, 1.0 - b + a, recip, orig=(a, b, c, z))
    t2 = gamma(c) * gamma(a - b) * rgamma(a) * rgamma(c - b)
    if t2 != 0.0:
        t2 *= (-z) ** (-b) * _series(b, 1.0 - c + b, 1.0 - a + b, recip, orig=(a, b, c, z))
    return t1 + t2


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for z <= 0.

    Relative accuracy is about 1e-12 over the kernel's parameter range.
    Raises ValueError outside the supported domain and Hyp2F1Error if the
    series fails to converge.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if _is_nonpositive_int(c):
        raise ValueError(f"c must not be a non-positive integer, got c={c}")
    if z > 0.0:
        raise ValueError(f"only z <= 0 is supported, got z={z}")
    if z == 0.0 or a == 0.0 or b == 0.0:
        return 1.0
    if z > -0.5:
        return _series(a, b, c, z)
    w = z / (z - 1.0)
    if z >= _DEEP_Z:
        return (1.0 - z) ** (-a) * _series(a, c - b, c, w, orig=(a, b, c, z))
    if abs((a - b) - round(a - b)) < 1e-9:
        # degenerate connection coefficients; the Pfaff series still
        # converges (w < 1), just slowly
        return (1.0 - z) ** (-a) * _series(
            a, c - b, c, w, max_terms=_PFAFF_FALLBACK_MAX_TERMS, orig=(a, b, c, z)
        )
    return _deep_connection(a, b, c, z)


def series_vec(a: float, b: float, c: float, w: np.ndarray,
               max_terms: int = 8192) -> np.ndarray:
    """Vectorised power series 2F1(a, b; c; w) over an array with |w| < 1.

    Internal helper for the kernel-profile evaluations; callers must keep
    max(|w|) well below 1 so the geometric tail is reached quickly.
    """
    w = np.asarray(w, dtype=float)
    total = np.ones_like(w)
    term = np.ones_like(w)
    if a == 0.0 or b == 0.0:
        return total
    for n in range(max_terms):
        term = term * ((a + n) * (b + n) / ((c + n) * (1.0 + n))) * w
        total += term
        if np.max(np.abs(term)) <= _SERIES_RTOL * max(1.0, float(np.max(np.abs(total)))):
            return total
    raise Hyp2F1Error(
        f"vectorised series did not converge within {max_terms} terms",
        a, b, c, float(np.max(w)),
    )
