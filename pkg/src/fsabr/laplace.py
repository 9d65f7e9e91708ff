"""Boundary-minimum Laplace asymptotics on a half plane, with a quadrature oracle.

For a phase theta minimised at x* on the boundary of the half-plane domain
C (gradient nonzero, positive curvature along the boundary) and a weight f
vanishing on the boundary with nonzero inward normal derivative,

    int_C e^{-theta(x)/t} f(x) dx
        ~ sqrt(2 pi) t^{5/2} e^{-theta(x*)/t}
          / (sqrt(d2_tan theta) |grad theta|)
          * [ grad f . grad theta / |grad theta|^2
              + (1/2) d2_tan f / d2_tan theta ]

as t -> 0, where d2_tan denotes the second derivative along the boundary
tangent (the unit direction orthogonal to grad theta).  The companion
adaptive_quad_2d evaluates the same integral numerically so the expansion
can be checked at finite t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

__all__ = [
    "ScalarField",
    "HalfPlane",
    "LaplaceHypothesisError",
    "laplace_leading_term",
    "adaptive_quad_2d",
]

_FD_STEP = 1e-5
_DECAY = 1e-16


class LaplaceHypothesisError(ValueError):
    """The checkable hypotheses of the boundary Laplace formula failed."""


@dataclass
class ScalarField:
    """Scalar field on R^2 with optional analytic gradient and Hessian.

    Missing derivatives fall back to central finite differences with step
    1e-5 times the coordinate scale.
    """

    value: Callable[[np.ndarray], float]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    hess: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, x) -> float:
        return float(self.value(np.asarray(x, dtype=float)))

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        out = np.empty(2)
        for i in range(2):
            h = _FD_STEP * max(1.0, abs(x[i]))
            e = np.zeros(2)
            e[i] = h
            out[i] = (self(x + e) - self(x - e)) / (2.0 * h)
        return out

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            return np.asarray(self.hess(x), dtype=float)
        h = np.array([_FD_STEP * max(1.0, abs(x[i])) for i in range(2)])
        out = np.empty((2, 2))
        f0 = self(x)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h[i]
            out[i, i] = (self(x + e) - 2.0 * f0 + self(x - e)) / h[i] ** 2
        ex = np.array([h[0], 0.0])
        ey = np.array([0.0, h[1]])
        cross = (
            self(x + ex + ey) - self(x + ex - ey) - self(x - ex + ey) + self(x - ex - ey)
        ) / (4.0 * h[0] * h[1])
        out[0, 1] = out[1, 0] = cross
        return out


@dataclass(frozen=True)
class HalfPlane:
    """Domain {x in R^2 : normal . x >= offset}; offset=-inf means all of R^2."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            raise ValueError("normal must be nonzero")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "offset", float(self.offset) / norm
                           if math.isfinite(self.offset) else float(self.offset))

    @classmethod
    def full_plane(cls) -> "HalfPlane":
        return cls(normal=np.array([1.0, 0.0]), offset=-math.inf)

    @property
    def is_full_plane(self) -> bool:
        return not math.isfinite(self.offset)


def laplace_leading_term(theta: ScalarField, f: ScalarField, boundary_point,
                         t: float) -> float:
    """Leading term of int_C e^{-theta/t} f dx for a boundary minimum.

    boundary_point is the minimiser x*(t) of theta over the domain; the
    caller has already baked any t-dependence into theta.  Raises
    LaplaceHypothesisError when |grad theta| < 1e-12 or the tangential
    curvature of theta is not positive.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    x_star = np.asarray(boundary_point, dtype=float)
    g = theta.gradient(x_star)
    gnorm = float(np.linalg.norm(g))
    if gnorm < 1e-12:
        raise LaplaceHypothesisError(
            f"|grad theta(x*)| = {gnorm:.3e} < 1e-12; boundary minimum degenerate"
        )
    tangent = np.array([-g[1], g[0]]) / gnorm
    th_tan2 = float(tangent @ theta.hessian(x_star) @ tangent)
    if th_tan2 <= 0.0:
        raise LaplaceHypothesisError(
            f"tangential curvature of theta is {th_tan2:.3e}, must be positive"
        )
    f_tan2 = float(tangent @ f.hessian(x_star) @ tangent)
    bracket = float(f.gradient(x_star) @ g) / gnorm**2 + 0.5 * f_tan2 / th_tan2
    prefactor = (
        math.sqrt(2.0 * math.pi)
        * t**2.5
        * math.exp(-theta(x_star) / t)
        / (math.sqrt(th_tan2) * gnorm)
    )
    return prefactor * bracket


def _probe_extent(sample: Callable[[float], float], scale: float) -> float:
    """Smallest probed radius beyond which |sample| < 1e-16 of its max.

    Probes geometrically from scale/4 up to ~4e12 scale, so both t-thin
    boundary layers and O(1) features are caught.
    """
    radii = scale * 2.0 ** np.arange(-2.0, 43.0)
    vals = np.array([abs(sample(r)) for r in radii])
    peak = float(np.max(vals))
    if peak == 0.0:
        return radii[len(radii) // 2]
    for i, r in enumerate(radii):
        if vals[i:].max() < _DECAY * peak:
            return r
    return float(radii[-1])


def adaptive_quad_2d(integrand: Callable[[np.ndarray], float], domain: HalfPlane,
                     t: float) -> float:
    """Nested adaptive quadrature of an exponentially decaying integrand.

    Coordinates are rotated so u runs along the inward normal from the
    boundary and v along it; the unbounded directions are truncated where
    probing shows the integrand below 1e-16 of its peak.  Relative
    tolerance about 1e-8.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    n = domain.normal
    tangent = np.array([-n[1], n[0]])
    anchor = (domain.offset if not domain.is_full_plane else 0.0) * n

    def g(u: float, v: float) -> float:
        return float(integrand(anchor + u * n + v * tangent))

    # expected boundary-layer scales: u ~ t, v ~ sqrt(t)
    u_hi = _probe_extent(lambda r: g(r, 0.0), t)
    u_lo = -_probe_extent(lambda r: g(-r, 0.0), t) if domain.is_full_plane else 0.0
    u_mid = 0.5 * (u_lo + u_hi)
    v_hi = _probe_extent(lambda r: g(u_mid, r) + g(0.25 * u_hi, r), math.sqrt(t))
    v_lo = -_probe_extent(lambda r: g(u_mid, -r) + g(0.25 * u_hi, -r), math.sqrt(t))

    def inner(u: float) -> float:
        val, _ = quad(lambda v: g(u, v), v_lo, v_hi, epsabs=1e-300, epsrel=1e-9,
                      limit=200)
        return val

    val, err = quad(inner, u_lo, u_hi, epsabs=1e-300, epsrel=1e-8, limit=200)
    if not math.isfinite(val):
        raise ArithmeticError("2d quadrature did not converge")
    return val
