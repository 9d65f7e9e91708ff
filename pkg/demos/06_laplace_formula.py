"""Boundary-minimum Laplace asymptotics against direct quadrature.

For phases minimised on the domain boundary with the weight vanishing
there, the integral int_C e^{-theta/t} f dx collapses to a t^{5/2} leading
term driven by the gradient of theta and the inward derivative of f.  The
test case theta = x1 + x2^2, f = x1 e^{-|x|^2} on {x1 >= 0} has the exact
limit sqrt(pi) t^{5/2}.

Run:  python3 demos/06_laplace_formula.py
"""

import math

import numpy as np

from fsabr import HalfPlane, ScalarField, adaptive_quad_2d, laplace_leading_term

theta = ScalarField(
    value=lambda x: x[0] + x[1] ** 2,
    grad=lambda x: np.array([1.0, 2.0 * x[1]]),
    hess=lambda x: np.array([[0.0, 0.0], [0.0, 2.0]]),
)
f = ScalarField(value=lambda x: x[0] * math.exp(-x[0] ** 2 - x[1] ** 2))
domain = HalfPlane(normal=np.array([1.0, 0.0]), offset=0.0)

print("theta = x1 + x2^2, f = x1 e^{-|x|^2} on {x1 >= 0}")
print(f"{'t':>8} {'formula':>13} {'quadrature':>13} {'ratio':>8} {'exact':>13}")
for t in (1e-1, 1e-2, 1e-3, 1e-4):
    lt = laplace_leading_term(theta, f, np.zeros(2), t)
    qd = adaptive_quad_2d(lambda x: math.exp(-theta(x) / t) * f.value(x), domain, t)
    exact = math.sqrt(math.pi) * t**2.5
    print(f"{t:8.0e} {lt:13.6e} {qd:13.6e} {lt / qd:8.4f} {exact:13.6e}")

print("\nthe ratio tends to 1 as t -> 0; the formula itself is exactly")
print("sqrt(pi) t^{5/2} for this f (the tangential curvature term vanishes)")

# a t-dependent phase of the call-price type: theta0 + t^{2a} theta2
a = 0.25
t = 1e-3
ta = t ** (2 * a)
theta2 = ScalarField(
    value=lambda x: ta * x[1] ** 2 + (x[0] - 0.1) + (x[0] - 0.1) ** 2,
    grad=lambda x: np.array([1.0 + 2.0 * (x[0] - 0.1), 2.0 * ta * x[1]]),
    hess=lambda x: np.array([[2.0, 0.0], [0.0, 2.0 * ta]]),
)
f2 = ScalarField(value=lambda x: (x[0] - 0.1) * math.exp(-x[0] ** 2 - x[1] ** 2))
dom2 = HalfPlane(normal=np.array([1.0, 0.0]), offset=0.1)
lt = laplace_leading_term(theta2, f2, np.array([0.1, 0.0]), t)
qd = adaptive_quad_2d(lambda x: math.exp(-theta2.value(x) / t) * f2.value(x), dom2, t)
print(f"\ncall-style phase at t = {t}: formula/quadrature = {lt / qd:.4f}")
