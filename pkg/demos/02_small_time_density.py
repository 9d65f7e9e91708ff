"""Small-time joint density of (log price, volatility).

Evaluates the leading-order density surface, confirms it carries unit mass
over a wide box, and compares the H = 1/2 case against the hyperbolic
heat-kernel form and the McKean kernel's geodesic decay.

Run:  python3 demos/02_small_time_density.py
"""

import math
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fsabr import (
    ModelParams,
    approx_joint_density,
    hyperbolic_distance,
    hyperbolic_hk_density,
    mckean_kernel,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# --- density surface in the rough regime ------------------------------------
p = ModelParams(x0=0.0, y0=1.0, nu=1.0, rho=-0.3, hurst=0.3)
t = 0.02
xs = np.linspace(-0.45, 0.45, 121)
etas = np.linspace(-1.2, 1.2, 121)
ys = np.exp(etas)
dens = approx_joint_density(p, t, xs[:, None], ys[None, :])

fig, ax = plt.subplots(figsize=(6.5, 5))
cs = ax.contourf(xs, ys, dens.T, levels=25, cmap="viridis")
fig.colorbar(cs, ax=ax, label="p(t; x, y)")
ax.set_xlabel("x - x0")
ax.set_ylabel("y")
ax.set_title(f"Joint density, H = {p.hurst}, rho = {p.rho}, t = {t}")
fig.tight_layout()
fig.savefig(OUT / "density_surface.png", dpi=120)
print("wrote", OUT / "density_surface.png")

# --- mass check --------------------------------------------------------------
mass = np.trapezoid(
    np.trapezoid(dens * ys[None, :], etas, axis=1), xs
)
print(f"\nbox mass at t = {t}: {mass:.6f} (leading order integrates to 1)")

# --- hyperbolic reduction at H = 1/2 ----------------------------------------
# With nu = 1, rho = 0, H = 1/2 the pair (X, Y) is Brownian motion on the
# hyperbolic plane; the density matches the heat-kernel form to O(t).
ph = ModelParams(x0=0.0, y0=1.0, nu=1.0, rho=0.0, hurst=0.5)
print("\nratio to the hyperbolic heat-kernel form at t = 0.01:")
for dx, fy in ((0.0, 1.0), (0.05, 1.1), (-0.08, 0.9)):
    ratio = approx_joint_density(ph, 0.01, dx, fy) / hyperbolic_hk_density(
        0.01, dx, fy, 0.0, 1.0
    )
    print(f"  (x-x0, y) = ({dx:+.2f}, {fy:.2f}):  {ratio:.5f}")

# --- McKean kernel -----------------------------------------------------------
# -2 t ln p(t, d) -> d^2 as t -> 0: the heat kernel decays with the squared
# geodesic distance.
print("\nMcKean kernel geodesic decay, d = 1:")
for tt in (0.1, 0.01, 0.001):
    val = -2.0 * tt * math.log(mckean_kernel(tt, 1.0))
    print(f"  t = {tt:6}: -2t ln p = {val:.4f}  (limit 1.0)")

ds = np.linspace(0.0, 3.0, 61)
fig, ax = plt.subplots(figsize=(6.5, 4.2))
for tt in (0.25, 0.5, 1.0):
    ax.semilogy(ds, [mckean_kernel(tt, float(d)) for d in ds], label=f"t = {tt}")
ax.set_xlabel("geodesic distance d")
ax.set_ylabel("p_H2(t; d)")
ax.legend()
ax.set_title("McKean heat kernel on the hyperbolic plane")
fig.tight_layout()
fig.savefig(OUT / "mckean_kernel.png", dpi=120)
print("wrote", OUT / "mckean_kernel.png")

# sanity: the closed-form distance the kernel is indexed by
print("\nhyperbolic_distance((x0+1, y0), (x0, y0)) =",
      f"{hyperbolic_distance(1.0, 1.0, 0.0, 1.0):.6f}  (= arccosh 1.5)")
