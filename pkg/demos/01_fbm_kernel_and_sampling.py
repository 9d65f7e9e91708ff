"""Volterra kernel shapes and exact joint sampling of (B, B^H).

The fractional driver B^H is built from a standard Brownian motion through
the Molchan-Golosov kernel K_H(t, s).  This script plots the kernel profile
for several Hurst exponents, verifies the L^2 identity int K^2 = R(1,1) = 1,
and checks that exactly sampled paths reproduce the theoretical variance
t^{2H} at every node.

Run:  python3 demos/01_fbm_kernel_and_sampling.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fsabr import TimeGrid, kernel_sq_norm, mg_kernel, sample_fbm_joint

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# --- kernel profiles -------------------------------------------------------
# For H < 1/2 the kernel blows up at both endpoints of (0, t); for H > 1/2
# it vanishes at s = t and blows up only at s = 0.
s = np.linspace(0.01, 0.99, 197)
fig, ax = plt.subplots(figsize=(7, 4.5))
for h in (0.1, 0.3, 0.5, 0.7, 0.9):
    ax.plot(s, [mg_kernel(1.0, float(u), h) for u in s], label=f"H = {h}")
ax.set_xlabel("s")
ax.set_ylabel("K_H(1, s)")
ax.set_ylim(0, 3)
ax.legend()
ax.set_title("Molchan-Golosov kernel profiles")
fig.tight_layout()
fig.savefig(OUT / "kernel_profiles.png", dpi=120)
print("wrote", OUT / "kernel_profiles.png")

# --- L^2 identity ----------------------------------------------------------
print("\nint_0^1 K_H(1,u)^2 du  (should equal 1 for every H):")
for h in (0.1, 0.25, 0.5, 0.75, 0.9):
    print(f"  H = {h:4}: {kernel_sq_norm(h):.12f}")

# --- exact sampling --------------------------------------------------------
# Joint Cholesky sampling has no discretisation bias: the sample variance
# of B^H_t must match t^{2H} up to Monte Carlo noise at every node.
h = 0.2
grid = TimeGrid.uniform(1.0, 16)
paths = sample_fbm_joint(grid, h, n_paths=40_000, seed=1)
print(f"\nsample variance of B^H_t vs t^(2H), H = {h}:")
print(f"  {'t':>6} {'sample':>10} {'theory':>10}")
for k in (2, 4, 8, 16):
    t = grid.nodes[k]
    print(f"  {t:6.3f} {paths.bh_paths[:, k].var():10.5f} {t ** (2 * h):10.5f}")

fig, ax = plt.subplots(figsize=(7, 4.5))
for i in range(12):
    ax.plot(grid.nodes, paths.bh_paths[i], lw=0.8, alpha=0.8)
ax.set_xlabel("t")
ax.set_ylabel("B^H_t")
ax.set_title(f"Exactly sampled fractional Brownian paths, H = {h}")
fig.tight_layout()
fig.savefig(OUT / "fbm_paths.png", dpi=120)
print("wrote", OUT / "fbm_paths.png")
