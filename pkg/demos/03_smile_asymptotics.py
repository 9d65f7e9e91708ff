"""Implied-volatility smiles from the one-dimensional rate optimisation.

Two headline diagnostics: at H = 1/2 the asymptotic smile sits within
about one vol point of the lognormal SABR formula over two units of log
moneyness, and as the expiry shrinks the smile steepens dramatically for
rougher (smaller H) volatility.

Run:  python3 demos/03_smile_asymptotics.py
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fsabr import ModelParams, implied_vol_fsabr, implied_vol_fsabr_atm, sabr_formula

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

Y0, NU, RHO = 0.13927, 0.5778, -0.06867


def smile(p: ModelParams, t: float, ks):
    out = []
    for k in ks:
        if abs(k - p.x0) < 1e-12:
            out.append(implied_vol_fsabr_atm(t, p))
        else:
            out.append(implied_vol_fsabr(float(k), t, p).implied_vol)
    return np.array(out)


# --- comparison with the SABR formula at H = 1/2 -----------------------------
ks = np.arange(-1.0, 1.0001, 0.05)
p_half = ModelParams(x0=0.0, y0=Y0, nu=NU, rho=RHO, hurst=0.5)
sig_f = smile(p_half, 1.0, ks)
sig_s = np.array([sabr_formula(float(k), 1.0, 1.0, Y0, NU, RHO, 1.0) for k in ks])

print("H = 1/2 asymptotic smile vs lognormal SABR:")
print(f"  max |difference| over k in [-1, 1]: {np.max(np.abs(sig_f - sig_s)):.4f}")

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.2))
ax1.plot(ks, sig_f, label="rate-optimisation smile")
ax1.plot(ks, sig_s, "--", label="SABR formula")
ax1.set_xlabel("log moneyness k")
ax1.set_ylabel("implied vol")
ax1.legend()
ax2.plot(ks, np.abs(sig_f - sig_s))
ax2.set_xlabel("log moneyness k")
ax2.set_ylabel("|difference|")
fig.suptitle("t = 1, H = 1/2")
fig.tight_layout()
fig.savefig(OUT / "smile_vs_sabr.png", dpi=120)
print("wrote", OUT / "smile_vs_sabr.png")

# --- Hurst sweep at short and long expiry ------------------------------------
# For H < 1/2 the smile explodes as t -> 0 except at the money; for larger
# H the whole surface flattens.  (The asymptotic formula covers H <= 1/2.)
ks = np.arange(-1.0, 1.0001, 0.05)
fig, axes = plt.subplots(1, 2, figsize=(11, 4.2), sharey=True)
for t, ax in zip((0.01, 1.0), axes):
    for h in (0.1, 0.3, 0.5):
        ph = ModelParams(x0=0.0, y0=Y0, nu=NU, rho=RHO, hurst=h)
        ax.plot(ks, smile(ph, t, ks), label=f"H = {h}")
    ax.set_title(f"t = {t}")
    ax.set_xlabel("log moneyness k")
    ax.legend()
axes[0].set_ylabel("implied vol")
fig.tight_layout()
fig.savefig(OUT / "smile_hurst_sweep.png", dpi=120)
print("wrote", OUT / "smile_hurst_sweep.png")

print("\nwing steepening at k = 0.5:")
for t in (0.01, 1.0):
    row = []
    for h in (0.1, 0.3, 0.5):
        ph = ModelParams(x0=0.0, y0=Y0, nu=NU, rho=RHO, hurst=h)
        row.append(f"H={h}: {implied_vol_fsabr(0.5, t, ph).implied_vol:.4f}")
    print(f"  t = {t:5}: " + "   ".join(row))
