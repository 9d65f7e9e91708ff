"""Lognormal fractional SABR toolkit.

Small-time joint density and implied-volatility asymptotics for the model

    dS_t = Y_t S_t (rho dB_t + rhobar dW_t),    Y_t = y0 e^{nu B^H_t},

with B^H a fractional Brownian motion driven by B through the
Molchan-Golosov kernel, validated throughout against an exact-simulation
Monte Carlo oracle.
"""

from .density import (
    approx_geodesic,
    approx_joint_density,
    approx_log_density,
    c_er,
    c_rk,
    hyperbolic_distance,
    hyperbolic_hk_density,
    mckean_kernel,
    psi,
)
from .fbm import (
    autocov,
    joint_covariance,
    kernel_integral,
    kernel_sq_norm,
    mg_constant,
    mg_kernel,
    sample_fbm_joint,
)
from .hypergeometric import Hyp2F1Error, hyp2f1
from .laplace import HalfPlane, ScalarField, adaptive_quad_2d, laplace_leading_term
from .ldp import (
    DiscreteKernelMatrix,
    VariationalSolution,
    b_from_y,
    discrete_kernel,
    energy,
    fsabr_smile_ldp,
    minimize_rate,
    optimal_x_given_b,
    y_from_b,
)
from .mc import error_order_study, kde2d, mc_call, mc_terminal, simulate
from .params import ModelParams, PathBundle, TimeGrid
from .smile import (
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

__version__ = "0.1.0"
