"""Shared domain types: model parameters, time grids and path containers.

The model is the lognormal fractional SABR dynamics for the log price X and
instantaneous volatility Y,

    X_t = x0 + y0 * int_0^t e^{nu B^H_s} (rho dB_s + rhobar dW_s)
               - y0^2/2 * int_0^t e^{2 nu B^H_s} ds,
    Y_t = y0 * e^{nu B^H_t},

where B and W are independent Brownian motions, B^H is the fractional
Brownian motion generated from B through the Molchan-Golosov kernel, and
rhobar = sqrt(1 - rho^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

#: |rho| must stay at least this far from 1; rhobar^2 divides the energy
#: functional and the conditional-variance factor psi.
MAX_ABS_RHO = 1.0 - 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Parameter tuple (x0, y0, nu, rho, hurst) of the fractional SABR model.

    x0 is the log spot, y0 > 0 the spot volatility, nu > 0 the vol-of-vol,
    rho the spot/vol correlation and hurst the Hurst exponent of the
    fractional driver.
    """

    x0: float
    y0: float
    nu: float
    rho: float
    hurst: float

    def __post_init__(self):
        if not self.y0 > 0.0:
            raise ValueError(f"y0 must be positive, got {self.y0}")
        if not self.nu > 0.0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if abs(self.rho) > MAX_ABS_RHO:
            raise ValueError(
                f"|rho| must be <= {MAX_ABS_RHO} so that rhobar stays away from 0, got {self.rho}"
            )
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst}")

    @property
    def rho_bar(self) -> float:
        """sqrt(1 - rho^2), the orthogonal part of the correlation."""
        return math.sqrt(1.0 - self.rho * self.rho)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform grid 0 = t_0 < t_1 < ... < t_n = horizon."""

    horizon: float
    n_steps: int
    nodes: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if not self.horizon > 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be >= 2, got {self.n_steps}")
        if self.nodes is None:
            nodes = np.linspace(0.0, self.horizon, self.n_steps + 1)
            object.__setattr__(self, "nodes", nodes)
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.shape != (self.n_steps + 1,):
            raise ValueError("nodes must have n_steps + 1 entries")
        if nodes[0] != 0.0 or nodes[-1] != self.horizon:
            raise ValueError("nodes must start at 0 and end at horizon")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, horizon: float, n_steps: int) -> "TimeGrid":
        return cls(horizon=float(horizon), n_steps=int(n_steps))

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps


@dataclass
class PathBundle:
    """Jointly sampled discrete paths on a grid.

    All matrices have shape (n_paths, n_steps + 1); column k holds the value
    at node t_k, so every path starts at B = W = B^H = 0, X = x0, Y = y0.
    x_paths / y_paths stay None until a simulator fills them.
    """

    grid: TimeGrid
    b_paths: np.ndarray
    w_paths: np.ndarray
    bh_paths: np.ndarray
    x_paths: Optional[np.ndarray] = None
    y_paths: Optional[np.ndarray] = None

    @property
    def n_paths(self) -> int:
        return self.b_paths.shape[0]
