"""Molchan-Golosov kernel, fBM autocovariance and exact joint sampling.

The fractional Brownian motion B^H is generated from a standard Brownian
motion B through the Volterra representation

    B^H_t = int_0^t K_H(t, s) dB_s,
    K_H(t, s) = c_H (t - s)^(H - 1/2) F(H - 1/2, 1/2 - H; H + 1/2; 1 - t/s)

on 0 < s < t, with c_H = sqrt(2H G(3/2 - H) / (G(2 - 2H) G(H + 1/2))) and
F the Gauss hypergeometric function.  The kernel is self-similar,
K_H(t, s) = t^(H - 1/2) K_H(1, s/t), so all quadratures run on the unit
interval and rescale.  For H != 1/2 the kernel diverges at both ends of
(0, t): like (t - s)^(H - 1/2) at s = t (rough regime H < 1/2) and like
s^(-|H - 1/2|) at s = 0.  Cell integrals absorb the s = t singularity with
the substitution u = t - v^(1/(H + 1/2)) and the s = 0 singularity with
geometric grading plus closed-form power tails.

Joint sampling of (B, B^H) on a grid is exact: one Cholesky factor of the
2n x 2n covariance of the stacked vector, with per-block counter-based
random streams so results are reproducible under any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from scipy.special import gamma

from .hypergeometric import series_vec
from .params import PathBundle, TimeGrid
from .quadrature import graded_panels, panel_nodes

__all__ = [
    "mg_constant",
    "mg_kernel",
    "autocov",
    "joint_covariance",
    "sample_fbm_joint",
    "kernel_integral",
    "kernel_sq_norm",
    "QuadratureError",
]

#: ratio s/t below which the profile switches to the 1/z connection form
_R_DEEP = 1.0 / 9.0
#: geometric-grading depth for singular endpoints (tail 2^-60 ~ 9e-19)
_LEVELS = 60
_NPTS = 12
#: paths per random block; block b always consumes the stream spawned with
#: key (b,), making results independent of scheduling
_BLOCK = 4096


class QuadratureError(RuntimeError):
    """A kernel quadrature produced a non-finite value."""


def mg_constant(hurst: float) -> float:
    """Normalising constant c_H of the Molchan-Golosov kernel."""
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    h = hurst
    return math.sqrt(
        2.0 * h * gamma(1.5 - h) / (gamma(2.0 - 2.0 * h) * gamma(h + 0.5))
    )


@lru_cache(maxsize=64)
def _deep_coeffs(hurst: float):
    """(G1, G2) of the small-ratio expansion K_H(1,r)/c_H = G1 r^(H-1/2)
    + G2 r^(1/2-H) (1-r)^(2H-1) F2(-r/(1-r))."""
    h = hurst
    g1 = gamma(h + 0.5) * gamma(1.0 - 2.0 * h) / gamma(0.5 - h)
    g2 = gamma(h + 0.5) * gamma(2.0 * h - 1.0) / (gamma(h - 0.5) * gamma(2.0 * h))
    return g1, g2


def _profile(hurst: float, r: np.ndarray, d: np.ndarray) -> np.ndarray:
    """K_H(1, r) elementwise; the caller supplies both r and d = 1 - r with
    whichever of the two is exact (they are used in different regimes)."""
    h = hurst
    if h == 0.5:
        return np.ones_like(r)
    a = h - 0.5
    ch = mg_constant(h)
    out = np.empty_like(r)
    deep = r < _R_DEEP
    if np.any(deep):
        g1, g2 = _deep_coeffs(h)
        rd, dd = r[deep], d[deep]
        f2 = series_vec(0.5 - h, 1.0 - 2.0 * h, 2.0 - 2.0 * h, -rd / dd)
        out[deep] = ch * (g1 * rd**a + g2 * rd ** (-a) * dd ** (2.0 * h - 1.0) * f2)
    near = ~deep
    if np.any(near):
        rn, dn = r[near], d[near]
        s = series_vec(a, 2.0 * h, h + 0.5, dn)
        out[near] = ch * (rn * dn) ** a * s
    return out


def mg_kernel(t: float, s: float, hurst: float) -> float:
    """Molchan-Golosov kernel K_H(t, s) for 0 < s < t.

    For H < 1/2 the value diverges as s -> t like (t-s)^(H-1/2); both
    endpoints are excluded (s = 0 is a pole of the hypergeometric argument).
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    if not 0.0 < s < t:
        raise ValueError(f"need 0 < s < t, got s={s}, t={t}")
    r = s / t
    val = _profile(hurst, np.array([r]), np.array([1.0 - r]))[0]
    return float(t ** (hurst - 0.5) * val)


def autocov(t: float, s: float, hurst: float):
    """fBM autocovariance R(t, s) = (t^2H + s^2H - |t-s|^2H) / 2."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t < 0.0) or np.any(s < 0.0):
        raise ValueError("autocov requires t, s >= 0")
    h2 = 2.0 * hurst
    out = 0.5 * (t**h2 + s**h2 - np.abs(t - s) ** h2)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# kernel quadrature on the unit interval
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _NodeTable:
    """Quadrature nodes on (0,1) graded into both endpoints.

    u and d = 1 - u are carried separately so integrands can use whichever
    coordinate is exact near its endpoint; tau is the truncated stub width.
    """

    u: np.ndarray
    d: np.ndarray
    w: np.ndarray
    k1: np.ndarray
    tau: float


@lru_cache(maxsize=64)
def _node_table(hurst: float, levels: int = _LEVELS, npts: int = _NPTS) -> _NodeTable:
    lo, hi = graded_panels(0.5, levels)
    u_left, w_left = panel_nodes(lo, hi, npts)       # u coordinate, u in (tau, 1/2]
    d_right, w_right = panel_nodes(lo, hi, npts)     # d coordinate, d in (tau, 1/2]
    u = np.concatenate([u_left, 1.0 - d_right])
    d = np.concatenate([1.0 - u_left, d_right])
    w = np.concatenate([w_left, w_right])
    k1 = _profile(hurst, np.where(u <= 0.5, u, 1.0 - d), d)
    tau = 0.5 * 2.0 ** (-levels)
    return _NodeTable(u=u, d=d, w=w, k1=k1, tau=tau)


def _tail_left(hurst: float, tau: float, power: int) -> float:
    """int_0^tau K_H(1,u)^power du from the two-power expansion at u = 0."""
    h = hurst
    if h == 0.5:
        return tau
    ch = mg_constant(h)
    g1, g2 = _deep_coeffs(h)
    if power == 1:
        return ch * (
            g1 * tau ** (h + 0.5) / (h + 0.5) + g2 * tau ** (1.5 - h) / (1.5 - h)
        )
    return ch * ch * (
        g1 * g1 * tau ** (2.0 * h) / (2.0 * h)
        + 2.0 * g1 * g2 * tau
        + g2 * g2 * tau ** (2.0 - 2.0 * h) / (2.0 - 2.0 * h)
    )


def _tail_right(hurst: float, tau: float, power: int) -> float:
    """int_{1-tau}^1 K_H(1,u)^power du from K ~ c_H (1-u)^(H-1/2)."""
    h = hurst
    if h == 0.5:
        return tau
    ch = mg_constant(h)
    if power == 1:
        return ch * tau ** (h + 0.5) / (h + 0.5)
    return ch * ch * tau ** (2.0 * h) / (2.0 * h)


def _kernel_weighted_integral(hurst, weight=None, power=1, levels=_LEVELS, npts=_NPTS):
    """int_0^1 weight(u) K_H(1,u)^power du with singularity-aware panels.

    weight(u, d) must be vectorised and smooth; it is evaluated at (0, 1)
    and (1, 0) for the analytic tails.
    """
    tbl = _node_table(hurst, levels, npts)
    vals = tbl.k1 if power == 1 else tbl.k1**power
    if weight is not None:
        vals = vals * weight(tbl.u, tbl.d)
        w0 = float(weight(np.array([0.0]), np.array([1.0]))[0])
        w1 = float(weight(np.array([1.0]), np.array([0.0]))[0])
    else:
        w0 = w1 = 1.0
    core = float(np.dot(tbl.w, vals))
    total = core + w0 * _tail_left(hurst, tbl.tau, power) + w1 * _tail_right(
        hurst, tbl.tau, power
    )
    if not math.isfinite(total):
        raise QuadratureError(f"kernel integral diverged (hurst={hurst})")
    return total


def kernel_integral(t: float, hurst: float) -> float:
    """int_0^t K_H(t, u) du, by self-similarity t^(H+1/2) times the unit value."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    return t ** (hurst + 0.5) * _kernel_weighted_integral(hurst, power=1)


def kernel_sq_norm(hurst: float) -> float:
    """int_0^1 K_H(1, u)^2 du; equals R(1,1) = 1 for every H."""
    return _kernel_weighted_integral(hurst, power=2)


# ---------------------------------------------------------------------------
# unit-grid cell integrals and the joint covariance
# ---------------------------------------------------------------------------

def _diag_cell(hurst: float, width: float, m_levels: int = 40, npts: int = 10) -> float:
    """int over the cell touching the kernel's time argument, in ratio
    coordinates: int_{1-width}^1 K_H(1, rho) drho.

    Substituting 1 - rho = v^(1/(H+1/2)) turns the (1-rho)^(H-1/2) factor
    into a constant; the remaining profile is integrated on graded panels.
    """
    h = hurst
    if h == 0.5:
        return width
    p = 1.0 / (h + 0.5)
    vmax = width ** (h + 0.5)
    lo, hi = graded_panels(vmax, m_levels)
    v, w = panel_nodes(lo, hi, npts)
    d = v**p
    vals = (1.0 - d) ** (h - 0.5) * series_vec(h - 0.5, 2.0 * h, h + 0.5, d)
    tail = vmax * 2.0 ** (-m_levels)  # integrand -> 1 as v -> 0
    return mg_constant(h) * p * (float(np.dot(w, vals)) + tail)


def _first_cell(hurst: float, width: float, levels: int = 50, npts: int = 12) -> float:
    """int_0^width K_H(1, rho) drho with grading into the rho = 0 singularity."""
    h = hurst
    if h == 0.5:
        return width
    lo, hi = graded_panels(width, levels)
    r, w = panel_nodes(lo, hi, npts)
    vals = _profile(h, r, 1.0 - r)
    tau = width * 2.0 ** (-levels)
    return float(np.dot(w, vals)) + _tail_left(h, tau, power=1)


@lru_cache(maxsize=16)
def _unit_cells(n: int, hurst: float) -> np.ndarray:
    """Lower-triangular C with C[i-1, j-1] = int_{(j-1)/i}^{j/i} K_H(1,rho) drho.

    Scaled by t_i^(H+1/2) these are the cell integrals of K_H(t_i, .) over
    the uniform unit-grid cells, used by both the covariance cross-block
    and the discretised kernel operator.
    """
    h = hurst
    cells = np.zeros((n, n))
    if h == 0.5:
        for i in range(1, n + 1):
            cells[i - 1, :i] = 1.0 / i
        return cells

    cells[0, 0] = _kernel_weighted_integral(h, power=1)
    # regular interior cells, one batched profile evaluation
    rows, cols, los, his = [], [], [], []
    for i in range(2, n + 1):
        for j in range(2, i):
            rows.append(i - 1)
            cols.append(j - 1)
            los.append((j - 1) / i)
            his.append(j / i)
    if rows:
        npts = 16
        nodes, wts = panel_nodes(np.array(los), np.array(his), npts)
        vals = _profile(h, nodes, 1.0 - nodes)
        sums = (vals * wts).reshape(-1, npts).sum(axis=1)
        cells[np.array(rows), np.array(cols)] = sums
    for i in range(2, n + 1):
        cells[i - 1, 0] = _first_cell(h, 1.0 / i)
        cells[i - 1, i - 1] = _diag_cell(h, 1.0 / i)
    if not np.all(np.isfinite(cells)):
        bad = np.argwhere(~np.isfinite(cells))[0]
        raise QuadratureError(
            f"kernel cell integral failed at cell (i={bad[0]+1}, j={bad[1]+1})"
        )
    return cells


@lru_cache(maxsize=16)
def _unit_joint_cov(n: int, hurst: float) -> np.ndarray:
    """Covariance of (B_{t_1..t_n}, B^H_{t_1..t_n}) on the unit grid t_i = i/n."""
    h = hurst
    t = np.arange(1, n + 1) / n
    bb = np.minimum.outer(t, t)
    r = autocov(t[:, None], t[None, :], h)
    # cross[i, j] = cov(B_{t_i}, B^H_{t_j}) = int_0^{t_i ^ t_j} K_H(t_j, u) du
    partial = np.cumsum(_unit_cells(n, h), axis=1)  # row j: ratio integral to m/j
    cross = np.empty((n, n))
    for j in range(1, n + 1):
        scale = (j / n) ** (h + 0.5)
        m = np.minimum(np.arange(1, n + 1), j)
        cross[:, j - 1] = scale * partial[j - 1, m - 1]
    top = np.hstack([bb, cross])
    bottom = np.hstack([cross.T, r])
    return np.vstack([top, bottom])


def joint_covariance(grid: TimeGrid, hurst: float) -> np.ndarray:
    """Covariance matrix of the stacked vector (B_{t_1..t_n}, B^H_{t_1..t_n}).

    Block structure: cov(B, B) = min(t_i, t_j); cov(B^H, B^H) = R(t_i, t_j);
    cov(B^H_{t_i}, B_{t_j}) = int_0^{t_i ^ t_j} K_H(t_i, u) du.  Symmetric
    and positive semidefinite up to quadrature noise.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst}")
    n = grid.n_steps
    base = _unit_joint_cov(n, hurst)
    scale = _horizon_scale(grid.horizon, n, hurst)
    return base * np.outer(scale, scale)


def _horizon_scale(horizon: float, n: int, hurst: float) -> np.ndarray:
    """Diagonal D with Sigma(T) = D Sigma(1) D: B scales by sqrt(T), B^H by T^H."""
    return np.concatenate(
        [np.full(n, math.sqrt(horizon)), np.full(n, horizon**hurst)]
    )


_JITTERS = (1e-14, 1e-13, 1e-12, 1e-11, 1e-10)


@lru_cache(maxsize=16)
def _unit_chol(n: int, hurst: float) -> np.ndarray:
    """Cholesky factor of the unit-grid joint covariance, with escalating
    diagonal jitter up to 1e-10 before giving up."""
    sigma = _unit_joint_cov(n, hurst)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        pass
    for eps in _JITTERS:
        try:
            return np.linalg.cholesky(sigma + eps * np.eye(2 * n))
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError(
        f"joint covariance not PSD even after 1e-10 jitter (n={n}, hurst={hurst})"
    )


def _block_sizes(n_paths: int, block: int = _BLOCK):
    sizes = []
    done = 0
    while done < n_paths:
        take = min(block, n_paths - done)
        sizes.append(take)
        done += take
    return sizes


def _sample_block(chol_t, n, dt, seed, block_index, size):
    """Normals for one path block; the stream depends only on (seed, block)."""
    rng = Generator(Philox(SeedSequence(seed, spawn_key=(block_index,))))
    z = rng.standard_normal((size, 3 * n))
    bbh = z[:, : 2 * n] @ chol_t
    w = np.cumsum(z[:, 2 * n :] * math.sqrt(dt), axis=1)
    return bbh[:, :n], bbh[:, n:], w


def sample_fbm_joint(
    grid: TimeGrid,
    hurst: float,
    n_paths: int,
    seed: int,
    n_workers: int = 1,
) -> PathBundle:
    """Exact joint sample of (B, W, B^H) at the grid nodes.

    Deterministic given the seed: paths are generated in fixed blocks with
    per-block substreams, so output is bit-identical for any n_workers.
    W is an independent Brownian motion.  X and Y stay unfilled.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    n = grid.n_steps
    scale = _horizon_scale(grid.horizon, n, hurst)
    chol_t = (_unit_chol(n, hurst) * scale[:, None]).T.copy()
    sizes = _block_sizes(n_paths)

    b = np.zeros((n_paths, n + 1))
    w = np.zeros((n_paths, n + 1))
    bh = np.zeros((n_paths, n + 1))

    def run(args):
        idx, offset, size = args
        return offset, size, _sample_block(chol_t, n, grid.dt, seed, idx, size)

    tasks = []
    offset = 0
    for idx, size in enumerate(sizes):
        tasks.append((idx, offset, size))
        offset += size

    if n_workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]
    for offset, size, (bb, bbh, ww) in results:
        b[offset : offset + size, 1:] = bb
        bh[offset : offset + size, 1:] = bbh
        w[offset : offset + size, 1:] = ww
    return PathBundle(grid=grid, b_paths=b, w_paths=w, bh_paths=bh)
