"""Fixed, deterministic Gauss-Legendre panel quadrature helpers.

Endpoint singularities of the Volterra kernel are handled by geometric
grading toward the singular endpoint plus a closed-form power-law tail for
the truncated stub; everything else is plain composite Gauss-Legendre.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def leggauss01(npts: int):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return 0.5 * (x + 1.0), 0.5 * w


def panel_nodes(lo: np.ndarray, hi: np.ndarray, npts: int):
    """Nodes and weights of an npts-point GL rule on each panel [lo_k, hi_k].

    Returns flat arrays of length len(lo) * npts.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    x, w = leggauss01(npts)
    width = hi - lo
    nodes = lo[:, None] + width[:, None] * x[None, :]
    weights = width[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_edges(width: float, levels: int) -> np.ndarray:
    """Geometric edge sequence width * 2^-m for m = 0..levels (descending)."""
    return width * np.exp2(-np.arange(levels + 1, dtype=float))


def graded_panels(width: float, levels: int):
    """Panels of [tail, width] graded toward 0 with ratio 1/2.

    Returns (lo, hi) arrays ordered from the outermost panel inward; the
    remaining stub [0, width * 2^-levels] is left to the caller (analytic
    tail).
    """
    edges = graded_edges(width, levels)
    return edges[1:], edges[:-1]
