"""Tensor-product Gauss-Legendre quadrature on coordinate boxes."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .fields import Box, box_array


@lru_cache(maxsize=None)
def _gl_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def box_rule(box: Box, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (P, N) and weights (P,) exact for degree <= 2*order-1 per axis."""
    b = box_array(box)
    axes_nodes, axes_weights = [], []
    for lo, hi in b:
        x, w = _gl_nodes(order)
        axes_nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        axes_weights.append(0.5 * (hi - lo) * w)
    mesh = np.meshgrid(*axes_nodes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*axes_weights, indexing="ij")
    w = np.ones(len(pts))
    for wm in wmesh:
        w = w * wm.ravel()
    return pts, w


def integrate(f, box: Box, density=None, order: int = 8) -> float:
    """Integral of f * density over a box.

    f and density may be coefficient fields or vectorized callables taking
    (P, N) points. Raises if the density is nonpositive at any node.
    """
    pts, w = box_rule(box, order)
    fv = np.asarray(f(pts), dtype=np.float64)
    if density is not None:
        dv = np.asarray(density(pts), dtype=np.float64)
        if np.any(dv <= 0):
            raise ValueError("nonpositive density at a quadrature node")
        fv = fv * dv
    return float(np.dot(w, fv))
