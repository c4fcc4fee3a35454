"""Finite-difference and composite-quadrature machinery on regular grids.

One stencil serves the whole package: 4th-order central differences in the
interior with one-sided 4th-order rows at the ends, assembled as a dense
per-axis derivative matrix (grids are desk-scale, m <= a few hundred).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def derivative_matrix(m: int, h: float) -> np.ndarray:
    """m x m matrix applying d/dx to nodal values on a uniform grid."""
    if m < 6:
        raise ValueError("need at least 6 nodes per axis for the 4th-order stencil")
    D = np.zeros((m, m))
    # interior: 4th-order central
    c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    for i in range(2, m - 2):
        D[i, i - 2 : i + 3] = c
    # one-sided 4th-order rows at the boundary
    fwd0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    fwd1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    D[0, :5] = fwd0
    D[1, :5] = fwd1
    D[m - 1, m - 5 :] = -fwd0[::-1]
    D[m - 2, m - 5 :] = -fwd1[::-1]
    return D / h


def apply_along_axis(D: np.ndarray, values: np.ndarray, axis: int) -> np.ndarray:
    """Apply the matrix D to `values` along one axis."""
    moved = np.moveaxis(values, axis, 0)
    out = np.tensordot(D, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


@lru_cache(maxsize=None)
def simpson_weights(m: int, h: float) -> np.ndarray:
    """Composite Simpson weights; m must be odd."""
    if m % 2 == 0:
        raise ValueError("composite Simpson needs an odd node count")
    w = np.ones(m)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (h / 3.0)
