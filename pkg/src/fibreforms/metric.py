"""Riemannian metric fields on a coordinate chart."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .polynomial import Polynomial


class MetricField:
    """Point -> symmetric positive-definite N x N matrix.

    SPD is asserted wherever the metric is actually evaluated through
    `at` / `at_many` (cheap symmetric check plus Cholesky).
    """

    def __init__(self, dim: int, eval_fn: Callable[[np.ndarray], np.ndarray], *, flat: bool = False, check: bool = True):
        self.dim = int(dim)
        self._eval = eval_fn
        self.flat = bool(flat)
        self.check = bool(check)

    @classmethod
    def euclidean(cls, dim: int) -> "MetricField":
        eye = np.eye(dim)

        def ev(points):
            return np.broadcast_to(eye, (len(points), dim, dim)).copy()

        return cls(dim, ev, flat=True, check=False)

    @classmethod
    def diagonal(cls, entries: Sequence[Polynomial | float]) -> "MetricField":
        dim = len(entries)

        def ev(points):
            out = np.zeros((len(points), dim, dim))
            for i, e in enumerate(entries):
                out[:, i, i] = e(points) if isinstance(e, Polynomial) else float(e)
            return out

        return cls(dim, ev)

    @classmethod
    def dense_polynomial(cls, entries: Sequence[Sequence[Polynomial]]) -> "MetricField":
        dim = len(entries)

        def ev(points):
            out = np.zeros((len(points), dim, dim))
            for i in range(dim):
                for j in range(dim):
                    out[:, i, j] = entries[i][j](points)
            return out

        return cls(dim, ev)

    def at_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points.reshape(1, -1)
        G = np.asarray(self._eval(points), dtype=np.float64)
        if self.check:
            if not np.allclose(G, np.swapaxes(G, 1, 2), atol=1e-12):
                raise ValueError("metric is not symmetric at an evaluated point")
            try:
                np.linalg.cholesky(G)
            except np.linalg.LinAlgError as exc:
                raise ValueError("metric is not positive-definite at an evaluated point") from exc
        return G

    def at(self, x) -> np.ndarray:
        return self.at_many(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]

    def sqrt_det_many(self, points: np.ndarray) -> np.ndarray:
        if self.flat:
            points = np.asarray(points, dtype=np.float64)
            if points.ndim == 1:
                points = points.reshape(1, -1)
            return np.ones(len(points))
        return np.sqrt(np.linalg.det(self.at_many(points)))

    def sqrt_det(self, x) -> float:
        return float(self.sqrt_det_many(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])
