"""Coefficient fields for differential forms.

Three representation kinds share one small protocol (evaluate, derive,
combine): exact Polynomial for the algebraic layer, Sampled grids and
black-box Callables for the analytic/optimization layer.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .polynomial import Polynomial
from .stencil import apply_along_axis, derivative_matrix

Box = Sequence[tuple[float, float]]  # per-axis (lo, hi)


def box_array(box: Box) -> np.ndarray:
    b = np.asarray(box, dtype=np.float64)
    if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 1] <= b[:, 0]):
        raise ValueError("box must be a list of (lo, hi) pairs with lo < hi")
    return b


class SampledField:
    """Scalar field sampled on a regular grid over a box.

    Off-grid evaluation uses tensor-product cubic interpolation; partial
    derivatives use the shared 4th-order stencil on the nodal values.
    """

    kind = "sampled"

    def __init__(self, box: Box, values: np.ndarray):
        self.box = box_array(box)
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim != len(self.box):
            raise ValueError("grid rank does not match box dimension")
        self.shape = self.values.shape
        self.nvars = len(self.box)
        self.spacing = tuple(
            (hi - lo) / (m - 1) for (lo, hi), m in zip(self.box, self.shape)
        )
        self._interp = None

    @classmethod
    def from_function(cls, box: Box, shape: Sequence[int], fn) -> "SampledField":
        b = box_array(box)
        axes = [np.linspace(lo, hi, m) for (lo, hi), m in zip(b, shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = np.asarray(fn(pts), dtype=np.float64).reshape(tuple(shape))
        return cls(box, vals)

    def grid_axes(self) -> list[np.ndarray]:
        return [np.linspace(lo, hi, m) for (lo, hi), m in zip(self.box, self.shape)]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        from scipy.interpolate import RegularGridInterpolator

        points = np.asarray(points, dtype=np.float64)
        squeeze = points.ndim == 1
        if squeeze:
            points = points.reshape(1, -1)
        if self._interp is None:
            method = "cubic" if min(self.shape) >= 4 else "linear"
            self._interp = RegularGridInterpolator(
                self.grid_axes(), self.values, method=method,
                bounds_error=False, fill_value=None,
            )
        out = self._interp(points)
        return out[0] if squeeze else out

    def diff(self, i: int) -> "SampledField":
        D = derivative_matrix(self.shape[i - 1], self.spacing[i - 1])
        return SampledField(self.box, apply_along_axis(D, self.values, i - 1))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    # pointwise algebra on matching grids
    def _coerce(self, other):
        if isinstance(other, SampledField):
            if other.shape != self.shape or not np.array_equal(other.box, self.box):
                raise ValueError("sampled fields live on different grids")
            return other.values
        return float(other)

    def __add__(self, other):
        return SampledField(self.box, self.values + self._coerce(other))

    def __mul__(self, other):
        return SampledField(self.box, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SampledField(self.box, -self.values)

    def __sub__(self, other):
        return SampledField(self.box, self.values - self._coerce(other))


class CallableField:
    """Black-box scalar field; derivatives via 4th-order central differences."""

    kind = "callable"

    def __init__(self, nvars: int, fn: Callable[[np.ndarray], np.ndarray], fd_step: float = 1e-4):
        self.nvars = int(nvars)
        self.fn = fn
        self.fd_step = float(fd_step)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        squeeze = points.ndim == 1
        if squeeze:
            points = points.reshape(1, -1)
        out = np.asarray(self.fn(points), dtype=np.float64)
        return out[0] if squeeze else out

    def diff(self, i: int) -> "CallableField":
        h = self.fd_step
        base = self.fn

        def d(points, _base=base, _i=i - 1, _h=h):
            points = np.asarray(points, dtype=np.float64)
            shifted = [points.copy() for _ in range(4)]
            for arr, s in zip(shifted, (-2 * _h, -_h, _h, 2 * _h)):
                arr[:, _i] += s
            f_m2, f_m1, f_p1, f_p2 = (np.asarray(_base(a), dtype=np.float64) for a in shifted)
            return (f_m2 - 8.0 * f_m1 + 8.0 * f_p1 - f_p2) / (12.0 * _h)

        return CallableField(self.nvars, d, fd_step=h)

    def __add__(self, other):
        o = other if isinstance(other, CallableField) else CallableField(self.nvars, lambda p, v=float(other): np.full(len(p), v))
        return CallableField(self.nvars, lambda p, a=self.fn, b=o: np.asarray(a(p)) + np.asarray(b(p)))

    def __mul__(self, other):
        if isinstance(other, CallableField):
            return CallableField(self.nvars, lambda p, a=self.fn, b=other: np.asarray(a(p)) * np.asarray(b(p)))
        c = float(other)
        return CallableField(self.nvars, lambda p, a=self.fn, c=c: np.asarray(a(p)) * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-(other if isinstance(other, CallableField) else CallableField(self.nvars, lambda p, v=float(other): np.full(len(p), v))))


CoefficientField = Polynomial | SampledField | CallableField


def field_kind(c: CoefficientField) -> str:
    return "polynomial" if isinstance(c, Polynomial) else c.kind


def field_nvars(c: CoefficientField) -> int:
    return c.nvars
