"""Trivializing bundle charts and the horizontal-shadow calculus.

Coordinates 1..n are horizontal (base directions), n+1..n+k vertical
(fibre directions). The two central operations are the decomposition of
an exterior derivative into a horizontal part plus wedge pairs
d-bar(xi) = f + sum_i g_i ^ theta_i with closed constant-coefficient
theta_i, and its inverse reconstruction.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fields import Box, box_array
from .forms import Form, FormValue, exterior_derivative, wedge
from .metric import MetricField
from .multiindex import MultiIndex, insert_index, split_position
from .polynomial import Polynomial


@dataclass(frozen=True)
class BundleChart:
    """Trivializing chart of a bundle: base dim n, fibre dim k, metric, box."""

    n: int
    k: int
    metric: MetricField | None = None
    box: Box | None = None
    phi: object | None = None  # optional Diffeomorphism from a reference box

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ValueError("need n >= 1 and k >= 1")
        if self.metric is not None and self.metric.dim != self.dim:
            raise ValueError("metric dimension != n + k")

    @property
    def dim(self) -> int:
        return self.n + self.k

    def is_horizontal(self, idx: MultiIndex) -> bool:
        return all(i <= self.n for i in idx)

    def is_vertical(self, idx: MultiIndex) -> bool:
        return all(i > self.n for i in idx)


class StarDomain:
    """Coordinate box, star-shaped (hence contractible) about any interior center."""

    def __init__(self, box: Box, center: Sequence[float] | None = None):
        self.box = box_array(box)
        if center is None:
            center = 0.5 * (self.box[:, 0] + self.box[:, 1])
        self.center = np.asarray(center, dtype=np.float64)
        if len(self.center) != len(self.box):
            raise ValueError("center dimension mismatch")
        if np.any(self.center <= self.box[:, 0]) or np.any(self.center >= self.box[:, 1]):
            raise ValueError("star center must lie in the interior of the box")

    @property
    def dim(self) -> int:
        return len(self.box)

    def boundary_normal(self, x) -> np.ndarray:
        """Outward unit covector on a box face (axis-aligned)."""
        x = np.asarray(x, dtype=np.float64)
        nu = np.zeros(self.dim)
        for a in range(self.dim):
            if np.isclose(x[a], self.box[a, 0]):
                nu[a] = -1.0
                return nu
            if np.isclose(x[a], self.box[a, 1]):
                nu[a] = 1.0
                return nu
        raise ValueError("point is not on the box boundary")

    def boundary_samples(self, per_axis: int = 5) -> list[tuple[np.ndarray, np.ndarray]]:
        """(point, outward unit normal) on a tensor lattice of each face."""
        out = []
        d = self.dim
        for a in range(d):
            for side, val in enumerate(self.box[a]):
                nu = np.zeros(d)
                nu[a] = -1.0 if side == 0 else 1.0
                axes = [
                    np.linspace(lo, hi, per_axis) if b != a else np.array([val])
                    for b, (lo, hi) in enumerate(self.box)
                ]
                mesh = np.meshgrid(*axes, indexing="ij")
                pts = np.stack([m.ravel() for m in mesh], axis=-1)
                for p in pts:
                    out.append((p, nu.copy()))
        return out


@dataclass(frozen=True)
class ShadowEntry:
    """One (g, theta) pair with the provenance of its construction.

    base_index: the multi-index the entry came from (of xi for decompose,
    of the full term for projection); star: split position; j: derivative
    index (None for projection entries).
    """

    g: Form
    theta: Form
    base_index: MultiIndex
    star: int
    j: int | None = None


@dataclass
class ShadowData:
    """Horizontal part f plus the list of complementary wedge pairs."""

    ell: int
    chart: BundleChart
    f: Form
    entries: list[ShadowEntry] = field(default_factory=list)
    flagged_vertical: bool = False

    def __post_init__(self):
        if self.f.degree != self.ell:
            raise ValueError("f must have the target degree")
        for e in self.entries:
            if e.g.degree + e.theta.degree != self.ell:
                raise ValueError("entry degrees are not ell-complementary")
            if e.g.degree > self.ell - 1:
                raise ValueError("entry g exceeds degree ell - 1")


def entry_bound(n: int, k: int, ell: int) -> int:
    """Structural cap on the number of decomposition entries.

    Counts the (multi-index, derivative-axis) slots that do not land in
    the horizontal part: (n+k) * C(n+k, ell-1) minus the n * C(n, ell-1)
    purely-horizontal slots.
    """
    return (n + k) * math.comb(n + k, ell - 1) - n * math.comb(n, ell - 1)


def shadow_decompose(xi: Form, chart: BundleChart) -> ShadowData:
    """Split d-bar(xi) into f + sum g_i ^ theta_i with provenance.

    Exact for Polynomial coefficients. Entries are ordered
    lexicographically by (base multi-index, derivative index).
    """
    N = chart.dim
    n = chart.n
    if xi.chart_dim != N:
        raise ValueError("form does not live on the chart")
    ell = xi.degree + 1
    if ell > N:
        raise ValueError("derivative degree exceeds chart dimension")

    purely_vertical = (
        xi.degree >= 1 and bool(xi.terms) and all(chart.is_vertical(I) for I in xi.terms)
    )
    if purely_vertical:
        warnings.warn(
            "purely vertical input: no horizontal part exists; returning "
            "per-term entries that still reconstruct the derivative exactly",
            stacklevel=2,
        )

    f = Form.zero(N, ell)
    entries: list[ShadowEntry] = []
    for I in sorted(xi.terms):
        c = xi.terms[I]
        star = split_position(I, n)
        for j in range(1, N + 1):
            if j in I:
                continue
            dc = c.diff(j)
            if isinstance(dc, Polynomial) and dc.is_zero():
                continue
            if j <= n and star == len(I):
                # purely horizontal derivative of a horizontal component
                M, sign = insert_index(j, I)
                f = f + Form(N, ell, {M: dc * sign if sign != 1 else dc})
            elif j <= n:
                # horizontal derivative: g = dc dx^j ^ dx^{i_1..i_star}
                g_idx, sign = insert_index(j, I[:star])
                g = Form(N, star + 1, {g_idx: dc * sign if sign != 1 else dc})
                theta = Form.basis(N, I[star:])
                entries.append(ShadowEntry(g, theta, I, star, j))
            else:
                # vertical derivative: theta picks up dx^j and the sign (-1)^star
                g = (
                    Form(N, star, {I[:star]: dc})
                    if star
                    else Form(N, 0, {(): dc})
                )
                th_idx, tsign = insert_index(j, I[star:])
                coeff = tsign * (-1) ** star
                theta = Form(N, ell - star, {th_idx: Polynomial.constant(N, coeff)})
                entries.append(ShadowEntry(g, theta, I, star, j))
    return ShadowData(ell, chart, f, entries, flagged_vertical=purely_vertical)


def shadow_reconstruct(sd: ShadowData) -> Form:
    """f + sum_i g_i ^ theta_i as an ell-form on the chart."""
    out = sd.f
    for e in sd.entries:
        out = out + wedge(e.g, e.theta)
    return out


def check_closedness(sd: ShadowData, tolerance: float = 1e-8, sample_points: np.ndarray | None = None) -> tuple[bool, Form]:
    """d-bar of the reconstruction; (closed?, residual form)."""
    residual = exterior_derivative(shadow_reconstruct(sd))
    if residual.kind() == "polynomial":
        return residual.is_zero(), residual
    if sample_points is None:
        box = sd.chart.box
        if box is None:
            raise ValueError("sampled/callable residual needs a chart box or sample points")
        b = box_array(box)
        axes = [np.linspace(lo, hi, 7) for lo, hi in b]
        mesh = np.meshgrid(*axes, indexing="ij")
        sample_points = np.stack([m.ravel() for m in mesh], axis=-1)
    return residual.max_abs_on(sample_points) < tolerance, residual


def horizontal_projection(w: Form, chart: BundleChart) -> ShadowData:
    """Canonical projection of an ell-form into (f; g_1.., theta_1..).

    Purely horizontal terms are collected in f; each mixed or vertical
    term contributes one merged entry g = coeff * dx^{horizontal prefix}
    with theta the remaining vertical factor, in lexicographic term order.
    """
    N = chart.dim
    if w.chart_dim != N:
        raise ValueError("form does not live on the chart")
    ell = w.degree
    f = Form.zero(N, ell)
    entries: list[ShadowEntry] = []
    for M in sorted(w.terms):
        c = w.terms[M]
        star = split_position(M, chart.n)
        if star == len(M):
            f = f + Form(N, ell, {M: c})
            continue
        g = Form(N, star, {M[:star]: c}) if star else Form(N, 0, {(): c})
        theta = Form.basis(N, M[star:])
        entries.append(ShadowEntry(g, theta, M, star, None))
    return ShadowData(ell, chart, f, entries)


def project_value(w: FormValue, n: int) -> tuple[FormValue, list[FormValue]]:
    """Value-level horizontal projection, canonical (lexicographic) order."""
    N = w.chart_dim
    fcoeffs = {}
    gs: list[FormValue] = []
    for M in sorted(w.coeffs):
        c = w.coeffs[M]
        star = split_position(M, n)
        if star == len(M):
            fcoeffs[M] = c
        else:
            gs.append(FormValue(N, star, {M[:star]: c}))
    return FormValue(N, w.degree, fcoeffs), gs
