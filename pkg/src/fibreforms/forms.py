"""Differential forms on an N-dimensional coordinate chart.

A Form keeps a sparse map multi-index -> coefficient field. Degree-raising
and algebraic operations implement the usual exterior calculus; everything
is exact when the coefficients are Polynomial.
"""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .fields import CallableField, CoefficientField, SampledField, field_kind
from .multiindex import (
    MultiIndex,
    all_multiindices,
    insert_index,
    merge_with_parity,
    validate_multiindex,
)
from .polynomial import Polynomial


class FormValue:
    """A form evaluated at a single point: just the coefficient table."""

    __slots__ = ("chart_dim", "degree", "coeffs")

    def __init__(self, chart_dim: int, degree: int, coeffs: Mapping[Sequence[int], float] | None = None):
        self.chart_dim = int(chart_dim)
        self.degree = int(degree)
        self.coeffs: dict[MultiIndex, float] = {}
        if coeffs:
            for idx, v in coeffs.items():
                idx = validate_multiindex(idx, self.chart_dim)
                if len(idx) != self.degree:
                    raise ValueError("valency mismatch in FormValue")
                self.coeffs[idx] = float(v)

    def scale(self, c: float) -> "FormValue":
        return FormValue(self.chart_dim, self.degree, {i: c * v for i, v in self.coeffs.items()})

    def sum_of_squares(self) -> float:
        return sum(v * v for v in self.coeffs.values())

    def __repr__(self):
        return f"FormValue(N={self.chart_dim}, degree={self.degree}, {self.coeffs})"


class Form:
    """Differential form of fixed degree with multi-index-keyed coefficients."""

    __slots__ = ("chart_dim", "degree", "terms")

    def __init__(self, chart_dim: int, degree: int, terms: Mapping[Sequence[int], CoefficientField] | None = None):
        self.chart_dim = int(chart_dim)
        self.degree = int(degree)
        if not 0 <= self.degree:
            raise ValueError("degree must be nonnegative")
        t: dict[MultiIndex, CoefficientField] = {}
        if terms and self.degree <= self.chart_dim:
            for idx, coeff in terms.items():
                idx = validate_multiindex(idx, self.chart_dim)
                if len(idx) != self.degree:
                    raise ValueError(f"multi-index {idx} has valency != degree {self.degree}")
                if isinstance(coeff, (int, float)):
                    coeff = Polynomial.constant(self.chart_dim, coeff)
                if isinstance(coeff, Polynomial) and coeff.is_zero():
                    continue
                t[idx] = coeff
        self.terms = t
        kinds = {field_kind(c) for c in t.values()}
        if len(kinds) > 1:
            raise ValueError("mixed coefficient representations within one form")

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, chart_dim: int, degree: int) -> "Form":
        return cls(chart_dim, degree)

    @classmethod
    def basis(cls, chart_dim: int, idx: Sequence[int]) -> "Form":
        """dx^{i1} ^ ... ^ dx^{il} with unit polynomial coefficient."""
        idx = validate_multiindex(idx, chart_dim)
        return cls(chart_dim, len(idx), {idx: Polynomial.constant(chart_dim, 1)})

    @classmethod
    def from_scalar(cls, coeff: CoefficientField, chart_dim: int) -> "Form":
        return cls(chart_dim, 0, {(): coeff})

    def kind(self) -> str:
        for c in self.terms.values():
            return field_kind(c)
        return "polynomial"

    def is_zero(self) -> bool:
        if not self.terms:
            return True
        return all(isinstance(c, Polynomial) and c.is_zero() for c in self.terms.values())

    # -- linear structure -------------------------------------------------
    def __add__(self, other: "Form") -> "Form":
        if self.chart_dim != other.chart_dim or self.degree != other.degree:
            raise ValueError("form dimension/degree mismatch in addition")
        t = dict(self.terms)
        for idx, c in other.terms.items():
            t[idx] = t[idx] + c if idx in t else c
        return Form(self.chart_dim, self.degree, t)

    def __neg__(self) -> "Form":
        return Form(self.chart_dim, self.degree, {i: -c for i, c in self.terms.items()})

    def __sub__(self, other: "Form") -> "Form":
        return self + (-other)

    def scale(self, c) -> "Form":
        return Form(self.chart_dim, self.degree, {i: coeff * c for i, coeff in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if self.chart_dim != other.chart_dim or self.degree != other.degree:
            return False
        return (self - other).is_zero()

    __hash__ = None

    # -- evaluation --------------------------------------------------------
    def value_at(self, x) -> dict[MultiIndex, float]:
        """Coefficients at one point: multi-index -> float."""
        x = np.asarray(x, dtype=np.float64)
        return {idx: float(c(x)) for idx, c in self.terms.items()}

    def values_at(self, points: np.ndarray) -> dict[MultiIndex, np.ndarray]:
        """Coefficients at many points: multi-index -> (P,) array."""
        points = np.asarray(points, dtype=np.float64)
        return {idx: np.asarray(c(points), dtype=np.float64) for idx, c in self.terms.items()}

    def max_abs_on(self, points: np.ndarray) -> float:
        vals = self.values_at(points)
        return max((float(np.max(np.abs(v))) for v in vals.values()), default=0.0)

    def __repr__(self):
        return f"Form(N={self.chart_dim}, degree={self.degree}, nterms={len(self.terms)})"


def wedge(a: Form, b: Form) -> Form:
    """Exterior product; exact for Polynomial coefficients."""
    if a.chart_dim != b.chart_dim:
        raise ValueError("wedge of forms on charts of different dimension")
    N = a.chart_dim
    deg = a.degree + b.degree
    if deg > N:
        return Form.zero(N, deg)
    t: dict[MultiIndex, CoefficientField] = {}
    for ia, ca in a.terms.items():
        for ib, cb in b.terms.items():
            idx, sign = merge_with_parity(ia, ib)
            if sign == 0:
                continue
            c = (ca * cb) * sign if sign != 1 else ca * cb
            t[idx] = t[idx] + c if idx in t else c
    return Form(N, deg, t)


def exterior_derivative(a: Form) -> Form:
    """d on the chart; exact for Polynomial, stencil-based for Sampled."""
    N = a.chart_dim
    if a.degree >= N:
        return Form.zero(N, a.degree + 1)
    t: dict[MultiIndex, CoefficientField] = {}
    for idx, c in a.terms.items():
        for j in range(1, N + 1):
            if j in idx:
                continue
            dc = c.diff(j)
            if isinstance(dc, Polynomial) and dc.is_zero():
                continue
            new_idx, sign = insert_index(j, idx)
            term = dc * sign if sign != 1 else dc
            t[new_idx] = t[new_idx] + term if new_idx in t else term
    return Form(N, a.degree + 1, t)


class Diffeomorphism:
    """Polynomial map between coordinate charts, with optional inverse.

    components[i] expresses target coordinate y^{i+1} as a polynomial in
    the source variables.
    """

    def __init__(self, components: Sequence[Polynomial], inverse: Sequence[Polynomial] | None = None):
        self.components = list(components)
        if not self.components:
            raise ValueError("need at least one component")
        self.source_dim = self.components[0].nvars
        self.target_dim = len(self.components)
        if any(c.nvars != self.source_dim for c in self.components):
            raise ValueError("component variable counts disagree")
        self.inverse_components = list(inverse) if inverse is not None else None

    @classmethod
    def identity(cls, n: int) -> "Diffeomorphism":
        comps = [Polynomial.variable(n, i) for i in range(1, n + 1)]
        return cls(comps, inverse=list(comps))

    @classmethod
    def affine(cls, A: np.ndarray, b: np.ndarray) -> "Diffeomorphism":
        """y = A x + b, with exact rational inverse when A has Fraction entries."""
        from fractions import Fraction

        A = np.asarray(A, dtype=object)
        b = np.asarray(b, dtype=object)
        n = A.shape[0]
        comps = []
        for i in range(n):
            p = Polynomial.constant(n, Fraction(b[i]))
            for j in range(n):
                if A[i, j]:
                    p = p + Polynomial.variable(n, j + 1) * Fraction(A[i, j])
            comps.append(p)
        # exact inverse by Gauss-Jordan over Fractions
        M = [[Fraction(A[i][j]) for j in range(n)] for i in range(n)]
        Inv = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
        for col in range(n):
            piv = next((r for r in range(col, n) if M[r][col] != 0), None)
            if piv is None:
                raise ValueError("affine map is singular")
            M[col], M[piv] = M[piv], M[col]
            Inv[col], Inv[piv] = Inv[piv], Inv[col]
            d = M[col][col]
            M[col] = [v / d for v in M[col]]
            Inv[col] = [v / d for v in Inv[col]]
            for r in range(n):
                if r != col and M[r][col] != 0:
                    f = M[r][col]
                    M[r] = [u - f * v for u, v in zip(M[r], M[col])]
                    Inv[r] = [u - f * v for u, v in zip(Inv[r], Inv[col])]
        inv_comps = []
        for i in range(n):
            p = Polynomial.constant(n, 0)
            for j in range(n):
                if Inv[i][j]:
                    p = p + (Polynomial.variable(n, j + 1) - Polynomial.constant(n, Fraction(b[j]))) * Inv[i][j]
            inv_comps.append(p)
        return cls(comps, inverse=inv_comps)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        squeeze = points.ndim == 1
        if squeeze:
            points = points.reshape(1, -1)
        out = np.stack([c(points) for c in self.components], axis=-1)
        return out[0] if squeeze else out

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        """J[p, i, j] = d y^{i+1} / d x^{j+1} at points[p]."""
        points = np.asarray(points, dtype=np.float64)
        squeeze = points.ndim == 1
        if squeeze:
            points = points.reshape(1, -1)
        J = np.empty((points.shape[0], self.target_dim, self.source_dim))
        for i, c in enumerate(self.components):
            for j in range(self.source_dim):
                J[:, i, j] = c.diff(j + 1)(points)
        return J[0] if squeeze else J

    def inverse(self) -> "Diffeomorphism":
        if self.inverse_components is None:
            raise ValueError("inverse not available for this map")
        return Diffeomorphism(self.inverse_components, inverse=self.components)


def pullback(phi: Diffeomorphism, a: Form) -> Form:
    """Pullback phi^# a; exact for Polynomial forms under polynomial phi."""
    if a.chart_dim != phi.target_dim:
        raise ValueError("form lives on a chart of different dimension than phi's target")
    if a.kind() != "polynomial":
        raise ValueError("pullback is implemented for Polynomial forms")
    n_src = phi.source_dim
    # 1-forms d(phi^i) on the source chart
    dphi: dict[int, Form] = {}

    def dphi_form(i: int) -> Form:
        if i not in dphi:
            comp = phi.components[i - 1]
            t = {}
            for j in range(1, n_src + 1):
                dc = comp.diff(j)
                if not dc.is_zero():
                    t[(j,)] = dc
            dphi[i] = Form(n_src, 1, t)
        return dphi[i]

    out = Form.zero(n_src, a.degree)
    for idx, c in a.terms.items():
        pulled_coeff = c.substitute(phi.components)
        term = Form.from_scalar(pulled_coeff, n_src)
        for i in idx:
            term = wedge(term, dphi_form(i))
        out = out + term
    return out


def random_form(rng, chart_dim: int, degree: int, max_degree: int = 2, max_terms: int = 3, term_prob: float = 0.7) -> Form:
    """Random Polynomial form for the property/acceptance suites."""
    from .polynomial import random_polynomial

    t = {}
    for idx in all_multiindices(chart_dim, degree):
        if rng.random() < term_prob:
            t[idx] = random_polynomial(rng, chart_dim, max_degree=max_degree, max_terms=max_terms)
    if not t:
        idx = next(iter(all_multiindices(chart_dim, degree)))
        t[idx] = random_polynomial(rng, chart_dim, max_degree=max_degree, max_terms=max_terms)
    return Form(chart_dim, degree, t)
