"""Radial homotopy operator on star-shaped domains.

K sends a degree-l form h to the (l-1)-form whose coefficient on
dx^{I minus i_a} is (-1)^{a-1} (x - x0)^{i_a} times the line integral
int_0^1 t^{l-1} h_I(x0 + t (x - x0)) dt. On closed forms d(K h) = h, and
d K + K d = id on forms of degree >= 1; both are exact in the Polynomial
representation (symbolic t-integral), and quadrature-accurate otherwise.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .bundle import StarDomain, check_closedness, horizontal_projection
from .fields import CallableField
from .forms import Form
from .multiindex import MultiIndex
from .polynomial import Polynomial

GL_NODES_T = 16


def _poly_line_integral(c: Polynomial, x0, ell: int) -> Polynomial:
    """Exact int_0^1 t^{ell-1} c(x0 + t(x - x0)) dt as a polynomial in x."""
    N = c.nvars
    # work in N+1 variables, t last
    images = []
    for i in range(1, N + 1):
        xi = Polynomial.variable(N + 1, i)
        t = Polynomial.variable(N + 1, N + 1)
        a = Fraction(x0[i - 1])
        images.append(Polynomial.constant(N + 1, a) + t * (xi - Polynomial.constant(N + 1, a)))
    lifted = c.substitute(images) * Polynomial.variable(N + 1, N + 1) ** (ell - 1)
    # integrate monomials in t over [0, 1]
    out_terms: dict[tuple, Fraction] = {}
    for e, coeff in lifted.terms.items():
        xexp = e[:N]
        out_terms[xexp] = out_terms.get(xexp, Fraction(0)) + coeff / (e[N] + 1)
    return Polynomial(N, out_terms)


def _numeric_line_integral(c, x0: np.ndarray, ell: int) -> CallableField:
    nodes, weights = np.polynomial.legendre.leggauss(GL_NODES_T)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights * t ** (ell - 1)

    def fn(points, _c=c, _x0=x0, _t=t, _w=w):
        points = np.asarray(points, dtype=np.float64)
        acc = np.zeros(len(points))
        for ti, wi in zip(_t, _w):
            acc += wi * np.asarray(_c(_x0 + ti * (points - _x0)), dtype=np.float64)
        return acc

    return CallableField(len(x0), fn)


def homotopy_operator(h: Form, dom: StarDomain) -> Form:
    """Apply K; no closedness requirement (used for the d K + K d identity)."""
    N = h.chart_dim
    if dom.dim != N:
        raise ValueError("domain dimension mismatch")
    ell = h.degree
    if ell < 1:
        raise ValueError("homotopy operator needs degree >= 1")
    x0 = dom.center
    exact = h.kind() == "polynomial"
    out = Form.zero(N, ell - 1)
    for I, c in h.terms.items():
        if exact:
            line = _poly_line_integral(c, x0, ell)
        else:
            line = _numeric_line_integral(c, x0, ell)
        for a, i_a in enumerate(I):
            rest: MultiIndex = I[:a] + I[a + 1 :]
            sign = (-1) ** a
            if exact:
                radial = Polynomial.variable(N, i_a) - Polynomial.constant(N, Fraction(x0[i_a - 1]))
                coeff = line * radial * sign
                if coeff.is_zero():
                    continue
            else:
                x0_comp = float(x0[i_a - 1])

                def coeff_fn(points, _line=line, _ia=i_a, _x0c=x0_comp, _s=sign):
                    points = np.asarray(points, dtype=np.float64)
                    return _s * (points[:, _ia - 1] - _x0c) * _line(points)

                coeff = CallableField(N, coeff_fn)
            out = out + Form(N, ell - 1, {rest: coeff})
    return out


def poincare_antiderivative(h: Form, dom: StarDomain, chart=None, tolerance: float = 1e-8) -> Form:
    """Antiderivative xi with d-bar(xi) = h for closed h on a star domain."""
    if chart is not None:
        closed, residual = check_closedness(
            horizontal_projection(h, chart), tolerance=tolerance
        )
    else:
        from .forms import exterior_derivative

        residual = exterior_derivative(h)
        if residual.kind() == "polynomial":
            closed = residual.is_zero()
        else:
            axes = [np.linspace(lo, hi, 7) for lo, hi in dom.box]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=-1)
            closed = residual.max_abs_on(pts) < tolerance
    if not closed:
        raise ValueError("input form is not closed beyond tolerance")
    return homotopy_operator(h, dom)
