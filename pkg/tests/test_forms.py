import itertools

import numpy as np
import pytest

from fibreforms.fields import SampledField
from fibreforms.forms import (
    Diffeomorphism,
    Form,
    exterior_derivative,
    pullback,
    random_form,
    wedge,
)
from fibreforms.multiindex import sort_with_parity
from fibreforms.polynomial import Polynomial
from fibreforms.rng import philox


def wedge_bruteforce(a: Form, b: Form) -> Form:
    """Independent permutation-expansion oracle over all index pairs."""
    out = Form.zero(a.chart_dim, a.degree + b.degree)
    for I, ca in a.terms.items():
        for J, cb in b.terms.items():
            merged, sign = sort_with_parity(I + J)
            if sign == 0:
                continue
            out = out + Form(a.chart_dim, len(merged), {merged: ca * cb * sign})
    return out


def test_wedge_example_x1dx1_x2dx2():
    N = 2
    x1, x2 = Polynomial.variable(N, 1), Polynomial.variable(N, 2)
    a = Form(N, 1, {(1,): x1})
    b = Form(N, 1, {(2,): x2})
    assert wedge(a, b) == Form(N, 2, {(1, 2): x1 * x2})


def test_wedge_matches_bruteforce_oracle():
    rng = philox(11, 0)
    for _ in range(30):
        N = int(rng.integers(2, 6))
        da = int(rng.integers(0, N))
        db = int(rng.integers(0, N - da + 1))
        a = random_form(rng, N, da)
        b = random_form(rng, N, db)
        assert wedge(a, b) == wedge_bruteforce(a, b)


def test_exterior_derivative_example():
    N = 2
    x1, x2 = Polynomial.variable(N, 1), Polynomial.variable(N, 2)
    a = Form(N, 1, {(1,): x1 * x2, (2,): x1 * x1})
    assert exterior_derivative(a) == Form(N, 2, {(1, 2): x1})


def test_pullback_unit_jacobian_example():
    N = 2
    x1, x2 = Polynomial.variable(N, 1), Polynomial.variable(N, 2)
    phi = Diffeomorphism([x1, x1 + x2])
    a = Form(N, 2, {(1, 2): Polynomial.constant(N, 1)})
    assert pullback(phi, a) == Form(N, 2, {(1, 2): Polynomial.constant(N, 1)})


def test_pullback_matches_numeric_jacobian_cofactor():
    rng = philox(12, 0)
    N = 3
    x = [Polynomial.variable(N, i + 1) for i in range(N)]
    phi = Diffeomorphism([x[0] + x[1] * x[2], x[1], x[2] + x[0] * x[0]])
    a = random_form(rng, N, 2)
    pa = pullback(phi, a)
    pts = rng.random((10, N))
    for pt in pts:
        J = phi.jacobian(pt)
        y = phi(pt)
        av = a.value_at(y)
        # chain rule per index pair: (phi* a)_{kl} = sum a_{ij} det J[[i,j],[k,l]]
        for k, l in itertools.combinations(range(1, N + 1), 2):
            want = 0.0
            for (i, j), c in av.items():
                minor = J[np.ix_([i - 1, j - 1], [k - 1, l - 1])]
                want += c * np.linalg.det(minor)
            got = pa.value_at(pt).get((k, l), 0.0)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_dd_zero_exact():
    rng = philox(13, 0)
    for _ in range(20):
        N = int(rng.integers(2, 6))
        a = random_form(rng, N, int(rng.integers(0, N - 1)))
        assert exterior_derivative(exterior_derivative(a)).is_zero()


def test_sampled_dd_vanishes():
    # per-axis derivative matrices commute, so d(d(a)) on sampled data is
    # zero up to roundoff at every resolution (stronger than the O(h^4)
    # truncation bound)
    box = ((0.0, 1.0), (0.0, 1.0))
    for m in (17, 33, 65):
        coeff = SampledField.from_function(
            box, (m, m), lambda p: np.sin(3 * p[:, 0]) * np.cos(2 * p[:, 1])
        )
        a = Form(2, 0, {(): coeff})
        dd = exterior_derivative(exterior_derivative(a))
        residual = max((c.max_abs() for c in dd.terms.values()), default=0.0)
        assert residual < 1e-10


def test_mixed_coefficient_kinds_rejected():
    box = ((0.0, 1.0), (0.0, 1.0))
    s = SampledField.from_function(box, (8, 8), lambda p: p[:, 0])
    with pytest.raises(ValueError):
        Form(2, 1, {(1,): s, (2,): Polynomial.variable(2, 1)})
