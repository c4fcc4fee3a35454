from fractions import Fraction

import pytest

from fibreforms.bundle import StarDomain
from fibreforms.forms import Form, exterior_derivative, random_form
from fibreforms.homotopy import homotopy_operator, poincare_antiderivative
from fibreforms.polynomial import Polynomial
from fibreforms.rng import philox


def unit_domain(N):
    return StarDomain(tuple((0.0, 1.0) for _ in range(N)), center=tuple(0.5 for _ in range(N)))


def origin_domain(N):
    return StarDomain(tuple((-1.0, 1.0) for _ in range(N)), center=tuple(0.0 for _ in range(N)))


def test_area_form_antiderivative():
    # K(dx1 ^ dx2) about the origin = (x1 dx2 - x2 dx1) / 2
    N = 2
    dom = origin_domain(N)
    h = Form(N, 2, {(1, 2): Polynomial.constant(N, 1)})
    x1, x2 = Polynomial.variable(N, 1), Polynomial.variable(N, 2)
    want = Form(N, 1, {(1,): x2 * Fraction(-1, 2), (2,): x1 * Fraction(1, 2)})
    assert homotopy_operator(h, dom) == want


def test_homotopy_identity_on_nonclosed_forms():
    rng = philox(31, 0)
    for _ in range(15):
        N = int(rng.integers(2, 5))
        ell = int(rng.integers(1, N + 1))
        a = random_form(rng, N, ell)
        dom = unit_domain(N)
        lhs = homotopy_operator(exterior_derivative(a), dom) + exterior_derivative(homotopy_operator(a, dom))
        assert lhs == a


def test_antiderivative_of_exact_forms():
    rng = philox(32, 0)
    for _ in range(15):
        N = int(rng.integers(2, 5))
        ell = int(rng.integers(0, N))
        xi = random_form(rng, N, ell)
        h = exterior_derivative(xi)
        dom = unit_domain(N)
        assert exterior_derivative(poincare_antiderivative(h, dom)) == h


def test_antiderivative_rejects_nonclosed():
    N = 2
    x2 = Polynomial.variable(N, 2)
    h = Form(N, 1, {(1,): x2 * Fraction(2)})  # d(h) = -2 dx1^dx2 != 0
    with pytest.raises(ValueError):
        poincare_antiderivative(h, unit_domain(N))
