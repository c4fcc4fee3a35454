from fractions import Fraction

import numpy as np
import pytest

from fibreforms.polynomial import Polynomial, random_polynomial
from fibreforms.rng import philox


def test_ring_axioms_exact():
    rng = philox(1, 0)
    for trial in range(20):
        n = int(rng.integers(1, 5))
        a = random_polynomial(rng, n)
        b = random_polynomial(rng, n)
        c = random_polynomial(rng, n)
        assert (a + b) * c == a * c + b * c
        assert a * b == b * a
        assert (a - a).is_zero()


def test_diff_integrate_roundtrip():
    rng = philox(2, 0)
    for trial in range(20):
        n = int(rng.integers(1, 4))
        p = random_polynomial(rng, n)
        i = int(rng.integers(1, n + 1))
        assert p.integrate(i).diff(i) == p


def test_leibniz_for_diff():
    rng = philox(3, 0)
    for trial in range(20):
        n = int(rng.integers(1, 4))
        a, b = random_polynomial(rng, n), random_polynomial(rng, n)
        i = int(rng.integers(1, n + 1))
        assert (a * b).diff(i) == a.diff(i) * b + a * b.diff(i)


def test_substitute_is_evaluation_homomorphism():
    n = 2
    x1 = Polynomial.variable(n, 1)
    x2 = Polynomial.variable(n, 2)
    p = x1 * x1 + x2 * Fraction(3)
    images = [x2, x1 + x2]
    q = p.substitute(images)
    pt = (Fraction(1, 3), Fraction(2, 5))
    assert q.eval_exact(pt) == p.eval_exact((images[0].eval_exact(pt), images[1].eval_exact(pt)))


def test_float_eval_matches_exact():
    rng = philox(4, 0)
    p = random_polynomial(rng, 3)
    pts = rng.random((50, 3))
    vals = p(pts)
    for row, v in zip(pts, vals):
        exact = float(p.eval_exact([Fraction(x) for x in row]))
        assert v == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_variable_index_validation():
    with pytest.raises(ValueError):
        Polynomial.variable(2, 0)
    with pytest.raises(ValueError):
        Polynomial.variable(2, 3)
