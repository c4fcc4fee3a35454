from fractions import Fraction

import numpy as np
import pytest

from fibreforms.forms import Diffeomorphism
from fibreforms.metric import MetricField
from fibreforms.polynomial import Polynomial
from fibreforms.quasiconvexity import (
    Integrand,
    change_of_variables_reduction,
    euclidean_qc_test,
    gap_value,
    make_bubble,
    make_laminate,
    paired_qc_gaps,
    riemannian_qc_test,
    volume_growth_factor,
)
from fibreforms.rng import philox

UNIT = ((0.0, 1.0), (0.0, 1.0))
CENTER = (0.5, 0.5)


def quad_integrand(dim):
    return Integrand(dim, lambda x, p: np.sum(p * p, axis=-1))


def test_volume_factor_curved_example():
    # g = diag(1, (1+x1)^2), x0 = origin: sqrt(det g(x0)) = 1, V = area
    N = 2
    x1 = Polynomial.variable(N, 1)
    one = Polynomial.constant(N, 1)
    g = MetricField.diagonal([one, (one + x1) * (one + x1)])
    assert volume_growth_factor((0.0, 0.0), UNIT, g) == pytest.approx(1.0, abs=1e-10)


def test_test_functions_vanish_on_boundary():
    rng = philox(51, 0)
    b = np.array(UNIT)
    edge = []
    for a in range(2):
        for v in (0.0, 1.0):
            t = rng.random((25, 2))
            t[:, a] = v
            edge.append(t)
    edge = np.concatenate(edge)
    for maker in (make_bubble, make_laminate):
        tf = maker(philox(52, 0), UNIT)
        assert np.max(np.abs(tf.zeta(edge))) < 1e-12


def test_convex_quadratic_never_violates():
    rep = riemannian_qc_test(
        quad_integrand(2), CENTER, [0.3, -0.1], UNIT, MetricField.euclidean(2),
        trials=200, seed=5,
    )
    assert not rep.violation_found


def test_negated_quadratic_violates_with_certificate():
    F = Integrand(2, lambda x, p: -np.sum(p * p, axis=-1))
    rep = riemannian_qc_test(F, CENTER, [0.0, 0.0], UNIT, MetricField.euclidean(2), trials=50, seed=6)
    assert rep.violation_found and rep.certified
    assert rep.worst_gap < -rep.tolerance


def test_double_well_violates():
    e1 = np.array([1.0, 0.0])
    F = Integrand(2, lambda x, p: np.minimum(np.sum((p - e1) ** 2, -1), np.sum((p + e1) ** 2, -1)))
    rep = riemannian_qc_test(F, CENTER, [0.0, 0.0], UNIT, MetricField.euclidean(2), trials=500, seed=7)
    assert rep.violation_found and rep.certified
    assert rep.witness is not None and rep.witness["family"] == "laminate"


def test_euclidean_is_bitwise_identity_metric_run():
    F = quad_integrand(2)
    r1 = riemannian_qc_test(F, CENTER, [0.2, 0.4], UNIT, MetricField.euclidean(2), trials=25, seed=9, record_gaps=True)
    r2 = euclidean_qc_test(F, CENTER, [0.2, 0.4], UNIT, trials=25, seed=9, record_gaps=True)
    assert r1.gaps == r2.gaps
    assert r1.worst_gap == r2.worst_gap


def test_change_of_variables_pointwise():
    N = 2
    x1 = Polynomial.variable(N, 1)
    one = Polynomial.constant(N, 1)
    g = MetricField.diagonal([one, (one + x1) * (one + x1)])
    A = [[Fraction(2), Fraction(0)], [Fraction(0), Fraction(1, 2)]]
    b = [Fraction(1, 10), Fraction(0)]
    phi = Diffeomorphism.affine(A, b)
    F = quad_integrand(N)
    Fhat = change_of_variables_reduction(F, phi, g)
    xhat = np.array([[0.3, 0.6]])
    phat = np.array([[0.5, -0.2]])
    y = phi(xhat)
    J = phi.jacobian(xhat)[0]
    p = np.linalg.solve(J.T, phat[0])
    want = g.sqrt_det(y[0]) * float(F(y, p.reshape(1, -1))[0])
    assert float(Fhat(xhat, phat)[0]) == pytest.approx(want, rel=1e-12)


def test_paired_gaps_scale_by_sqrt_det():
    N = 2
    x1 = Polynomial.variable(N, 1)
    one = Polynomial.constant(N, 1)
    g = MetricField.diagonal([one + x1 * Fraction(1, 2), Polynomial.constant(N, 2)])
    phi = Diffeomorphism.affine(
        [[Fraction(3, 2), Fraction(0)], [Fraction(0), Fraction(1)]], [Fraction(0), Fraction(0)]
    )
    pairs = paired_qc_gaps(quad_integrand(N), phi, g, UNIT, (0.4, 0.5), (0.2, -0.3), trials=6, seed=3)
    x0 = phi(np.array([0.4, 0.5]))
    s0 = g.sqrt_det(x0)
    for gr, ge in pairs:
        assert ge / gr == pytest.approx(s0, rel=1e-9)


def test_gap_value_flags_infinite_integrand():
    F = Integrand(2, lambda x, p: np.where(np.sum(p * p, -1) > 0.0, np.inf, 0.0))
    tf = make_laminate(philox(99, 0), UNIT)
    with pytest.raises(FloatingPointError):
        gap_value(F, CENTER, [0.0, 0.0], UNIT, MetricField.euclidean(2), tf)
