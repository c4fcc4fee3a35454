from fractions import Fraction

import numpy as np
import pytest

from fibreforms.bundle import BundleChart, StarDomain
from fibreforms.forms import Form, exterior_derivative
from fibreforms.metric import MetricField
from fibreforms.minimizer import (
    DiscreteField,
    gradient_check,
    linear_solve_oracle,
    minimize,
    objective,
    refinement_study,
)
from fibreforms.polynomial import Polynomial
from fibreforms.quadrature import integrate
from fibreforms.relaxation import (
    ConstantCost,
    DoubleWellCost,
    GaugeForm,
    QuadraticCost,
    ZeroCost,
    relax,
)

N = 2
BOX = ((0.0, 1.0), (0.0, 1.0))


def make_problem(cost, gauge_poly=None, metric=None, resolution=17):
    chart = BundleChart(n=1, k=1, metric=metric or MetricField.euclidean(N), box=BOX, phi=None)
    dom = StarDomain(BOX)
    gauge = Form.zero(N, 0) if gauge_poly is None else Form.from_scalar(gauge_poly, N)
    from fibreforms.relaxation import Discretization

    return relax(cost, GaugeForm(gauge), dom, chart, s=2.0, discretization=Discretization(resolution=resolution))


def quadratic_gauge():
    x1, x2 = Polynomial.variable(N, 1), Polynomial.variable(N, 2)
    return x1 * x1 * x2 + x2 * Fraction(2)


def test_objective_zero_cost_and_at_zero_gauge():
    prob = make_problem(ZeroCost(1))
    xi = DiscreteField(prob, 17)
    assert objective(prob, xi) == 0.0
    prob_q = make_problem(QuadraticCost(1))
    assert objective(prob_q, DiscreteField(prob_q, 17)) == 0.0


def test_objective_matches_symbolic_integral():
    # |d xi|^2 for a known polynomial xi, against exact quadrature
    prob = make_problem(QuadraticCost(1), gauge_poly=quadratic_gauge())
    xi = DiscreteField(prob, 33)
    w = exterior_derivative(prob.gauge.xi_tilde)
    want = integrate(
        lambda p: sum(np.asarray(c(p)) ** 2 for c in w.terms.values()), BOX, order=8
    )
    assert objective(prob, xi) == pytest.approx(want, rel=1e-7)


def test_minimize_matches_linear_solve_oracle():
    prob = make_problem(QuadraticCost(1), gauge_poly=quadratic_gauge())
    xi_hat, rep = minimize(prob, "gauge", resolution=17)
    _, f_oracle = linear_solve_oracle(prob, 17)
    assert rep.objective == pytest.approx(f_oracle, rel=1e-8)
    assert rep.descent_holds()


def test_boundary_pinned_bit_exactly():
    prob = make_problem(QuadraticCost(1), gauge_poly=quadratic_gauge())
    xi_hat, _ = minimize(prob, "gauge", resolution=9)
    for M in xi_hat.indices:
        boundary = ~xi_hat.interior
        assert np.array_equal(xi_hat.values[M][boundary], xi_hat.gauge_values[M][boundary])


def test_constant_cost_minimized_at_gauge():
    prob = make_problem(ConstantCost(1, 3.0))
    xi_hat, rep = minimize(prob, "gauge", resolution=9)
    assert xi_hat.max_offset() == 0.0
    assert rep.objective == pytest.approx(3.0, rel=1e-12)  # a * vol


def test_gradient_check_quadratic():
    prob = make_problem(QuadraticCost(1), gauge_poly=quadratic_gauge())
    xi = DiscreteField(prob, 17)
    assert gradient_check(prob, xi, directions=20, seed=2) <= 1e-6


def test_gradient_check_rejects_nonsmooth_costs():
    prob = make_problem(ZeroCost(1))

    class NoGrad(ZeroCost):
        def gauged_batch_grad(self, points, wv, n):
            return None

    prob.cost = NoGrad(1)
    with pytest.raises(ValueError):
        gradient_check(prob, DiscreteField(prob, 9))


def test_refinement_constant_cost_flat():
    prob = make_problem(ConstantCost(1, 2.0))
    st = refinement_study(prob, [9, 17], max_iterations=50)
    vals = [r.objective for r in st.rows]
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)
    assert not st.relaxation_gap_suspected


def test_refinement_rejects_unsorted():
    prob = make_problem(ConstantCost(1, 2.0))
    with pytest.raises(ValueError):
        refinement_study(prob, [17, 9])


def test_oracle_rejects_nonaffine_gradient():
    prob = make_problem(DoubleWellCost(1, (1,)))
    with pytest.raises(ValueError):
        linear_solve_oracle(prob, 9)


def test_resolution_validation():
    prob = make_problem(ZeroCost(1))
    with pytest.raises(ValueError):
        DiscreteField(prob, 8)
    with pytest.raises(ValueError):
        DiscreteField(prob, 5)
