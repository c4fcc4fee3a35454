"""Cost functions, gauge forms and the gauged relaxation of the action.

The original action integrates a cost of the tuple (f; g_1..g_I); the
gauged problem integrates cost(horizontal projection of d-bar(xi)) over
potentials xi agreeing with the gauge on the boundary. Both objective
evaluations live here, sharing one quadrature so the equivalence can be
checked to floating-point accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bundle import (
    BundleChart,
    ShadowData,
    ShadowEntry,
    StarDomain,
    check_closedness,
    horizontal_projection,
    project_value,
    shadow_decompose,
)
from .comass import comass_value
from .forms import Form, FormValue, exterior_derivative, wedge
from .homotopy import poincare_antiderivative
from .metric import MetricField
from .multiindex import MultiIndex
from .quadrature import box_rule


@dataclass(frozen=True)
class GrowthConstants:
    """Two-sided s-power growth envelope of a cost."""

    a1: float
    a2: float
    b1: float
    b2: float
    s: float

    def __post_init__(self):
        if not (self.b1 > 0 and self.b2 > 0 and self.s > 1):
            raise ValueError("need b1, b2 > 0 and s > 1")


class CostFunction:
    """Extended-real cost of a shadow tuple.

    Subclasses implement eval_tuple; vectorized gauged evaluation on
    batches of full-form coefficient tables (and its derivative) may be
    provided for the optimizer's hot path.
    """

    def __init__(self, ell: int, growth: GrowthConstants | None = None):
        self.ell = int(ell)
        self.growth = growth

    def eval_tuple(self, x, fv: FormValue, gvs: list[FormValue]) -> float:
        raise NotImplementedError

    # vectorized hooks (optional): points (P, N), wv maps multi-index -> (P,)
    def gauged_batch(self, points: np.ndarray, wv: dict[MultiIndex, np.ndarray], n: int) -> np.ndarray | None:
        return None

    def gauged_batch_grad(self, points: np.ndarray, wv: dict[MultiIndex, np.ndarray], n: int) -> dict[MultiIndex, np.ndarray] | None:
        return None


class ZeroCost(CostFunction):
    def eval_tuple(self, x, fv, gvs):
        return 0.0

    def gauged_batch(self, points, wv, n):
        return np.zeros(len(points))

    def gauged_batch_grad(self, points, wv, n):
        return {M: np.zeros_like(v) for M, v in wv.items()}


class ConstantCost(CostFunction):
    def __init__(self, ell: int, value: float):
        super().__init__(ell)
        self.value = float(value)

    def eval_tuple(self, x, fv, gvs):
        return self.value

    def gauged_batch(self, points, wv, n):
        return np.full(len(points), self.value)

    def gauged_batch_grad(self, points, wv, n):
        return {M: np.zeros_like(v) for M, v in wv.items()}


class QuadraticCost(CostFunction):
    """Sum of squared coefficients of the tuple (all components)."""

    def __init__(self, ell: int):
        super().__init__(ell, growth=GrowthConstants(0.0, 0.0, 1.0, 1.0, 2.0))

    def eval_tuple(self, x, fv, gvs):
        return fv.sum_of_squares() + sum(g.sum_of_squares() for g in gvs)

    def gauged_batch(self, points, wv, n):
        out = np.zeros(len(points))
        for v in wv.values():
            out += v * v
        return out

    def gauged_batch_grad(self, points, wv, n):
        return {M: 2.0 * v for M, v in wv.items()}


class ComassPowerCost(CostFunction):
    """(comass(f) + sum_i comass(g_i))^s under a metric field."""

    def __init__(self, ell: int, s: float, metric: MetricField, restarts: int = 8, iters: int = 60, declare_growth: bool = True):
        super().__init__(ell, growth=GrowthConstants(0.0, 0.0, 1.0, 1.0, s) if declare_growth else None)
        self.s = float(s)
        self.metric = metric
        self.restarts = restarts
        self.iters = iters

    def eval_tuple(self, x, fv, gvs):
        gx = self.metric.at(np.asarray(x, dtype=np.float64))
        t = comass_value(fv, gx, restarts=self.restarts, iters=self.iters)[0]
        for g in gvs:
            t += comass_value(g, gx, restarts=self.restarts, iters=self.iters)[0]
        return t ** self.s


class DoubleWellCost(CostFunction):
    """min(|w - E|^2, |w + E|^2) on full coefficient tables.

    E is the indicator of one designated component; the classic
    nonquasiconvex two-well integrand for relaxation-gap experiments.
    """

    def __init__(self, ell: int, well_index: MultiIndex):
        super().__init__(ell)
        self.well_index = tuple(well_index)

    def _wells(self, wv):
        plus = np.zeros_like(next(iter(wv.values())))
        minus = np.zeros_like(plus)
        for M, v in wv.items():
            e = 1.0 if M == self.well_index else 0.0
            plus += (v - e) ** 2
            minus += (v + e) ** 2
        return plus, minus

    def eval_tuple(self, x, fv, gvs):
        # evaluate on the merged table: reassemble full coefficients
        table = dict(fv.coeffs)
        for g in gvs:
            for M, v in g.coeffs.items():
                table[M] = table.get(M, 0.0) + v
        sq_p = sum((v - (1.0 if M == self.well_index else 0.0)) ** 2 for M, v in table.items())
        sq_m = sum((v + (1.0 if M == self.well_index else 0.0)) ** 2 for M, v in table.items())
        if self.well_index not in table:
            sq_p += 1.0
            sq_m += 1.0
        return min(sq_p, sq_m)

    def gauged_batch(self, points, wv, n):
        if self.well_index not in wv:
            wv = dict(wv)
            wv[self.well_index] = np.zeros(len(points))
        plus, minus = self._wells(wv)
        return np.minimum(plus, minus)

    def gauged_batch_grad(self, points, wv, n):
        if self.well_index not in wv:
            wv = dict(wv)
            wv[self.well_index] = np.zeros(len(points))
        plus, minus = self._wells(wv)
        take_plus = plus <= minus
        out = {}
        for M, v in wv.items():
            e = 1.0 if M == self.well_index else 0.0
            out[M] = np.where(take_plus, 2.0 * (v - e), 2.0 * (v + e))
        return out


class GaugeForm:
    """Fixed ell-form encoding boundary data for the gauged class."""

    def __init__(self, xi_tilde: Form):
        self.xi_tilde = xi_tilde

    @property
    def degree(self) -> int:
        return self.xi_tilde.degree


@dataclass(frozen=True)
class Discretization:
    resolution: int = 17
    quadrature_order: int = 8
    tolerance: float = 1e-8
    seed: int = 0


@dataclass
class GaugedProblem:
    """The relaxed problem: minimize the gauged action over potentials."""

    chart: BundleChart
    domain: StarDomain
    cost: CostFunction
    gauge: GaugeForm
    s: float
    discretization: Discretization = field(default_factory=Discretization)

    def __post_init__(self):
        if self.gauge.xi_tilde.chart_dim != self.chart.dim:
            raise ValueError("gauge form does not live on the chart")
        # the potential has degree ell - 1; the gauge fixes its boundary values
        if self.cost.ell != self.gauge.degree + 1 and self.gauge.degree != self.cost.ell - 1:
            raise ValueError("gauge degree must be cost degree - 1")

    def _quad(self):
        return box_rule(self.domain.box, self.discretization.quadrature_order)

    def _density(self, pts):
        m = self.chart.metric
        return np.ones(len(pts)) if m is None else m.sqrt_det_many(pts)

    def gauged_objective(self, xi: Form) -> float:
        """Integral of cost(pr_H(d-bar xi)) over the domain, +inf-aware."""
        w = exterior_derivative(xi)
        pts, wts = self._quad()
        dens = self._density(pts)
        wv = w.values_at(pts)
        batch = self.cost.gauged_batch(pts, wv, self.chart.n)
        if batch is None:
            batch = np.empty(len(pts))
            for p in range(len(pts)):
                value = FormValue(self.chart.dim, w.degree, {M: v[p] for M, v in wv.items()})
                fv, gvs = project_value(value, self.chart.n)
                batch[p] = self.cost.eval_tuple(pts[p], fv, gvs)
        if np.any(np.isposinf(batch)):
            return math.inf
        return float(np.dot(wts, batch * dens))

    def tuple_objective(self, f: Form, gs: Sequence[Form]) -> float:
        """The original action at a shadow tuple, on the same quadrature."""
        pts, wts = self._quad()
        dens = self._density(pts)
        fvals = f.values_at(pts)
        gvals = [g.values_at(pts) for g in gs]
        total = np.empty(len(pts))
        for p in range(len(pts)):
            fv = FormValue(self.chart.dim, f.degree, {M: v[p] for M, v in fvals.items()})
            gvs = [
                FormValue(self.chart.dim, g.degree, {M: v[p] for M, v in gv.items()})
                for g, gv in zip(gs, gvals)
            ]
            total[p] = self.cost.eval_tuple(pts[p], fv, gvs)
        if np.any(np.isposinf(total)):
            return math.inf
        return float(np.dot(wts, total * dens))

    def potential_to_tuple(self, xi: Form) -> ShadowData:
        return shadow_decompose(xi, self.chart)

    def tuple_to_potential(self, sd: ShadowData) -> Form:
        from .bundle import shadow_reconstruct

        return poincare_antiderivative(shadow_reconstruct(sd), self.domain, chart=self.chart)


def gauged_cost(cost: CostFunction, n: int) -> Callable:
    """The composition w -> cost(pr_H(w)) at the value level."""

    def c_gauge(x, w: FormValue) -> float:
        fv, gvs = project_value(w, n)
        return cost.eval_tuple(x, fv, gvs)

    return c_gauge


def relax(cost: CostFunction, gauge: GaugeForm, dom: StarDomain, chart: BundleChart, s: float, discretization: Discretization | None = None) -> GaugedProblem:
    """Package the gauged problem equivalent to the original action."""
    return GaugedProblem(
        chart=chart,
        domain=dom,
        cost=cost,
        gauge=gauge,
        s=s,
        discretization=discretization or Discretization(),
    )


@dataclass
class AdmissibilityReport:
    admissible: bool
    closedness_residual: float
    max_normal_pairing: float


def _normal_contraction(wv: dict[MultiIndex, float], vec: np.ndarray) -> float:
    """Max |coefficient| of the contraction of the form value with a vector."""
    out: dict[MultiIndex, float] = {}
    for M, c in wv.items():
        for a, idx in enumerate(M):
            rest = M[:a] + M[a + 1 :]
            out[rest] = out.get(rest, 0.0) + (-1) ** a * vec[idx - 1] * c
    return max((abs(v) for v in out.values()), default=0.0)


def check_admissible(
    f: Form,
    gs: Sequence[Form],
    thetas: Sequence[Form],
    gauge: GaugeForm,
    dom: StarDomain,
    chart: BundleChart,
    tolerance: float = 1e-8,
    boundary_per_axis: int = 5,
) -> AdmissibilityReport:
    """Weak closedness plus boundary tangency of f + sum g ^ theta + d-bar(gauge)."""
    if len(gs) != len(thetas):
        raise ValueError("need one theta per g")
    ell = f.degree
    entries = []
    for g, th in zip(gs, thetas):
        if g.degree + th.degree != ell:
            raise ValueError("theta is not ell-complementary to its g")
        entries.append(ShadowEntry(g, th, base_index=(), star=0, j=None))
    sd = ShadowData(ell, chart, f, entries)
    closed, residual = check_closedness(sd, tolerance=tolerance)
    if residual.kind() == "polynomial":
        res_norm = 0.0 if residual.is_zero() else _poly_max_abs(residual, dom)
    else:
        res_norm = _sample_max_abs(residual, dom)

    from .bundle import shadow_reconstruct

    omega = shadow_reconstruct(sd) + exterior_derivative(gauge.xi_tilde)
    metric = chart.metric or MetricField.euclidean(chart.dim)
    worst = 0.0
    for point, nu in dom.boundary_samples(per_axis=boundary_per_axis):
        gx = metric.at(point)
        vec = np.linalg.solve(gx, nu)  # raise the normal covector
        # normalize to unit metric length
        nrm = float(np.sqrt(vec @ gx @ vec))
        if nrm > 0:
            vec = vec / nrm
        wv = omega.value_at(point)
        worst = max(worst, _normal_contraction(wv, vec))
    return AdmissibilityReport(
        admissible=bool(res_norm < tolerance and worst < tolerance),
        closedness_residual=res_norm,
        max_normal_pairing=worst,
    )


def _grid_points(dom: StarDomain, per_axis: int = 7) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in dom.box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _poly_max_abs(form: Form, dom: StarDomain) -> float:
    return form.max_abs_on(_grid_points(dom))


def _sample_max_abs(form: Form, dom: StarDomain) -> float:
    return form.max_abs_on(_grid_points(dom))


def tuple_norm(fv: FormValue, gvs: Sequence[FormValue], gx: np.ndarray, restarts: int = 8, iters: int = 60) -> float:
    """Pointwise tuple norm: comass(f) + sum_i comass(g_i)."""
    t = comass_value(fv, gx, restarts=restarts, iters=iters)[0]
    for g in gvs:
        t += comass_value(g, gx, restarts=restarts, iters=iters)[0]
    return t


@dataclass
class CoercivityReport:
    holds: bool
    fitted: tuple[float, float, float, float]
    violations: list[int]
    slopes: list[float]


def coercivity_check(
    cost: CostFunction,
    samples: Sequence[tuple[np.ndarray, FormValue, list[FormValue]]],
    metric: MetricField,
    s: float | None = None,
    slope_floor_ratio: float = 0.01,
) -> CoercivityReport:
    """Check or fit the two-sided s-power growth envelope on samples.

    With declared growth constants, reports index positions violating
    either inequality. Otherwise fits the tightest constants via secant
    slopes in the u = ||tuple||^s coordinate; the lower envelope is
    flagged when the smallest slope collapses relative to the largest
    (sub-s growth over the sampled range).
    """
    if not samples:
        raise ValueError("need at least one sample")
    if s is None:
        if cost.growth is None:
            raise ValueError("no exponent: declare growth constants or pass s")
        s = cost.growth.s
    norms, costs = [], []
    for x, fv, gvs in samples:
        gx = metric.at(np.asarray(x, dtype=np.float64))
        norms.append(tuple_norm(fv, gvs, gx))
        costs.append(cost.eval_tuple(x, fv, gvs))
    order = np.argsort(norms)
    t = np.array(norms)[order]
    c = np.array(costs)[order]
    u = t**s

    du = np.diff(u)
    slopes = [float((c[i + 1] - c[i]) / du[i]) for i in range(len(du)) if du[i] > 1e-14]
    if slopes:
        b1 = min(slopes)
        b2 = max(slopes)
        a1 = float(np.min(c - b1 * u))
        a2 = float(np.max(c - b2 * u))
        fitted = (a1, a2, b1, b2)
    else:
        fitted = (float(np.min(c)), float(np.max(c)), 0.0, 0.0)

    if cost.growth is not None:
        g = cost.growth
        violations = [
            int(i)
            for i in range(len(u))
            if not (g.a1 + g.b1 * u[i] <= c[i] + 1e-12 and c[i] <= g.a2 + g.b2 * u[i] + 1e-12)
        ]
        return CoercivityReport(not violations, fitted, violations, slopes)

    holds = bool(slopes) and fitted[2] > 0 and fitted[2] >= slope_floor_ratio * fitted[3]
    return CoercivityReport(holds, fitted, [], slopes)
