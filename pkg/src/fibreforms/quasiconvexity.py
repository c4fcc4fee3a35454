"""Riemannian quasiconvexity testing by randomized falsification.

The averaged lower-bound inequality is universally quantified over
subdomains and Lipschitz test functions, so no finite procedure can prove
it; the tests here are falsifiers. A reported violation is certified by
re-evaluating the witness at doubled quadrature density; absence of
violations is evidence, not proof, and reports say so.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fields import Box, box_array
from .forms import Diffeomorphism
from .metric import MetricField
from .polynomial import Polynomial
from .quadrature import box_rule
from .rng import philox


@dataclass
class Integrand:
    """Continuous F(x, p) with a 1-form slot, vectorized over points."""

    domain_dim: int
    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]  # (P,N),(P,N)->(P,)

    def __call__(self, points: np.ndarray, pvals: np.ndarray) -> np.ndarray:
        return np.asarray(self.eval(points, pvals), dtype=np.float64)


class TestFunction:
    """Lipschitz scalar test field vanishing on the subdomain boundary."""

    def __init__(self, box: Box, zeta, dzeta, lipschitz: float, meta: dict, smooth: bool):
        self.box = box_array(box)
        self.zeta = zeta
        self.dzeta = dzeta  # (P, N) gradient values
        self.lipschitz = float(lipschitz)
        self.meta = dict(meta)
        self.smooth = smooth  # True: Gauss-Legendre; False: composite midpoint

    def rescaled(self, factor: float) -> "TestFunction":
        meta = dict(self.meta, rescale=self.meta.get("rescale", 1.0) * factor)
        return TestFunction(
            self.box,
            lambda pts, z=self.zeta, f=factor: f * z(pts),
            lambda pts, d=self.dzeta, f=factor: f * d(pts),
            self.lipschitz * abs(factor),
            meta,
            self.smooth,
        )


def make_bubble(rng, D: Box, degree: int = 2) -> TestFunction:
    """Boundary-defining-function bubble times a random polynomial."""
    b = box_array(D)
    N = len(b)
    bump = Polynomial.constant(N, 1)
    scale = 1.0
    for a, (lo, hi) in enumerate(b):
        xa = Polynomial.variable(N, a + 1)
        from fractions import Fraction

        bump = bump * (xa - Polynomial.constant(N, Fraction(lo))) * (Polynomial.constant(N, Fraction(hi)) - xa)
        scale *= ((hi - lo) / 2.0) ** 2
    from .polynomial import random_polynomial

    q = random_polynomial(rng, N, max_degree=degree, max_terms=3)
    from fractions import Fraction

    amp = Fraction(2 ** int(rng.integers(-1, 3)))
    zeta_poly = bump * q * (amp / Fraction(scale).limit_denominator(10**12))
    grads = [zeta_poly.diff(a + 1) for a in range(N)]

    def dz(points, _grads=grads):
        return np.stack([g(points) for g in _grads], axis=-1)

    lips = float(np.max(np.abs(dz(_corner_lattice(b, 5))))) if N <= 4 else 1.0
    return TestFunction(D, zeta_poly, dz, lips, {"family": "bubble", "poly": repr(zeta_poly)}, smooth=True)


def make_laminate(rng, D: Box) -> TestFunction:
    """Sawtooth in one axis, tapered by the sup-distance to the boundary.

    Piecewise linear with gradient +-amp e_axis away from the taper band;
    vanishes on the boundary exactly.
    """
    b = box_array(D)
    N = len(b)
    axis = int(rng.integers(0, N))
    teeth = int(2 ** rng.integers(2, 5))  # 4, 8 or 16
    amp = float(2.0 ** rng.integers(-1, 2))  # 0.5, 1 or 2
    lo, hi = b[axis]
    period = (hi - lo) / teeth

    def parts(points):
        points = np.asarray(points, dtype=np.float64)
        u = (points[:, axis] - lo) / period
        frac = u - np.floor(u)
        tri = period * np.minimum(frac, 1.0 - frac)
        tri_sign = np.where(frac < 0.5, 1.0, -1.0)
        dists = np.stack(
            [np.minimum(points[:, a] - b[a, 0], b[a, 1] - points[:, a]) for a in range(N) if a != axis],
            axis=-1,
        )
        other_axes = [a for a in range(N) if a != axis]
        return tri, tri_sign, dists, other_axes

    def zeta(points):
        tri, _, dists, _ = parts(points)
        return amp * np.minimum(tri, dists.min(axis=-1))

    def dzeta(points):
        points = np.asarray(points, dtype=np.float64)
        tri, tri_sign, dists, other_axes = parts(points)
        dmin = dists.min(axis=-1)
        out = np.zeros_like(points)
        saw_active = tri <= dmin
        out[saw_active, axis] = amp * tri_sign[saw_active]
        inactive = ~saw_active
        if np.any(inactive):
            which = np.argmin(dists[inactive], axis=-1)
            for c, a in enumerate(other_axes):
                sel = np.where(inactive)[0][which == c]
                sgn = np.where(
                    points[sel, a] - b[a, 0] <= b[a, 1] - points[sel, a], 1.0, -1.0
                )
                out[sel, a] = amp * sgn
        return out

    meta = {"family": "laminate", "axis": axis + 1, "teeth": teeth, "amplitude": amp}
    return TestFunction(D, zeta, dzeta, amp, meta, smooth=False)


def _corner_lattice(b: np.ndarray, per_axis: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in b]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _midpoint_rule(box: np.ndarray, cells_per_axis: Sequence[int]):
    axes = []
    weights = 1.0
    for (lo, hi), m in zip(box, cells_per_axis):
        h = (hi - lo) / m
        axes.append(lo + h * (np.arange(m) + 0.5))
        weights = weights * h
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([mm.ravel() for mm in mesh], axis=-1)
    return pts, np.full(len(pts), weights)


def volume_growth_factor(x0, D: Box, g: MetricField, order: int = 8, cross_check_tol: float = 1e-6) -> float:
    """Integral over D of sqrt(det g(x0)) / sqrt(det g(x)) * dVol.

    Since dVol = sqrt(det g) dx this equals sqrt(det g(x0)) * Leb(D);
    both evaluations are performed and cross-checked.
    """
    b = box_array(D)
    x0 = np.asarray(x0, dtype=np.float64)
    if np.any(x0 < b[:, 0]) or np.any(x0 > b[:, 1]):
        raise ValueError("x0 must lie in the subdomain")
    s0 = g.sqrt_det(x0)
    pts, w = box_rule(D, order)
    sd = g.sqrt_det_many(pts)
    quad = float(np.dot(w, (s0 / sd) * sd))
    closed = s0 * float(np.prod(b[:, 1] - b[:, 0]))
    if abs(quad - closed) > cross_check_tol * (1.0 + abs(closed)):
        raise ArithmeticError("volume growth factor cross-check failed")
    return quad


def _d_nodes(tf: TestFunction, D: Box, order: int, refine: int = 1):
    b = box_array(D)
    if tf.smooth:
        return box_rule(D, order * refine)
    teeth = tf.meta.get("teeth", 8)
    axis = tf.meta.get("axis", 1) - 1
    cells = []
    for a in range(len(b)):
        base = 4 * teeth if a == axis else 24
        cells.append(base * refine)
    return _midpoint_rule(b, cells)


def gap_value(F: Integrand, x0, p, D: Box, g: MetricField, tf: TestFunction, order: int = 6, refine: int = 1) -> float:
    """(1 / V(x0, D)) * integral of F(x, p + d zeta) dVol - F(x0, p)."""
    x0 = np.asarray(x0, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    pts, w = _d_nodes(tf, D, order, refine)
    dens = g.sqrt_det_many(pts)
    pvals = p[None, :] + tf.dzeta(pts)
    fvals = F(pts, pvals)
    if np.any(np.isposinf(fvals)):
        raise FloatingPointError("integrand evaluated to +inf during a trial")
    vol = volume_growth_factor(x0, D, g, order=max(order, 4))
    avg = float(np.dot(w, fvals * dens)) / vol
    f0 = float(F(x0.reshape(1, -1), p.reshape(1, -1))[0])
    return avg - f0


@dataclass
class QCReport:
    violation_found: bool
    worst_gap: float
    witness: dict | None
    tolerance: float
    trials: int
    certified: bool
    aborted_trials: int = 0
    gaps: list = field(default_factory=list)
    note: str = (
        "falsification test: absence of violations is evidence of "
        "quasiconvexity over the sampled family, not a proof"
    )


def riemannian_qc_test(
    F: Integrand,
    x0,
    p,
    D: Box,
    g: MetricField,
    trials: int,
    seed: int,
    order: int = 6,
    tolerance: float | None = None,
    sharpen: bool = True,
    record_gaps: bool = False,
    map_fn=map,
) -> QCReport:
    """Randomized falsifier for the averaged lower-bound inequality.

    map_fn lets callers spread the independent trials over workers; the
    reduction is in trial order, so results are worker-count invariant.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    f0 = float(F(x0.reshape(1, -1), p.reshape(1, -1))[0])
    if tolerance is None:
        tolerance = 1e-7 * (1.0 + abs(f0))

    def trial(t: int):
        rng = philox(seed, t)
        tf = make_bubble(rng, D) if rng.integers(0, 2) == 0 else make_laminate(rng, D)
        try:
            return gap_value(F, x0, p, D, g, tf, order=order), tf
        except FloatingPointError:
            return None, tf

    worst = np.inf
    worst_tf: TestFunction | None = None
    gaps = []
    aborted = 0
    for gap, tf in map_fn(trial, range(trials)):
        if gap is None:
            aborted += 1
            continue
        if record_gaps:
            gaps.append(gap)
        if gap < worst:
            worst, worst_tf = gap, tf
        if worst < -tolerance and not sharpen:
            break
    if sharpen and worst_tf is not None and worst < -tolerance:
        for factor in (0.5, 2.0, 4.0):
            cand = worst_tf.rescaled(factor)
            gap = gap_value(F, x0, p, D, g, cand, order=order)
            if gap < worst:
                worst, worst_tf = gap, cand
    violation = worst < -tolerance
    certified = False
    if violation and worst_tf is not None:
        recheck = gap_value(F, x0, p, D, g, worst_tf, order=order, refine=2)
        certified = recheck < -tolerance / 2.0
    witness = None
    if worst_tf is not None:
        witness = dict(worst_tf.meta, lipschitz=worst_tf.lipschitz)
    return QCReport(
        violation_found=bool(violation and certified),
        worst_gap=float(worst),
        witness=witness if violation else None,
        tolerance=tolerance,
        trials=trials,
        certified=certified,
        aborted_trials=aborted,
        gaps=gaps,
    )


def euclidean_qc_test(F: Integrand, x0, p, D: Box, trials: int, seed: int, **kw) -> QCReport:
    """Classical quasiconvexity test: the identity-metric specialization.

    Shares the exact code path with the Riemannian test, so matched seeds
    give bitwise-identical trial decisions.
    """
    g = MetricField.euclidean(len(box_array(D)))
    return riemannian_qc_test(F, x0, p, D, g, trials, seed, **kw)


def change_of_variables_reduction(F: Integrand, phi: Diffeomorphism, g: MetricField) -> Integrand:
    """Flatten a curved-chart integrand onto the reference chart.

    F_hat(xhat, phat) = sqrt(det g(phi(xhat))) * F(phi(xhat), J^{-T} phat).
    """

    def ev(points, pvals):
        y = phi(points)
        if y.ndim == 1:
            y = y.reshape(1, -1)
        J = phi.jacobian(points)
        if J.ndim == 2:
            J = J[None]
        JT = np.swapaxes(J, 1, 2)
        try:
            p = np.linalg.solve(JT, pvals[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular Jacobian in change of variables") from exc
        return g.sqrt_det_many(y) * F(y, p)

    return Integrand(phi.source_dim, ev)


def paired_qc_gaps(
    F: Integrand,
    phi: Diffeomorphism,
    g: MetricField,
    Dhat: Box,
    x0hat,
    phat,
    trials: int,
    seed: int,
    order: int = 6,
) -> list[tuple[float, float]]:
    """Matched-seed (riemannian, euclidean-reduced) gap pairs.

    Test functions are drawn on the reference box and transported through
    phi; the Riemannian gap is evaluated by the exact change of variables
    onto the same quadrature nodes, so the pair differs exactly by the
    factor sqrt(det g(x0)) up to rounding.
    """
    x0hat = np.asarray(x0hat, dtype=np.float64)
    phat = np.asarray(phat, dtype=np.float64)
    Fhat = change_of_variables_reduction(F, phi, g)
    x0 = phi(x0hat)
    J0 = phi.jacobian(x0hat)
    p = np.linalg.solve(J0.T, phat)
    s0 = g.sqrt_det(x0)
    eye = MetricField.euclidean(len(box_array(Dhat)))
    out = []
    for t in range(trials):
        rng = philox(seed, t)
        tf = make_bubble(rng, Dhat) if rng.integers(0, 2) == 0 else make_laminate(rng, Dhat)
        gap_e = gap_value(Fhat, x0hat, phat, Dhat, eye, tf, order=order)

        # Riemannian gap via the same substitution: integrate F over the
        # image of the reference nodes against dVol, normalized by V.
        pts, w = _d_nodes(tf, Dhat, order)
        y = phi(pts)
        J = phi.jacobian(pts)
        JT = np.swapaxes(J, 1, 2)
        detJ = np.abs(np.linalg.det(J))
        pv = np.linalg.solve(JT, (phat[None, :] + tf.dzeta(pts))[..., None])[..., 0]
        dens = g.sqrt_det_many(y)
        vol = s0 * float(np.dot(w, detJ))
        avg = float(np.dot(w, F(y, pv) * dens * detJ)) / vol
        f0 = float(F(x0.reshape(1, -1), p.reshape(1, -1))[0])
        gap_r = avg - f0
        out.append((gap_r, gap_e))
    return out
