"""Direct-method minimization of the gauged problem on nodal grids.

The potential is a degree-(ell-1) form with nodal coefficient values on a
regular grid; boundary nodes are pinned bit-exactly to the gauge and the
interior values are the optimization variables. The discrete exterior
derivative reuses the package-wide 4th-order stencil and the objective
integrates the gauged cost against composite Simpson weights and the
metric volume density.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.interpolate import RegularGridInterpolator

from .fields import box_array
from .multiindex import MultiIndex, all_multiindices, insert_index
from .relaxation import GaugedProblem
from .rng import philox
from .stencil import apply_along_axis, derivative_matrix, simpson_weights


class DiscreteField:
    """Nodal (ell-1)-form pinned to the gauge on boundary nodes."""

    def __init__(self, problem: GaugedProblem, resolution: int, values: dict[MultiIndex, np.ndarray] | None = None):
        if resolution % 2 == 0 or resolution < 7:
            raise ValueError("resolution must be odd and at least 7")
        self.problem = problem
        self.resolution = int(resolution)
        N = problem.chart.dim
        self.box = box_array(problem.domain.box)
        self.axes = tuple(np.linspace(lo, hi, resolution) for lo, hi in self.box)
        self.steps = tuple((hi - lo) / (resolution - 1) for lo, hi in self.box)
        self.indices = list(all_multiindices(N, problem.cost.ell - 1))
        mesh = np.meshgrid(*self.axes, indexing="ij")
        self.points = np.stack([m.ravel() for m in mesh], axis=-1)
        shape = (resolution,) * N
        gv = problem.gauge.xi_tilde.values_at(self.points)
        self.gauge_values = {M: gv.get(M, np.zeros(len(self.points))).reshape(shape) for M in self.indices}
        interior = np.ones(shape, dtype=bool)
        for a in range(N):
            sl = [slice(None)] * N
            for edge in (0, resolution - 1):
                sl[a] = edge
                interior[tuple(sl)] = False
        self.interior = interior
        self.n_interior = int(interior.sum())
        self.ndof = self.n_interior * len(self.indices)
        if values is None:
            self.values = {M: v.copy() for M, v in self.gauge_values.items()}
        else:
            self.values = {M: np.asarray(values[M], dtype=np.float64).reshape(shape) for M in self.indices}
            self._pin()

    def _pin(self) -> None:
        for M in self.indices:
            v = self.values[M]
            v[~self.interior] = self.gauge_values[M][~self.interior]

    def dof_vector(self) -> np.ndarray:
        return np.concatenate([self.values[M][self.interior] for M in self.indices])

    def with_dof(self, u: np.ndarray) -> "DiscreteField":
        out = DiscreteField(self.problem, self.resolution)
        chunks = np.split(np.asarray(u, dtype=np.float64), len(self.indices))
        for M, chunk in zip(self.indices, chunks):
            v = self.gauge_values[M].copy()
            v[self.interior] = chunk
            out.values[M] = v
        return out

    def max_offset(self) -> float:
        return max(
            float(np.max(np.abs(self.values[M] - self.gauge_values[M]))) for M in self.indices
        )


def _derivative_tables(field_: DiscreteField) -> dict[MultiIndex, np.ndarray]:
    """Nodal coefficient grids of the discrete exterior derivative."""
    N = field_.problem.chart.dim
    out: dict[MultiIndex, np.ndarray] = {}
    for M, grid in field_.values.items():
        for j in range(1, N + 1):
            if j in M:
                continue
            merged, sign = insert_index(j, M)
            D = derivative_matrix(field_.resolution, field_.steps[j - 1])
            term = sign * apply_along_axis(D, grid, j - 1)
            if merged in out:
                out[merged] = out[merged] + term
            else:
                out[merged] = term
    return out


def _node_weights(field_: DiscreteField) -> np.ndarray:
    w = np.array(1.0)
    for h in field_.steps:
        w = np.multiply.outer(w, simpson_weights(field_.resolution, h))
    return w


def objective(problem: GaugedProblem, xi: DiscreteField) -> float:
    """Simpson-weighted integral of the gauged cost, +inf-aware."""
    if xi.problem is not problem and xi.problem.chart.dim != problem.chart.dim:
        raise ValueError("resolution/problem mismatch")
    val, _ = _objective_and_grad(problem, xi, want_grad=False)
    return val


def _objective_and_grad(problem: GaugedProblem, xi: DiscreteField, want_grad: bool = True):
    m = xi.resolution
    shape = (m,) * problem.chart.dim
    tables = _derivative_tables(xi)
    wv = {M: t.ravel() for M, t in tables.items()}
    pts = xi.points
    batch = problem.cost.gauged_batch(pts, wv, problem.chart.n)
    if batch is None:
        raise ValueError("cost provides no vectorized gauged evaluation")
    metric = problem.chart.metric
    dens = np.ones(len(pts)) if metric is None else metric.sqrt_det_many(pts)
    w = _node_weights(xi).ravel()
    if np.any(np.isposinf(batch)):
        return math.inf, None
    val = float(np.dot(w, batch * dens))
    if not want_grad:
        return val, None
    gtab = problem.cost.gauged_batch_grad(pts, wv, problem.chart.n)
    if gtab is None:
        return val, None
    weighted = {M: (g * w * dens).reshape(shape) for M, g in gtab.items()}
    grad = {M: np.zeros(shape) for M in xi.indices}
    N = problem.chart.dim
    for M in xi.indices:
        for j in range(1, N + 1):
            if j in M:
                continue
            merged, sign = insert_index(j, M)
            if merged not in weighted:
                continue
            D = derivative_matrix(m, xi.steps[j - 1])
            grad[M] += sign * apply_along_axis(D.T, weighted[merged], j - 1)
    gvec = np.concatenate([grad[M][xi.interior] for M in xi.indices])
    return val, gvec


def _fd_gradient(problem: GaugedProblem, xi: DiscreteField, eps: float = 1e-6) -> np.ndarray:
    u0 = xi.dof_vector()
    g = np.empty_like(u0)
    for i in range(len(u0)):
        up = u0.copy(); up[i] += eps
        um = u0.copy(); um[i] -= eps
        g[i] = (objective(problem, xi.with_dof(up)) - objective(problem, xi.with_dof(um))) / (2 * eps)
    return g


@dataclass
class SolveReport:
    objective: float
    history: list
    grad_norm: float
    reason: str
    iterations: int
    wall_time: float
    resolution: int
    stalled: bool = False
    notes: list = field(default_factory=list)

    def descent_holds(self) -> bool:
        tol = lambda v: 1e-12 * (1.0 + abs(v))
        return all(b <= a + tol(a) for a, b in zip(self.history, self.history[1:]))


def minimize(
    problem: GaugedProblem,
    init: DiscreteField | str = "gauge",
    resolution: int | None = None,
    max_iterations: int = 500,
    gradient_mode: str = "adjoint",
) -> tuple[DiscreteField, SolveReport]:
    """Limited-memory quasi-Newton descent on the interior nodal values."""
    if isinstance(init, str):
        if init != "gauge":
            raise ValueError("init must be a DiscreteField or the string 'gauge'")
        init = DiscreteField(problem, resolution or problem.discretization.resolution)
    f0 = objective(problem, init)
    if math.isinf(f0):
        raise ValueError("objective is +inf at the initial field")
    t0 = time.perf_counter()
    history = [f0]
    best = {"u": init.dof_vector(), "f": f0}

    use_adjoint = gradient_mode == "adjoint"
    if use_adjoint:
        probe = _objective_and_grad(problem, init)
        use_adjoint = probe[1] is not None

    def fun(u):
        xi = init.with_dof(u)
        if use_adjoint:
            val, grad = _objective_and_grad(problem, xi)
        else:
            val = objective(problem, xi)
            grad = _fd_gradient(problem, xi)
        if val < best["f"]:
            best["u"], best["f"] = u.copy(), val
        return val, grad

    def cb(u):
        history.append(fun(u)[0])

    res = scipy.optimize.minimize(
        fun,
        init.dof_vector(),
        jac=True,
        method="L-BFGS-B",
        callback=cb,
        options={"maxiter": max_iterations, "ftol": 1e-14, "gtol": 1e-10},
    )
    stalled = res.status == 2  # abnormal line-search termination
    u_best = best["u"] if best["f"] <= res.fun else res.x
    xi_hat = init.with_dof(u_best)
    f_final, g_final = (
        _objective_and_grad(problem, xi_hat) if use_adjoint else (objective(problem, xi_hat), _fd_gradient(problem, xi_hat))
    )
    if history[-1] != f_final:
        history.append(f_final)
    report = SolveReport(
        objective=f_final,
        history=history,
        grad_norm=float(np.max(np.abs(g_final))) if g_final is not None else float("nan"),
        reason=str(res.message),
        iterations=int(res.nit),
        wall_time=time.perf_counter() - t0,
        resolution=init.resolution,
        stalled=stalled,
        notes=["gradient: " + ("adjoint" if use_adjoint else "finite differences")],
    )
    return xi_hat, report


def gradient_check(problem: GaugedProblem, xi: DiscreteField, directions: int = 20, seed: int = 0, eps: float = 1e-6) -> float:
    """Max relative error of the adjoint gradient vs central differences."""
    _, grad = _objective_and_grad(problem, xi)
    if grad is None:
        raise ValueError("cost provides no derivative; adjoint gradient unavailable")
    rng = philox(seed, 0)
    u0 = xi.dof_vector()
    worst = 0.0
    for _ in range(directions):
        d = rng.standard_normal(len(u0))
        d /= np.linalg.norm(d)
        fp = objective(problem, xi.with_dof(u0 + eps * d))
        fm = objective(problem, xi.with_dof(u0 - eps * d))
        fd = (fp - fm) / (2 * eps)
        ad = float(np.dot(grad, d))
        scale = max(abs(fd), abs(ad), 1e-12)
        worst = max(worst, abs(fd - ad) / scale)
    return worst


@dataclass
class RefinementRow:
    resolution: int
    h: float
    objective: float
    iterations: int


@dataclass
class RefinementStudy:
    rows: list
    nonincreasing: bool
    relaxation_gap_suspected: bool


def _prolong(coarse: DiscreteField, problem: GaugedProblem, resolution: int) -> DiscreteField:
    fine = DiscreteField(problem, resolution)
    for M in coarse.indices:
        offset = coarse.values[M] - coarse.gauge_values[M]
        interp = RegularGridInterpolator(coarse.axes, offset, method="linear")
        fine.values[M] = fine.gauge_values[M] + interp(fine.points).reshape(fine.values[M].shape)
    fine._pin()
    return fine


def refinement_study(problem: GaugedProblem, resolutions: Sequence[int], max_iterations: int = 500) -> RefinementStudy:
    """Minimize on successively finer grids with prolongated warm starts."""
    if list(resolutions) != sorted(resolutions):
        raise ValueError("resolutions must be ascending")
    rows = []
    xi = None
    for m in resolutions:
        start = DiscreteField(problem, m) if xi is None else _prolong(xi, problem, m)
        xi, rep = minimize(problem, start, max_iterations=max_iterations)
        h = float(max(xi.steps))
        rows.append(RefinementRow(m, h, rep.objective, rep.iterations))
    vals = [r.objective for r in rows]
    scale = 1.0 + max(abs(v) for v in vals)
    noninc = all(b <= a + 1e-8 * scale for a, b in zip(vals, vals[1:]))
    drops = [(a - b) / scale for a, b in zip(vals, vals[1:])]
    suspected = bool(noninc and drops and all(d > 0 for d in drops) and drops[-1] > 0.02)
    return RefinementStudy(rows=rows, nonincreasing=noninc, relaxation_gap_suspected=suspected)


def linear_solve_oracle(problem: GaugedProblem, resolution: int, check_linearity: bool = True) -> tuple[DiscreteField, float]:
    """Direct solve of the stationarity system for quadratic gauged costs.

    The objective gradient as a map of the interior values must be affine;
    the Hessian is assembled column-by-column and the linear system solved
    densely (grids are desk-scale).
    """
    base = DiscreteField(problem, resolution)

    def grad_at(u):
        _, g = _objective_and_grad(problem, base.with_dof(u))
        if g is None:
            raise ValueError("cost provides no derivative; oracle unavailable")
        return g

    n = base.ndof
    zero = np.zeros(n)
    c = grad_at(zero)
    if check_linearity:
        rng = philox(0, 0)
        u1, u2 = rng.standard_normal(n), rng.standard_normal(n)
        lhs = grad_at(u1 + u2)
        rhs = grad_at(u1) + grad_at(u2) - c
        if np.max(np.abs(lhs - rhs)) > 1e-8 * (1.0 + np.max(np.abs(lhs))):
            raise ValueError("objective gradient is not affine; oracle does not apply")
    H = np.empty((n, n))
    e = np.zeros(n)
    for i in range(n):
        e[i] = 1.0
        H[:, i] = grad_at(e) - c
        e[i] = 0.0
    u = scipy.linalg.solve(H, -c, assume_a="sym")
    xi = base.with_dof(u)
    return xi, objective(problem, xi)
