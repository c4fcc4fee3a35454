"""Comass norm of form values: sup of the pairing with simple unit multivectors.

The pairing <psi, v_1 ^ ... ^ v_l> is the canonical duality; the unit
constraint g(chi, chi) <= 1 uses the Gram-determinant extension of the
metric to multivectors. Degrees 1 and N have closed forms; intermediate
degrees use multi-start projected gradient ascent on the scale-invariant
Rayleigh-type ratio (the comass is a nonconvex sup, so the declared value
is the best over restarts).
"""
from __future__ import annotations

import itertools

import numpy as np

from .forms import Form, FormValue
from .metric import MetricField
from .multiindex import MultiIndex
from .rng import philox

DEFAULT_RESTARTS = 32
DEFAULT_ITERS = 200


def _pairing_and_grad(V: np.ndarray, combos: list[MultiIndex], psi: np.ndarray):
    """P(V) = sum_I psi_I det(V[:, I]) and dP/dV (cofactor expansion)."""
    ell = V.shape[0]
    P = 0.0
    grad = np.zeros_like(V)
    for psi_I, I in zip(psi, combos):
        cols = [i - 1 for i in I]
        M = V[:, cols]
        detM = np.linalg.det(M)
        P += psi_I * detM
        # cofactor matrix via minors; ell is small
        if ell == 1:
            cof = np.ones((1, 1))
        else:
            cof = np.empty((ell, ell))
            for a in range(ell):
                rows = [r for r in range(ell) if r != a]
                for b in range(ell):
                    cs = [c for c in range(ell) if c != b]
                    cof[a, b] = (-1) ** (a + b) * np.linalg.det(M[np.ix_(rows, cs)])
        grad[:, cols] += psi_I * cof
    return P, grad


def _ratio(V: np.ndarray, combos, psi, g: np.ndarray):
    G = V @ g @ V.T
    q = np.linalg.det(G)
    if q <= 1e-300:
        return -np.inf, None, None
    P, gradP = _pairing_and_grad(V, combos, psi)
    sq = np.sqrt(q)
    R = P / sq
    # d sqrt(q)/dV = sq * G^{-1} V g
    grad_sq = sq * (np.linalg.solve(G, V @ g))
    gradR = (gradP - R * grad_sq) / sq
    return R, gradR, sq


def comass_value(
    value: FormValue,
    g: np.ndarray,
    restarts: int = DEFAULT_RESTARTS,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
) -> tuple[float, np.ndarray | None]:
    """Comass of a pointwise form value against an SPD matrix g.

    Returns (comass, maximizing vectors V of shape (degree, N)); V is None
    for the degenerate degrees with closed-form answers.
    """
    N, ell = value.chart_dim, value.degree
    coeffs = value.coeffs
    if ell == 0:
        return abs(coeffs.get((), 0.0)), None
    if not coeffs:
        return 0.0, None
    if ell > N:
        return 0.0, None
    if ell == 1:
        psi = np.zeros(N)
        for (i,), v in coeffs.items():
            psi[i - 1] = v
        return float(np.sqrt(psi @ np.linalg.solve(g, psi))), None
    if ell == N:
        c = coeffs.get(tuple(range(1, N + 1)), 0.0)
        return abs(c) / float(np.sqrt(np.linalg.det(g))), None

    combos = sorted(coeffs)
    psi = np.array([coeffs[I] for I in combos])
    best_val, best_V = 0.0, None
    for r in range(restarts):
        rng = philox(seed, r)
        V = rng.standard_normal((ell, N))
        R, gradR, _ = _ratio(V, combos, psi, g)
        if R is None or not np.isfinite(R):
            continue
        if R < 0:
            V[0] = -V[0]
            R, gradR, _ = _ratio(V, combos, psi, g)
        step = 1.0
        for _ in range(iters):
            if gradR is None:
                break
            gn = np.linalg.norm(gradR)
            if gn < 1e-14 * (1.0 + abs(R)):
                break
            improved = False
            while step > 1e-14:
                Vn = V + step * gradR
                Rn, gradRn, _ = _ratio(Vn, combos, psi, g)
                if Rn is not None and np.isfinite(Rn) and Rn > R:
                    V, R, gradR = Vn, Rn, gradRn
                    improved = True
                    step *= 1.5
                    break
                step *= 0.5
            if not improved:
                break
        if abs(R) > best_val and np.isfinite(R):
            best_val = abs(R)
            G = V @ g @ V.T
            best_V = V / np.linalg.det(G) ** (1.0 / (2 * ell))
    return best_val, best_V


def comass(a: Form, g: MetricField, x, restarts: int = DEFAULT_RESTARTS, iters: int = DEFAULT_ITERS, seed: int = 0) -> tuple[float, np.ndarray | None]:
    """Pointwise comass of a Form at x under the metric field g."""
    x = np.asarray(x, dtype=np.float64)
    gx = g.at(x)
    fv = FormValue(a.chart_dim, a.degree, a.value_at(x))
    return comass_value(fv, gx, restarts=restarts, iters=iters, seed=seed)


def comass_sampling_oracle(value: FormValue, g: np.ndarray, samples: int, seed: int = 0, batch: int = 100_000) -> float:
    """Lower-bound oracle: best pairing over random simple unit multivectors."""
    N, ell = value.chart_dim, value.degree
    combos = sorted(value.coeffs)
    psi = np.array([value.coeffs[I] for I in combos])
    rng = philox(seed, 2**31)
    best = 0.0
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        V = rng.standard_normal((b, ell, N))
        G = np.einsum("bik,kl,bjl->bij", V, g, V)
        q = np.linalg.det(G)
        ok = q > 1e-12
        P = np.zeros(b)
        for psi_I, I in zip(psi, combos):
            cols = [i - 1 for i in I]
            P += psi_I * np.linalg.det(V[:, :, cols])
        vals = np.abs(P[ok]) / np.sqrt(q[ok])
        if len(vals):
            best = max(best, float(vals.max()))
        done += b
    return best
