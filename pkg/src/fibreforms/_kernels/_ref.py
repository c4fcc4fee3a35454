"""Pure-Python kernel fallback.

Operation order matches the Cython kernel exactly (per point: terms are
accumulated in order, each monomial built by repeated multiplication), so
both backends produce bit-identical float64 results.
"""
import numpy as np


def eval_monomials(points: np.ndarray, exps: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Evaluate sum_t coeffs[t] * prod_d points[:,d]**exps[t,d].

    points: (P, N) float64, exps: (T, N) int64, coeffs: (T,) float64.
    Returns (P,) float64.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.int64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    P = points.shape[0]
    out = np.zeros(P, dtype=np.float64)
    for t in range(exps.shape[0]):
        mono = np.full(P, coeffs[t])
        for d in range(exps.shape[1]):
            e = exps[t, d]
            if e == 0:
                continue
            col = points[:, d]
            for _ in range(e):
                mono = mono * col
        out = out + mono
    return out
