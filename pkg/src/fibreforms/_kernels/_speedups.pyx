# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled monomial-evaluation kernel.

Keeps the same accumulation order as the pure-Python fallback in _ref.py
(terms in order, monomials by repeated multiplication) so that both
backends agree bit-for-bit.
"""
import numpy as np

cimport numpy as cnp


def eval_monomials(points, exps, coeffs):
    """Evaluate sum_t coeffs[t] * prod_d points[:,d]**exps[t,d]."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] ex = np.ascontiguousarray(exps, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cf = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t P = pts.shape[0]
    cdef Py_ssize_t N = pts.shape[1]
    cdef Py_ssize_t T = ex.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(P, dtype=np.float64)
    cdef Py_ssize_t p, t, d, r
    cdef double mono, x
    cdef long e
    for p in range(P):
        for t in range(T):
            mono = cf[t]
            for d in range(N):
                e = ex[t, d]
                if e == 0:
                    continue
                x = pts[p, d]
                for r in range(e):
                    mono = mono * x
            out[p] = out[p] + mono
    return out
