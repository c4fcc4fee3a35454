"""Kernel backend selection.

The hot inner loop of the analytic layer is batched monomial evaluation
(every quadrature rule, objective evaluation and quasiconvexity trial
funnels through it). A Cython implementation is used when the compiled
extension is available; otherwise a pure-Python/numpy fallback with the
same floating-point operation order is selected, so results are
bit-identical across backends.

Set FIBREFORMS_FORCE_REF=1 in the environment to force the fallback.
"""
import os

from . import _ref

BACKEND = "python"
eval_monomials = _ref.eval_monomials

if not os.environ.get("FIBREFORMS_FORCE_REF"):
    try:
        from . import _speedups  # type: ignore[attr-defined]

        eval_monomials = _speedups.eval_monomials
        BACKEND = "cython"
    except ImportError:
        pass

__all__ = ["eval_monomials", "BACKEND"]
