"""Exact multivariate polynomials over the rationals.

Sparse dict representation: exponent tuple -> Fraction. All arithmetic is
exact; this is the layer on which the algebraic identities (antisymmetry,
Leibniz, d∘d = 0, pullback naturality) are verified with zero residual.
"""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Mapping, Sequence, Union

import numpy as np

Scalar = Union[int, Fraction]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, Rational):
        return Fraction(c)
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, float):
        return Fraction(c).limit_denominator(10**12)
    raise TypeError(f"cannot coerce {type(c).__name__} to Fraction")


class Polynomial:
    """Multivariate polynomial in `nvars` variables with Fraction coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[tuple, Scalar] | None = None):
        self.nvars = int(nvars)
        t = {}
        if terms:
            for exp, c in terms.items():
                c = _as_fraction(c)
                if c != 0:
                    exp = tuple(int(e) for e in exp)
                    if len(exp) != self.nvars:
                        raise ValueError("exponent tuple length != nvars")
                    t[exp] = t.get(exp, Fraction(0)) + c
        self.terms = {e: c for e, c in t.items() if c != 0}

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls(nvars)

    @classmethod
    def constant(cls, nvars: int, c) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: _as_fraction(c)})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        """The coordinate polynomial x^i (i is 1-based)."""
        if not 1 <= i <= nvars:
            raise ValueError(f"variable index {i} out of range 1..{nvars}")
        exp = [0] * nvars
        exp[i - 1] = 1
        return cls(nvars, {tuple(exp): 1})

    # -- predicates ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    # -- ring operations ------------------------------------------------
    def _check(self, other: "Polynomial"):
        if self.nvars != other.nvars:
            raise ValueError("polynomial variable-count mismatch")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.nvars, other)
        self._check(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, Fraction(0)) + c
        return Polynomial(self.nvars, t)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, Polynomial) else Polynomial.constant(self.nvars, -_as_fraction(other)))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c0 = _as_fraction(other)
            return Polynomial(self.nvars, {e: c * c0 for e, c in self.terms.items()})
        self._check(other)
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, Fraction(0)) + c1 * c2
        return Polynomial(self.nvars, t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    # -- calculus -------------------------------------------------------
    def diff(self, i: int) -> "Polynomial":
        """Exact partial derivative with respect to x^i (1-based)."""
        t = {}
        for e, c in self.terms.items():
            k = e[i - 1]
            if k == 0:
                continue
            e2 = list(e)
            e2[i - 1] = k - 1
            t[tuple(e2)] = t.get(tuple(e2), Fraction(0)) + c * k
        return Polynomial(self.nvars, t)

    def integrate(self, i: int) -> "Polynomial":
        """Exact antiderivative in x^i with zero constant term."""
        t = {}
        for e, c in self.terms.items():
            e2 = list(e)
            e2[i - 1] = e[i - 1] + 1
            t[tuple(e2)] = c / (e[i - 1] + 1)
        return Polynomial(self.nvars, t)

    def substitute(self, images: Sequence["Polynomial"]) -> "Polynomial":
        """Compose: replace variable x^i by images[i-1] (all in one target ring)."""
        if len(images) != self.nvars:
            raise ValueError("need one image polynomial per variable")
        target_nvars = images[0].nvars if images else self.nvars
        out = Polynomial.zero(target_nvars)
        # cache powers per variable; degrees are small in practice
        pow_cache: list[dict[int, Polynomial]] = [dict() for _ in range(self.nvars)]
        for e, c in self.terms.items():
            mono = Polynomial.constant(target_nvars, c)
            for i, k in enumerate(e):
                if k == 0:
                    continue
                if k not in pow_cache[i]:
                    pow_cache[i][k] = images[i] ** k
                mono = mono * pow_cache[i][k]
            out = out + mono
        return out

    def eval_exact(self, point: Sequence) -> Fraction:
        """Evaluate at a rational point, exactly."""
        if len(point) != self.nvars:
            raise ValueError("point dimension mismatch")
        pt = [_as_fraction(v) for v in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            m = c
            for v, k in zip(pt, e):
                for _ in range(k):
                    m *= v
            total += m
        return total

    # -- numeric evaluation ----------------------------------------------
    def coeff_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(exponents, coefficients) in a fixed deterministic order."""
        keys = sorted(self.terms)
        exps = np.array(keys, dtype=np.int64).reshape(len(keys), self.nvars)
        coeffs = np.array([float(self.terms[k]) for k in keys], dtype=np.float64)
        return exps, coeffs

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at float points, shape (P, nvars) -> (P,)."""
        from ._kernels import eval_monomials

        points = np.asarray(points, dtype=np.float64)
        squeeze = points.ndim == 1
        if squeeze:
            points = points.reshape(1, -1)
        if points.shape[1] != self.nvars:
            raise ValueError("point dimension mismatch")
        exps, coeffs = self.coeff_arrays()
        out = eval_monomials(points, exps, coeffs)
        return out[0] if squeeze else out

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for e in sorted(self.terms):
            mono = "*".join(f"x{i+1}^{k}" for i, k in enumerate(e) if k)
            c = self.terms[e]
            bits.append(f"{c}" + (f"*{mono}" if mono else ""))
        return "Polynomial(" + " + ".join(bits) + ")"


def random_polynomial(rng, nvars: int, max_degree: int = 3, max_terms: int = 4) -> Polynomial:
    """Small random polynomial with integer coefficients in [-9, 9] \\ {0}."""
    t = {}
    for _ in range(rng.integers(1, max_terms + 1)):
        exp = tuple(int(rng.integers(0, max_degree + 1)) for _ in range(nvars))
        c = int(rng.integers(1, 10)) * (1 if rng.integers(0, 2) else -1)
        t[exp] = t.get(exp, 0) + c
    return Polynomial(nvars, t)
