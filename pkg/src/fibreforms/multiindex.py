"""Multi-index bookkeeping for differential forms.

A multi-index of valency ``ell`` on an N-dimensional chart is a strictly
ascending tuple of integers in 1..N (coordinates are 1-based externally,
matching the usual geometry convention).
"""
from __future__ import annotations

import itertools
from typing import Iterable, Sequence, Tuple

MultiIndex = Tuple[int, ...]


def validate_multiindex(idx: Sequence[int], chart_dim: int) -> MultiIndex:
    """Check strict ascent and range, returning the canonical tuple."""
    t = tuple(int(i) for i in idx)
    for a, b in zip(t, t[1:]):
        if a >= b:
            raise ValueError(f"multi-index {t} is not strictly ascending")
    if t and (t[0] < 1 or t[-1] > chart_dim):
        raise ValueError(f"multi-index {t} out of range 1..{chart_dim}")
    return t


def sort_with_parity(idx: Sequence[int]) -> tuple[MultiIndex, int]:
    """Sort an arbitrary index tuple into ascending order.

    Returns (sorted tuple, parity) where parity is +1/-1 per the sign of
    the sorting permutation, or (sorted tuple, 0) when an index repeats.
    """
    seq = list(idx)
    if len(set(seq)) != len(seq):
        return tuple(sorted(seq)), 0
    parity = 1
    # insertion sort; index tuples are short so O(l^2) is irrelevant
    for i in range(1, len(seq)):
        j = i
        while j > 0 and seq[j - 1] > seq[j]:
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            parity = -parity
            j -= 1
    return tuple(seq), parity


def insert_index(j: int, idx: MultiIndex) -> tuple[MultiIndex, int]:
    """Sort (j,) + idx, returning (multi-index, sign); sign 0 if j in idx."""
    return sort_with_parity((j,) + tuple(idx))


def merge_with_parity(a: MultiIndex, b: MultiIndex) -> tuple[MultiIndex, int]:
    """Shuffle sign of concatenating two ascending multi-indices."""
    return sort_with_parity(tuple(a) + tuple(b))


def all_multiindices(chart_dim: int, ell: int) -> Iterable[MultiIndex]:
    """All ascending multi-indices of valency ell on a chart of dim N."""
    return itertools.combinations(range(1, chart_dim + 1), ell)


def split_position(idx: MultiIndex, n_horizontal: int) -> int:
    """Largest position p (1-based) with idx[p-1] <= n_horizontal; 0 if none.

    This is the split between the horizontal prefix and vertical tail of a
    bundle-chart multi-index (horizontal coordinates come first, so the
    ascending order groups them as a prefix).
    """
    p = 0
    for i in idx:
        if i <= n_horizontal:
            p += 1
        else:
            break
    return p
