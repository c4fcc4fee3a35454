import itertools

import pytest

from fibreforms.multiindex import (
    all_multiindices,
    insert_index,
    merge_with_parity,
    sort_with_parity,
    split_position,
    validate_multiindex,
)


def perm_sign(seq):
    sign = 1
    items = list(seq)
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            if items[i] > items[j]:
                sign = -sign
            elif items[i] == items[j]:
                return 0
    return sign


def test_sort_with_parity_matches_bruteforce():
    for n in range(1, 5):
        for seq in itertools.product(range(1, 5), repeat=n):
            idx, parity = sort_with_parity(seq)
            assert idx == tuple(sorted(seq))
            assert parity == perm_sign(seq)


def test_insert_index():
    assert insert_index(2, (1, 3)) == ((1, 2, 3), -1)
    assert insert_index(4, (1, 3)) == ((1, 3, 4), 1)
    assert insert_index(3, (1, 3)) == ((1, 3, 3), 0)


def test_merge_with_parity():
    merged, sign = merge_with_parity((2,), (1,))
    assert merged == (1, 2) and sign == -1
    assert merge_with_parity((1,), (1,))[1] == 0


def test_all_multiindices_counts():
    import math

    for n in range(1, 6):
        for ell in range(n + 1):
            assert len(list(all_multiindices(n, ell))) == math.comb(n, ell)


def test_split_position():
    assert split_position((1, 2, 4), 2) == 2
    assert split_position((3, 4), 2) == 0
    assert split_position((1, 2), 2) == 2


def test_validate_rejects_bad_indices():
    with pytest.raises(ValueError):
        validate_multiindex((2, 1), 3)
    with pytest.raises(ValueError):
        validate_multiindex((0, 1), 3)
    with pytest.raises(ValueError):
        validate_multiindex((1, 4), 3)
