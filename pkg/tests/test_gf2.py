import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mncodes import gf2


def _rank_oracle(a):
    # plain Gaussian elimination on int arrays, independent of the packed version
    a = a.copy() % 2
    r = 0
    for c in range(a.shape[1]):
        piv = [i for i in range(r, a.shape[0]) if a[i, c]]
        if not piv:
            continue
        a[[r, piv[0]]] = a[[piv[0], r]]
        for i in range(a.shape[0]):
            if i != r and a[i, c]:
                a[i] ^= a[r]
        r += 1
    return r


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 70)), elements=st.integers(0, 1)))
def test_rank_matches_oracle(a):
    assert gf2.rank(a) == _rank_oracle(a.astype(np.int64))


@given(arrays(np.uint8, st.tuples(st.integers(1, 5), st.integers(1, 130)), elements=st.integers(0, 1)))
def test_pack_round_trip(a):
    assert np.array_equal(gf2.unpack(gf2.pack(a), a.shape[1]), a)


def test_solve_and_inverse():
    rng = np.random.default_rng(4)
    n = 40
    while True:
        a = rng.integers(0, 2, (n, n), dtype=np.uint8)
        if gf2.rank(a) == n:
            break
    b = rng.integers(0, 2, (n, 7), dtype=np.uint8)
    x = gf2.solve_right(a, b)
    assert np.array_equal(gf2.matmul(a, x), b)
    assert np.array_equal(gf2.matmul(a, gf2.inverse(a)), np.eye(n, dtype=np.uint8))


def test_singular_raises():
    a = np.array([[1, 1], [1, 1]], dtype=np.uint8)
    with pytest.raises(np.linalg.LinAlgError):
        gf2.solve_right(a, np.eye(2, dtype=np.uint8))
