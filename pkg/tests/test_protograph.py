import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mncodes import gf2
from mncodes.protograph import (
    NO_CYCLE,
    BaseMatrix,
    LiftedCode,
    UnliftableError,
    girth,
    lift,
    lifted_girth,
    preset,
    validate,
)

B12 = [[1, 0, 1, 1, 0, 0], [0, 1, 0, 3, 0, 1], [2, 0, 1, 1, 1, 0], [1, 2, 1, 2, 0, 0]]
B23 = [[1, 0, 0, 3, 1], [1, 1, 0, 3, 0], [1, 2, 2, 1, 0]]


def test_presets_as_published():
    assert preset("b12").entries.tolist() == B12 and preset("b12").h0 == 2
    assert preset("b23").entries.tolist() == B23 and preset("b23").h0 == 2
    assert validate(preset("b12")) == [] and validate(preset("b23")) == []
    with pytest.raises(KeyError):
        preset("b99")


def test_rates_of_presets():
    assert preset("b12").inner_rate == pytest.approx(0.5)
    assert preset("b12").mother_rate == pytest.approx(1 / 3)
    assert preset("b23").inner_rate == pytest.approx(2 / 3)


@pytest.mark.parametrize(
    "entries, h0, fragment",
    [
        (np.zeros((4, 6), int), 2, "all-zero"),
        ([[4, 1, 1], [1, 1, 1]], 1, "exceeds max parallel edges"),
        ([[1, 1, 1, 1], [1, 1, 1, 1]], 1, "square"),
        ([[1, 0, 0], [1, 1, 1]], 1, "degree 1"),
        ([[1, 1, 1], [1, 1, 1]], 3, "transmitted column"),
        ([[1, 1], [1, 1]], 0, "h0 must be"),
    ],
)
def test_validate_reports(entries, h0, fragment):
    problems = validate(BaseMatrix(np.array(entries), h0))
    assert any(fragment in p for p in problems), problems


@given(arrays(np.int64, st.tuples(st.integers(1, 5), st.integers(2, 7)), elements=st.integers(0, 3)), st.data())
def test_text_round_trip(entries, data):
    h0 = data.draw(st.integers(1, entries.shape[1] - 1))
    b = BaseMatrix(entries, h0)
    assert BaseMatrix.from_text(b.to_text()) == b


def test_malformed_text():
    with pytest.raises(ValueError):
        BaseMatrix.from_text("2 3 1\n1 1 1\n")
    with pytest.raises(ValueError):
        BaseMatrix.from_text("2 3 1\n1 x 1\n1 1 1\n")


def test_lift_1200(code1200):
    c = code1200
    assert (c.n, c.h, c.m) == (1200, 600, 1200)
    H = c.H.toarray().astype(np.int64)
    base = preset("b12")
    # distinct shifts per entry keep every base degree intact
    assert np.array_equal(H.sum(axis=0).reshape(-1, c.ell)[:, 0], base.column_degrees)
    assert np.array_equal(H.sum(axis=1).reshape(-1, c.ell)[:, 0], base.row_degrees)
    assert gf2.rank(c.H2.toarray()) == c.n
    # c = v G satisfies the mother-code checks: H1 + H2 G^T = 0
    lhs = (c.H1.toarray().astype(np.int64) + c.H2.toarray().astype(np.int64) @ c.G.T.astype(np.int64)) % 2
    assert not lhs.any()
    assert lifted_girth(c) >= 6


def test_lift_deterministic_and_serializable(small_code):
    again = lift(preset("b12"), 24, seed=0)
    assert again.shifts == small_code.shifts
    text = small_code.shift_table_text()
    back = LiftedCode.from_shift_table_text(text)
    assert back.content_hash() == small_code.content_hash()
    assert (back.H != small_code.H).nnz == 0


def test_lifted_girth_matches_networkx(small_code):
    g = nx.Graph()
    H = small_code.H.tocoo()
    g.add_edges_from((("c", int(r)), ("v", int(c))) for r, c in zip(H.row, H.col))
    assert lifted_girth(small_code) == girth(small_code.H) == nx.girth(g)


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 6), st.integers(1, 8)), elements=st.integers(0, 1)))
def test_girth_matches_networkx(H):
    g = nx.Graph()
    g.add_edges_from((("c", int(r)), ("v", int(c))) for r, c in zip(*np.nonzero(H)))
    expected = nx.girth(g)
    got = girth(H)
    assert got == (NO_CYCLE if expected == float("inf") else expected)


def test_unliftable_cases():
    with pytest.raises(UnliftableError):
        lift(preset("b12"), 1)
    with pytest.raises(UnliftableError, match="singular for every lift"):
        lift(preset("b23"), 300)
    with pytest.raises(ValueError):
        lift(BaseMatrix(np.zeros((2, 3), int), 1), 10)


def test_tiny_collapsed_lift(tiny_code):
    assert (tiny_code.h, tiny_code.n) == (4, 8)
    assert gf2.rank(tiny_code.H2.toarray()) == 8
