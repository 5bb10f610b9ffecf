import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from infquillen import trees as tr


@pytest.mark.parametrize("k", range(1, 9))
def test_planar_count_is_catalan(k):
    planar = list(tr.enumerate_planar(k))
    assert len(planar) == tr.catalan(k - 1) == math.comb(2 * k - 2, k - 1) // k
    assert len(set(planar)) == len(planar)
    assert all(tr.leaves(t) == k and tr.internal_vertices(t) == k - 1 for t in planar)


@pytest.mark.parametrize("k", range(1, 8))
def test_nonplanar_orbits(k):
    nonplanar = list(tr.enumerate_nonplanar(k))
    assert all(tr.is_canonical(t) for t in nonplanar)
    embedded = [s for t in nonplanar for s in tr.planar_embeddings(t)]
    assert sorted(embedded, key=tr.sort_key) == sorted(tr.enumerate_planar(k), key=tr.sort_key)
    for t in nonplanar:
        assert len(tr.planar_embeddings(t)) * tr.aut_order(t) == 2 ** (k - 1)


def test_known_automorphism_orders():
    assert tr.aut_order(tr.from_string("(..)")) == 2
    assert tr.aut_order(tr.from_string("((..)(..))")) == 8
    assert tr.aut_order(tr.from_string("(.(..))")) == 2


trees_st = st.integers(1, 7).flatmap(lambda k: st.sampled_from(list(tr.enumerate_planar(k))))


@given(trees_st)
def test_string_round_trip_and_canonical_form(t):
    assert tr.from_string(tr.to_string(t)) == t
    c = tr.canonicalize(t)
    assert tr.canonicalize(c) == c
    assert t in tr.planar_embeddings(c)


@pytest.mark.parametrize("bad", ["", "(.", "(...)", "x", "(..))"])
def test_parse_errors(bad):
    with pytest.raises(ValueError):
        tr.from_string(bad)
