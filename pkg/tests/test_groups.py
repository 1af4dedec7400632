import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahsp.corpus import all_subgroups, groups_of_order, groups_up_to
from ahsp.groups import (
    GroupElement,
    GroupError,
    GroupSpec,
    Subgroup,
    bilinear,
    chain_length,
    contains,
    direct_sum_subgroups,
    generation_sample_size,
    iteration_bound,
    orthogonal,
    project_subgroup,
    rank,
    span,
    sylow_decompose,
    trivial,
    whole,
)
from ahsp.verify import brute_elements, brute_orthogonal, brute_rank

Z43 = GroupSpec((4, 3))
Z22 = GroupSpec((2, 2))


def el(group, *coords):
    return GroupElement(tuple(coords), group)


def test_groupspec_validation():
    with pytest.raises(GroupError):
        GroupSpec((6,))
    with pytest.raises(GroupError):
        GroupSpec((1,))
    g = GroupSpec((8, 2, 9, 5))
    assert g.order == 720
    assert g.sylow_blocks == ((0, 1), (2,), (3,))


def test_element_arithmetic_reduces():
    x = el(Z43, 3, 2)
    assert (x + x).coords == (2, 1)
    assert (-x).coords == (1, 1)
    assert (x * 4).coords == (0, 2)
    assert (x * 12).is_zero()
    with pytest.raises(GroupError):
        _ = x + el(Z22, 1, 0)


def test_index_round_trip_row_major():
    g = GroupSpec((4, 3))
    assert g.index((2, 1)) == 7
    assert all(g.from_index(g.index(c)) == c for c in g.iter_coords())
    assert list(g.flat_indices(g.coords_array)) == list(range(g.order))


def test_bilinear_examples():
    z2 = GroupSpec((2,))
    assert bilinear(el(z2, 1), el(z2, 1)) == Fraction(1, 2)
    assert bilinear(el(Z43, 2, 1), el(Z43, 1, 2)) == Fraction(1, 6)
    assert bilinear(el(Z43, 3, 1), Z43.zero()) == 0
    # independent big-integer evaluation
    x, y = (2, 1), (1, 2)
    num = sum(a * b * (12 // n) for a, b, n in zip(x, y, Z43.moduli)) % 12
    assert Fraction(num, 12) == Fraction(1, 6)


def test_span_examples():
    k = span(Z43, [(2, 0)])
    assert k.order == 2
    assert set(k.iter_coords()) == {(0, 0), (2, 0)}
    assert span(Z43, []).order == 1
    assert span(Z22, [(1, 0), (0, 1)]) == whole(Z22)


def test_contains_examples():
    k = span(Z43, [(2, 0)])
    assert contains(k, (2, 0))
    assert not contains(k, (1, 0))
    assert contains(k, Z43.zero())


def test_orthogonal_examples():
    diag = span(Z22, [(1, 1)])
    assert orthogonal(diag) == diag
    assert orthogonal(trivial(Z43)) == whole(Z43)
    kp = orthogonal(span(Z43, [(2, 0)]))
    assert kp.order == 6
    assert set(kp.iter_coords()) == {(a, b) for a in (0, 2) for b in range(3)}


def test_rank_and_length_examples():
    assert chain_length(Z43) == 3 and rank(Z43) == 1
    for n in range(1, 6):
        g = GroupSpec((2,) * n)
        assert chain_length(g) == rank(g) == n
    t = trivial(Z43)
    assert chain_length(t) == 0 and rank(t) == 0


def test_sylow_examples():
    comps = sylow_decompose(Z43)
    assert [(c.group.moduli, c.prime) for c in comps] == [((4,), 2), ((3,), 3)]
    assert len(sylow_decompose(Z22)) == 1
    comps = sylow_decompose(GroupSpec((8, 2, 9, 5)))
    assert [c.group.moduli for c in comps] == [(8, 2), (9,), (5,)]


def test_project_and_direct_sum_examples():
    k = span(Z43, [(2, 0)])
    k1, k2 = project_subgroup(k, 0), project_subgroup(k, 1)
    assert set(k1.iter_coords()) == {(0,), (2,)}
    assert k2.order == 1
    assert direct_sum_subgroups(Z43, [k1, k2]) == k
    comps = sylow_decompose(Z43)
    assert direct_sum_subgroups(Z43, [trivial(c.group) for c in comps]) == trivial(Z43)
    assert direct_sum_subgroups(Z43, [whole(c.group) for c in comps]) == whole(Z43)
    assert all(project_subgroup(whole(Z43), i) == whole(c.group) for i, c in enumerate(comps))


def test_iteration_bound_examples():
    assert iteration_bound(Z22, 0.5) == 3
    assert iteration_bound(Z43, 0.25) == 4
    assert iteration_bound(GroupSpec(()), 0.999) == 1
    assert iteration_bound(Z22, Fraction(1, 10)) == 6
    with pytest.raises(GroupError):
        iteration_bound(Z22, 1.0)


def test_generation_sample_size():
    assert generation_sample_size(GroupSpec((2, 2, 2, 2)), 0.5) == 6
    assert generation_sample_size(GroupSpec((8,)), 0.1) == 1 + 5


def test_serialization_round_trip():
    k = span(GroupSpec((8, 9, 5)), [(2, 3, 0), (0, 0, 1)])
    again = Subgroup.from_json(k.group, json.dumps(k.to_json()))
    assert again == k and again.order == k.order
    assert GroupSpec.from_json(json.dumps(k.group.to_json())) == k.group


def test_canonical_form_unique():
    g = GroupSpec((4, 2))
    a = span(g, [(1, 1), (2, 0)])
    b = span(g, [(3, 1), (0, 1), (1, 0)])
    assert (a == b) == (set(a.iter_coords()) == set(b.iter_coords()))
    assert span(g, [(1, 1)]) == span(g, [(3, 1)])


def test_corpus_counts():
    # number of Abelian groups of order 64 is p(6) = 11; subgroups of (Z2)^3 is 16
    assert len(groups_of_order(64)) == 11
    assert len(all_subgroups(GroupSpec((2, 2, 2)))) == 16
    assert len(all_subgroups(GroupSpec((4, 2)))) == 8


def test_invariant_factors():
    g = GroupSpec((8, 4, 9, 3))
    assert whole(g).invariant_factors == (12, 72)
    assert rank(whole(g)) == rank(g) == 2


# -- property tests on random groups and generators --------------------------

prime_powers = st.sampled_from([2, 4, 8, 3, 9, 5, 7])


@st.composite
def group_and_gens(draw):
    moduli = draw(st.lists(prime_powers, min_size=1, max_size=3))
    moduli.sort(key=lambda n: (min(p for p in (2, 3, 5, 7) if n % p == 0), -n))
    g = GroupSpec(tuple(moduli))
    gens = draw(st.lists(st.tuples(*[st.integers(0, n - 1) for n in g.moduli]), max_size=3))
    return g, gens


@settings(max_examples=200, deadline=None)
@given(group_and_gens())
def test_orthogonal_properties(data):
    g, gens = data
    k = span(g, gens)
    kp = orthogonal(k)
    assert orthogonal(kp) == k
    assert k.order * kp.order == g.order
    assert chain_length(g) == chain_length(k) + chain_length(kp)
    assert rank(g) <= rank(k) + rank(kp)
    assert rank(kp) <= rank(g)
    if g.order <= 512:
        assert set(k.iter_coords()) == brute_elements(k)
        assert set(kp.iter_coords()) == brute_orthogonal(k)
        assert rank(k) == brute_rank(brute_elements(k), g)
    for x in kp.iter_coords() if kp.order <= 64 else []:
        for y in gens:
            assert bilinear(el(g, *x), el(g, *y)) == 0


@settings(max_examples=200, deadline=None)
@given(group_and_gens())
def test_crt_round_trip(data):
    g, gens = data
    k = span(g, gens)
    parts = [project_subgroup(k, i) for i in range(len(sylow_decompose(g)))]
    assert direct_sum_subgroups(g, parts) == k
    assert math.prod(p.order for p in parts) == k.order
    assert direct_sum_subgroups(g, [orthogonal(p) for p in parts]) == orthogonal(k)


@settings(max_examples=200, deadline=None)
@given(group_and_gens(), st.tuples(st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 1000)))
def test_reduce_is_coset_canonical(data, raw):
    g, gens = data
    k = span(g, gens)
    x = g.reduce(raw[: g.k])
    r = k.reduce(x)
    assert k.contains(tuple(a - b for a, b in zip(x, r)))
    for gen in gens:
        assert k.reduce(tuple(a + b for a, b in zip(x, gen))) == r


def test_membership_mask_matches_contains():
    for g in groups_up_to(24):
        for k in all_subgroups(g):
            mask = k.membership_mask()
            assert [k.contains(c) for c in g.iter_coords()] == list(mask)
            assert not mask.flags.writeable
            assert int(np.count_nonzero(mask)) == k.order
