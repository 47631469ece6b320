from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shortpathlab.errors import CapacityError, MembershipError, ValidationError
from shortpathlab.instances import Graph
from shortpathlab.statespace import SpinConfig, build_statespace
from tests.conftest import er_graph


def brute_force_independent_sets(g: Graph) -> list[int]:
    """Oracle: filter all 2^n subsets against the edge constraints."""
    out = []
    for mask in range(1 << g.n):
        if all(not ((mask >> i) & 1 and (mask >> j) & 1) for i, j in g.edges):
            out.append(mask)
    return out


def test_slice_count():
    space = build_statespace("hamming-slice", 4, k=2)
    assert space.M == 6


def test_independent_sets_k2(k2_graph):
    space = build_statespace("independent-sets", 2, graph=k2_graph)
    assert space.M == 3
    assert list(space.masks) == [0b00, 0b01, 0b10]


def test_independent_sets_path3(path3_graph):
    # oracle: 8 subsets, reject {1,2}, {2,3}, {1,2,3} (1-based)
    space = build_statespace("independent-sets", 3, graph=path3_graph)
    assert space.M == 5
    assert list(space.masks) == brute_force_independent_sets(path3_graph)


def test_hypercube_rank_is_binary_value():
    space = build_statespace("hypercube", 3)
    assert space.rank(SpinConfig(3, 0b101)) == 5
    assert space.unrank(5).bits == 0b101


def test_slice_rank_unrank_all():
    space = build_statespace("hamming-slice", 4, k=2)
    masks = [space.unrank(i).bits for i in range(space.M)]
    assert masks == sorted(masks)  # documented increasing-bitmask order
    for i in range(space.M):
        assert space.rank(space.unrank(i)) == i


@pytest.mark.parametrize("kind,kwargs", [
    ("hypercube", dict(n=6)),
    ("hamming-slice", dict(n=7, k=3)),
])
def test_rank_unrank_bijection(kind, kwargs):
    n = kwargs["n"]
    space = build_statespace(kind, **kwargs)
    for i in range(space.M):
        assert space.rank(space.unrank(i)) == i


def test_independent_set_rank_unrank_bijection():
    g = er_graph(10, seed=3)
    space = build_statespace("independent-sets", 10, graph=g)
    assert list(space.masks) == brute_force_independent_sets(g)
    for i in range(0, space.M, 7):
        assert space.rank(space.unrank(i)) == i


def test_independent_set_membership_error(k2_graph):
    space = build_statespace("independent-sets", 2, graph=k2_graph)
    with pytest.raises(MembershipError):
        space.rank(SpinConfig(2, 0b11))


def test_slice_weight_mismatch():
    space = build_statespace("hamming-slice", 4, k=2)
    with pytest.raises(MembershipError):
        space.rank(SpinConfig(4, 0b0111))


def test_slice_counts_sum_to_hypercube():
    for n in range(1, 21):
        total = sum(build_statespace("hamming-slice", n, k=k).M for k in range(n + 1))
        assert total == 2**n


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=12), st.data())
def test_enumerated_independent_sets_satisfy_constraints(n, data):
    edges = sorted({
        tuple(sorted(pair))
        for pair in data.draw(st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(
                lambda t: t[0] != t[1]),
            max_size=2 * n))
    })
    g = Graph(n=n, edges=tuple(edges))
    space = build_statespace("independent-sets", n, graph=g)
    for mask in space.masks:
        for i, j in g.edges:
            assert not ((int(mask) >> i) & 1 and (int(mask) >> j) & 1)
    assert space.M == len(brute_force_independent_sets(g))


def test_capacity_error_names_limit():
    with pytest.raises(CapacityError) as err:
        build_statespace("hypercube", 12, state_cap=1000)
    assert "1000" in str(err.value)


def test_n_cap():
    with pytest.raises(ValidationError):
        build_statespace("hypercube", 31)


def test_spinconfig_helpers():
    x = SpinConfig(4, 0b0101)
    assert x.weight == 2
    assert x.spin(0) == 1 and x.spin(1) == -1
    assert list(x.to_pm1()) == [1, -1, 1, -1]
    assert SpinConfig.from_support(4, [0, 2]) == x


def test_slice_masks_match_itertools():
    space = build_statespace("hamming-slice", 8, k=3)
    expected = sorted(sum(1 << i for i in combo) for combo in combinations(range(8), 3))
    assert list(space.masks) == expected
