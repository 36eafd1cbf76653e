import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpcmst import (GraphFormatError, NotSpanningError, WeightedGraph, estimate_diameter,
                    generate_instance, oracle_mst, oracle_verify, parse_edge_list, validate_and_root)
from mpcmst.graph import split_components


def test_parse_example(small_graph):
    g = small_graph
    assert g.n == 4 and g.m == 5
    assert int(g.is_tree.sum()) == 3
    assert g.to_text().splitlines()[0] == "4"


@pytest.mark.parametrize("text, match", [
    ("3\n0 0 3 N\n", "self-loop"),
    ("3\n0 1 0 T\n", "weight"),
    ("3\n0 5 1 T\n", "range"),
    ("3\n0 1 1 N\n1 0 2 N\n", "duplicate"),
    ("3\n0 1 x T\n", "integer"),
    ("3\n0 1 1 Q\n", "flag"),
])
def test_parse_errors(text, match):
    with pytest.raises(GraphFormatError, match=match):
        parse_edge_list(text)


def test_parallel_tree_and_chord_allowed():
    g = parse_edge_list("2\n0 1 1 T\n1 0 4 N\n")
    assert g.m == 2


def path_graph(n):
    return WeightedGraph.from_edges(n, [(i, i + 1, 1, True) for i in range(n - 1)])


def test_root_path():
    t = validate_and_root(path_graph(4), 0)
    assert t.parent.tolist() == [0, 0, 1, 2]


def test_not_spanning_too_few():
    g = WeightedGraph.from_edges(4, [(0, 1, 1, True), (1, 2, 1, True), (2, 3, 1, False)])
    with pytest.raises(NotSpanningError):
        validate_and_root(g, 0)


def test_not_spanning_cycle():
    g = WeightedGraph.from_edges(4, [(0, 1, 1, True), (1, 2, 1, True), (0, 2, 1, True),
                                     (2, 3, 1, False)])
    with pytest.raises(NotSpanningError):
        validate_and_root(g, 0)


def test_diameter_path_and_star():
    assert estimate_diameter(validate_and_root(path_graph(5))).exact_D == 4
    star = WeightedGraph.from_edges(9, [(0, i, 1, True) for i in range(1, 9)])
    assert estimate_diameter(validate_and_root(star)).exact_D == 2


@pytest.mark.parametrize("seed", range(5))
def test_diameter_matches_all_pairs(seed):
    g = generate_instance("random_tree_with_diameter", {"n": 500, "D": 5 + 20 * seed}, seed)
    est = estimate_diameter(validate_and_root(g), seed)
    G = nx.Graph(list(zip(g.u.tolist(), g.v.tolist())))
    assert est.exact_D == nx.diameter(G) == 5 + 20 * seed
    assert est.exact_D <= est.D_hat <= 2 * est.exact_D


def test_split_components():
    rows = [(0, 1, 1, True), (1, 2, 1, True), (0, 2, 3, False),
            (3, 4, 1, True), (4, 5, 1, True), (3, 5, 3, False)]
    parts = split_components(WeightedGraph.from_edges(6, rows))
    assert len(parts) == 2
    assert [p.vertex_ids.tolist() for p in parts] == [[0, 1, 2], [3, 4, 5]]
    assert len(split_components(path_graph(5))) == 1


def test_chord_across_components_is_not_spanning():
    rows = [(0, 1, 1, True), (2, 3, 1, True), (1, 2, 5, False)]
    g = WeightedGraph.from_edges(4, rows)
    with pytest.raises(NotSpanningError):
        split_components(g)
    assert oracle_verify(g) is False


@pytest.mark.parametrize("cycles, n", list(itertools.product([1, 2], [6, 100, 1000])))
def test_lower_bound_weights(cycles, n):
    g = generate_instance("lower_bound", {"n": n, "cycles": cycles}, 0)
    assert g.n == n + 1 and g.m == 2 * n
    _, weight = oracle_mst(g)
    assert weight == n + cycles
    assert int(g.w[g.is_tree].sum()) == n + cycles
    assert oracle_verify(g)


def test_planted_tree_is_minimum():
    g = generate_instance("random_graph_with_mst", {"n": 100, "m": 400, "D": 10}, 0)
    G = nx.Graph()
    G.add_weighted_edges_from(zip(g.u.tolist(), g.v.tolist(), g.w.tolist()))
    assert nx.minimum_spanning_tree(G).size(weight="weight") == int(g.w[g.is_tree].sum())
    assert oracle_verify(g)


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_perturbed_is_not_minimum(seed, k):
    g = generate_instance("perturbed_mst", {"n": 60, "m": 200, "D": 12, "k": k}, seed)
    assert not oracle_verify(g)


def test_generator_rejects_unsatisfiable():
    with pytest.raises(ValueError):
        generate_instance("random_tree_with_diameter", {"n": 10, "D": 10}, 0)


@given(st.integers(2, 9), st.data())
def test_spanning_check_matches_union_find(n, data):
    pairs = list(itertools.combinations(range(n), 2))
    chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True, max_size=n + 1))
    flags = data.draw(st.lists(st.booleans(), min_size=len(chosen), max_size=len(chosen)))
    g = WeightedGraph.from_edges(n, [(a, b, 1, f) for (a, b), f in zip(chosen, flags)])
    T = nx.Graph()
    T.add_nodes_from(range(n))
    T.add_edges_from(e for e, f in zip(chosen, flags) if f)
    expect = T.number_of_edges() == n - 1 and nx.is_connected(T)
    try:
        validate_and_root(g, 0)
        ok = True
    except NotSpanningError:
        ok = False
    assert ok == expect
