import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpcmst import (WeightedGraph, generate_instance, oracle_lca, oracle_mst, oracle_report, oracle_sensitivity,
                    oracle_verify, validate_and_root)


def nx_tree(g):
    T = nx.Graph()
    T.add_nodes_from(range(g.n))
    for e in g.tree_edge_ids().tolist():
        T.add_edge(int(g.u[e]), int(g.v[e]), w=int(g.w[e]), id=e)
    return T


def tree_is_minimum(g, w):
    h = g.with_weights(w)
    _, best = oracle_mst(h)
    return int(w[g.is_tree].sum()) == best


def test_triangle_report(triangle):
    rep = oracle_report(triangle)
    assert rep.sens == {0: 2, 1: 1, 2: 1}
    assert rep.mincover == {0: 3, 1: 3}
    assert rep.pathmax == {2: 2}
    assert rep.lca == {2: 0}


def test_small_example_verdict(small_graph):
    # both chords violate; the smaller id is 2-3 (w=4), whose path peaks at 1-3 (w=7)
    ok, witness = oracle_verify(small_graph, with_witness=True)
    assert not ok
    assert witness == (3, 2)


@pytest.mark.parametrize("seed", range(6))
def test_pathmax_and_lca_match_networkx(seed):
    g = generate_instance("random_weights", {"n": 120, "m": 300, "D": 15}, seed)
    rep = oracle_report(g)
    T = nx_tree(g)
    t = validate_and_root(g, 0)
    lcas = dict(nx.tree_all_pairs_lowest_common_ancestor(
        nx.bfs_tree(T, 0), root=0, pairs=[(int(g.u[e]), int(g.v[e])) for e in rep.lca]))
    for e, x in rep.lca.items():
        a, b = int(g.u[e]), int(g.v[e])
        path = nx.shortest_path(T, a, b)
        assert rep.pathmax[e] == max(T[p][q]["w"] for p, q in zip(path, path[1:]))
        assert x == lcas[(a, b)] == oracle_lca(t, a, b)
    assert rep.verify_verdict == all(int(g.w[e]) >= pm for e, pm in rep.pathmax.items())


@given(st.integers(0, 10**6))
def test_sensitivity_is_tight(seed):
    g = generate_instance("random_graph_with_mst", {"n": 25, "m": 50, "D": 6, "W": 40}, seed)
    sens = oracle_sensitivity(g)
    for e, s in sens.items():
        w = g.w.copy()
        step = 1 if g.is_tree[e] else -1
        if s == math.inf:
            assert g.is_tree[e]
            w[e] += 10**6
            assert tree_is_minimum(g, w)
            continue
        w[e] += step * s
        if w[e] > 0:
            assert tree_is_minimum(g, w)
        w[e] += step
        if w[e] > 0:
            assert not tree_is_minimum(g, w)


def test_report_rejects_non_forest():
    g = generate_instance("random_graph_with_mst", {"n": 10, "m": 20, "D": 4}, 0)
    flags = g.is_tree.copy()
    flags[np.flatnonzero(flags)[0]] = False
    broken = WeightedGraph(g.n, g.u, g.v, g.w, flags, W=g.W)
    with pytest.raises(ValueError):
        oracle_report(broken)
    assert oracle_verify(broken) is False
