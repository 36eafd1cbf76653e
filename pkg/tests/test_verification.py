import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpcmst import (MSTVerifier, MpcConfig, RunOptions, WeightedGraph, generate_instance,
                    oracle_report, oracle_verify, validate_and_root, verify)
from mpcmst.clustering import clustering_from_frame
from mpcmst.lca import edge_lcas
from mpcmst.mpc_sim import NEG_INF
from mpcmst.pipeline import load_instance
from mpcmst.verification import edge_pathmax, init_labeling, labeling_view


def test_triangle_is_minimum(triangle):
    res = verify(triangle)
    assert res.verdict and res.witness is None
    assert res.pathmax == {2: 2}


def test_small_example_is_not_minimum(small_graph):
    res = verify(small_graph)
    assert not res.verdict
    # both chords violate; the smallest id is reported with the heaviest edge on its path
    assert res.witness == (3, 2)
    assert res.pathmax == {3: 7, 4: 5}


def test_no_chords_is_minimum():
    g = WeightedGraph.from_edges(4, [(0, 1, 3, True), (1, 2, 1, True), (1, 3, 2, True)])
    res = verify(g)
    assert res.verdict and res.pathmax == {}


def test_single_vertex():
    assert verify(WeightedGraph.from_edges(1, [])).verdict


def test_not_spanning_is_no():
    g = WeightedGraph.from_edges(4, [(0, 1, 1, True), (1, 2, 1, True), (2, 3, 1, False)])
    res = verify(g)
    assert not res.verdict and res.witness is None and "spanning" in res.reason


def test_ties_do_not_disqualify():
    g = WeightedGraph.from_edges(3, [(0, 1, 2, True), (1, 2, 2, True), (0, 2, 2, False)])
    assert verify(g).verdict


def test_init_labeling_is_empty(small_graph):
    lab = init_labeling(small_graph, validate_and_root(small_graph))
    assert set(lab.through.values()) == {NEG_INF}
    assert set(lab.out.values()) == {NEG_INF}
    assert init_labeling(WeightedGraph.from_edges(1, []),
                         validate_and_root(WeightedGraph.from_edges(1, []))).out == {}


def expected_labeling(t, lca, c, g):
    """Recompute through/out from their definitions for clustering ``c``."""
    through, out = {}, {}
    for x in range(t.n):
        p = int(t.parent[x])
        if c[x] != x or p == x:
            continue
        best, y = NEG_INF, p
        while y != c[p]:
            best = max(best, int(t.weight[y]))
            y = int(t.parent[y])
        through[(x, int(c[p]))] = best
    for e, a in lca.items():
        for d in (int(g.u[e]), int(g.v[e])):
            if d == a:
                continue
            low = high = NEG_INF
            y = d
            while y != a:
                p = int(t.parent[y])
                if c[y] == c[p] == c[d]:
                    low = max(low, int(t.weight[y]))
                if c[y] == c[p] == c[a]:
                    high = max(high, int(t.weight[y]))
                y = p
            out[(d, a)] = low
            out[(a, d)] = high
    return through, out


@pytest.mark.parametrize("seed, n, m, D", [(0, 60, 200, 8), (1, 500, 2500, 30), (2, 200, 600, 100)])
def test_labeling_matches_definition_every_level(seed, n, m, D):
    g = generate_instance("random_weights", {"n": n, "m": m, "D": D}, seed)
    t = validate_and_root(g, 0)
    D_hat = D + 3
    li = load_instance(g, t, D_hat, RunOptions(seed=seed).config(g.n, g.m), seed)
    edge_lcas(li.frame, li.clusters, li.tau, li.edges, D_hat)
    order = li.frame.order
    lca = {int(e): int(order[a]) for e, a in zip(li.nontree_ids, li.edges["a"])}
    cl = clustering_from_frame(li.frame, li.tau, li.seed_used)
    seen = []

    def observer(level):
        lab = labeling_view(li.frame, li.edges, li.nontree_ids, g)
        through, out = expected_labeling(t, lca, cl.cluster_of(level), g)
        assert lab.through == through
        assert lab.out == out
        seen.append(level)

    edge_pathmax(li.sim, li.frame, li.clusters, li.edges, li.tau, D_hat, observer)
    assert seen == list(range(li.tau + 1))
    rep = oracle_report(g)
    assert dict(zip(li.nontree_ids.tolist(), li.edges["pm"].tolist())) == rep.pathmax


def test_two_level_path_through():
    # path 0-1-2-3 with weights 5, 3, 7 (child side listed first)
    g = WeightedGraph.from_edges(4, [(1, 0, 5, True), (2, 1, 3, True), (3, 2, 7, True),
                                     (3, 0, 9, False)])
    res = verify(g)
    assert res.pathmax == {3: 7} and res.verdict


@pytest.mark.parametrize("kind", ["random_graph_with_mst", "perturbed_mst", "random_weights"])
@pytest.mark.parametrize("seed", range(4))
def test_pathmax_and_verdict_match_oracle(kind, seed):
    g = generate_instance(kind, {"n": 700, "m": 2500, "D": 10 + 40 * seed, "k": 3}, seed)
    res = verify(g, options=RunOptions(seed=seed))
    rep = oracle_report(g)
    assert res.pathmax == rep.pathmax
    assert res.verdict == rep.verify_verdict == oracle_verify(g)
    if not res.verdict:
        assert res.witness == oracle_verify(g, with_witness=True)[1]


def test_forest_and_crossing_chord():
    rows = [(0, 1, 1, True), (1, 2, 2, True), (0, 2, 3, False),
            (3, 4, 5, True), (4, 5, 1, True), (3, 5, 2, False)]
    g = WeightedGraph.from_edges(6, rows)
    res = verify(g)
    assert not res.verdict and res.witness == (5, 3)
    crossing = WeightedGraph.from_edges(6, rows[:3] + rows[3:5] + [(2, 3, 9, False)])
    assert not verify(crossing).verdict


@given(st.integers(0, 10**6), st.integers(8, 80))
def test_random_instances_match_oracle(seed, n):
    g = generate_instance("random_weights", {"n": n, "m": 2 * n, "D": max(4, n // 4)}, seed)
    res = verify(g, options=RunOptions(seed=seed))
    assert res.verdict == oracle_verify(g)
    assert res.pathmax == oracle_report(g).pathmax


def test_memory_within_budget(planted):
    res = verify(planted)
    cfg = MpcConfig(n=planted.n, m=planted.m)
    assert res.stats.total_global_words <= cfg.global_budget
    assert res.stats.peak_local_words <= cfg.local_cap


def test_estimator(small_graph):
    est = MSTVerifier().fit(small_graph)
    assert est.verdict_ is False and est.witness_ == (3, 2)
    assert est.predict(small_graph).tolist() == [True, True, True, False, False]
    arr = np.c_[small_graph.u, small_graph.v, small_graph.w, small_graph.is_tree]
    assert MSTVerifier().fit(arr).pathmax_.tolist() == [-1, -1, -1, 7, 5]
