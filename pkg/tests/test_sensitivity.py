import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpcmst import (MSTSensitivityAnalyzer, NotAnMSTError, RunOptions, WeightedGraph,
                    analyze_sensitivity, generate_instance, nontree_edge_sensitivity,
                    oracle_report, oracle_sensitivity, tree_edge_sensitivity)
from mpcmst.clustering import Clustering
from mpcmst.mpc_sim import POS_INF
from mpcmst.sensitivity import audit_halves


def test_triangle(triangle):
    res = analyze_sensitivity(triangle)
    assert res.sens == {0: 2, 1: 1, 2: 1}
    assert res.mc.mc == {0: 3, 1: 3}


def test_no_chords_all_bridges():
    g = WeightedGraph.from_edges(4, [(0, 1, 3, True), (1, 2, 1, True), (1, 3, 2, True)])
    res = analyze_sensitivity(g)
    assert res.sens == {0: math.inf, 1: math.inf, 2: math.inf}


def test_parallel_chord():
    g = WeightedGraph.from_edges(3, [(0, 1, 4, True), (1, 2, 2, True), (2, 1, 9, False)])
    res = analyze_sensitivity(g)
    assert res.sens == {0: math.inf, 1: 7, 2: 7}


def test_not_an_mst_raises(small_graph):
    with pytest.raises(NotAnMSTError):
        analyze_sensitivity(small_graph)


def test_single_chord_covers_whole_path():
    # path 0-1-2-3-4 and one chord 4-0; every tree edge has mc = 20
    rows = [(i + 1, i, i + 1, True) for i in range(4)] + [(4, 0, 20, False)]
    res = analyze_sensitivity(WeightedGraph.from_edges(5, rows))
    assert res.mc.mc == {0: 20, 1: 20, 2: 20, 3: 20}
    assert res.sens[4] == 16


def test_function_wrappers(triangle):
    assert tree_edge_sensitivity(triangle).sens == {0: 2, 1: 1}
    assert nontree_edge_sensitivity(triangle) == {2: 1}


def test_tsv(triangle):
    g = WeightedGraph.from_edges(4, [(0, 1, 1, True), (1, 2, 2, True), (0, 2, 3, False),
                                     (2, 3, 5, True)])
    lines = analyze_sensitivity(g).tsv(g).splitlines()
    assert lines == ["0\t1\t1\ttree\t2", "1\t2\t2\ttree\t1", "0\t2\t3\tnontree\t1",
                     "2\t3\t5\ttree\tinf"]


class Auditor:
    """Per-step sequential checks of halves, notes and mc values."""

    def __init__(self, g):
        self.g = g
        self.prev_mc = None
        self.steps = 0
        self.peak = 0

    def __call__(self, state):
        frame = state.frame
        verts = state.verts
        n = frame.n
        audit_halves(state)
        par, high, jl, sen = verts["par"], verts["high"], verts["jl"], verts["sen"]
        cl = Clustering(np.asarray(par), np.asarray(jl), np.asarray(sen), state.tau, 0)
        kids = [[] for _ in range(n)]
        for x in range(1, n):
            kids[par[x]].append(x)
        by_level = {}
        for note in state.note_list():
            assert 1 <= note.i <= state.level
            c = by_level.setdefault(note.i, cl.cluster_of(note.i))
            assert c[note.l] == note.r and note.r != note.l
            assert not kids[note.l] or any(c[y] != note.r for y in kids[note.l])
        self.peak = max(self.peak, state.note_peak)
        assert state.note_peak <= 8 * n
        mc = np.asarray(verts["mc"]).copy()
        if self.prev_mc is not None:
            assert np.all(mc <= self.prev_mc)
        self.prev_mc = mc
        g = self.g
        nt = g.nontree_edge_ids()
        cu, cv = frame.rank[g.u[nt]], frame.rank[g.v[nt]]
        cw = g.w[nt]
        for x in np.flatnonzero(mc < POS_INF).tolist():
            inside_u = (cu >= x) & (cu <= high[x])
            inside_v = (cv >= x) & (cv <= high[x])
            covering = inside_u ^ inside_v
            assert mc[x] in set(cw[covering].tolist())
            assert mc[x] >= cw[covering].min()
        self.steps += 1


@pytest.mark.parametrize("seed, n, D", [(0, 120, 10), (1, 500, 40), (2, 300, 150)])
def test_invariants_every_step(seed, n, D):
    g = generate_instance("random_graph_with_mst", {"n": n, "m": 4 * n, "D": D}, seed)
    audit = Auditor(g)
    res = analyze_sensitivity(g, options=RunOptions(seed=seed), observer=audit)
    assert audit.steps == res.taus[0] + 1
    assert res.sens == oracle_sensitivity(g)
    assert res.note_peak <= 8 * g.n


@pytest.mark.parametrize("n", [1000, 1500])
def test_exact_on_planted(n):
    g = generate_instance("random_graph_with_mst", {"n": n, "m": 4 * n, "D": n // 20}, n)
    res = analyze_sensitivity(g, options=RunOptions(seed=7))
    rep = oracle_report(g)
    assert res.sens == rep.sens
    assert res.mc.mc == rep.mincover


@given(st.integers(0, 10**6), st.integers(4, 60), st.floats(1.0, 3.0))
def test_matches_oracle_small(seed, n, density):
    m = min(int(n * density), n * (n - 1) // 2 - 1)
    g = generate_instance("random_graph_with_mst",
                          {"n": n, "m": max(m, n - 1), "D": max(2, min(n - 1, n // 3)), "W": 12},
                          seed)
    assert analyze_sensitivity(g, options=RunOptions(seed=seed)).sens == oracle_sensitivity(g)


def test_forest():
    rows = [(0, 1, 1, True), (1, 2, 2, True), (0, 2, 3, False),
            (3, 4, 5, True), (4, 5, 1, True), (3, 5, 6, False), (5, 6, 2, True)]
    g = WeightedGraph.from_edges(7, rows)
    assert analyze_sensitivity(g).sens == oracle_sensitivity(g)


def test_estimator(triangle):
    est = MSTSensitivityAnalyzer(seed=3).fit(triangle)
    assert est.sens_.tolist() == [2.0, 1.0, 1.0]
    assert est.mc_[:2].tolist() == [3.0, 3.0] and math.isnan(est.mc_[2])
    assert est.transform(triangle).tolist() == [2.0, 1.0, 1.0]
    assert est.get_params()["seed"] == 3
