"""All-edges LCA over a clustered tree, plus the ancestor-descendant split.

The pipeline: DFS intervals (``euler``), cluster hierarchy
(``clustering``), ancestor doubling on the final cluster tree, a
descending-power sweep that finds the cluster holding each LCA, and an
unwinding pass that descends through the hierarchy to the LCA vertex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clustering import NEVER
from .euler import TreeFrame, euler_preorder
from .graph import WeightedGraph
from .mpc_sim import DistributedStream, MpcConfig, Simulator, create_simulator
from .pipeline import RunOptions, component_config, components, load_instance, merge_stats


@dataclass(frozen=True)
class DfsInterval:
    v_low: int
    v_high: int

    def contains(self, other: "DfsInterval") -> bool:
        return self.v_low <= other.v_low and other.v_high <= self.v_high


def dfs_interval_labeling(t, config: MpcConfig | None = None) -> dict:
    """DFS interval of every vertex of a rooted tree, via Euler tour + list ranking."""
    n = t.n
    sim = create_simulator(config or MpcConfig(n=n, m=max(n - 1, 0)))
    with sim.phase("dfs"):
        raw = sim.scatter({"par": np.asarray(t.parent, dtype=np.int64)})
        low, high = euler_preorder(sim, raw)
    return {v: DfsInterval(int(low[v]), int(high[v])) for v in range(n)}


def hop_levels(D_hat: int) -> int:
    """Number of doubling levels so that hops 2^0..2^L reach any depth <= D_hat."""
    return max(1, math.ceil(math.log2(max(D_hat, 1) + 1)))


def ancestor_table(sim: Simulator, clusters: DistributedStream, verts: DistributedStream,
                   D_hat: int) -> DistributedStream:
    """Rows ``(ell, j, anc, ahigh)``: the ``2^j``-th cluster-tree ancestor of ``ell``.

    Built by doubling: ``hop_{j+1}(c) = hop_j(hop_j(c))``; hops saturate at
    the root. ``ahigh`` is the high end of the ancestor's interval.
    """
    levels = hop_levels(D_hat)
    cur = clusters.take(columns=["ell", "pcl"], rename={"pcl": "anc"})
    table = None
    for j in range(levels):
        if j:
            sim.lookup(cur, "anc", cur, "ell", {"anc2": "anc"})
            cur.assign(anc=cur["anc2"])
            cur.drop("anc2")
        rows = cur.take(columns=["ell", "anc"])
        rows.assign(j=np.full(len(rows), j))
        table = rows if table is None else sim.concat(table, rows)
    cur.release()
    sim.gather(table, "anc", verts, {"ahigh": "high"})
    return table


@dataclass
class AncestorTable:
    """``hops[(c, 2**j)]`` for every cluster ``c`` of a cluster tree."""

    hops: dict
    levels: int

    def hop(self, c, k):
        return self.hops[(c, k)]


def build_ancestor_table(cluster_parent: dict, D_hat: int,
                         config: MpcConfig | None = None) -> AncestorTable:
    """Doubling table for a cluster tree given as ``{cluster: parent cluster}``."""
    ids = sorted(cluster_parent)
    n = max(ids) + 1 if ids else 1
    # the table holds hop_levels rows per cluster
    sim = create_simulator(config or MpcConfig(n=n, m=n * hop_levels(D_hat)))
    clusters = sim.scatter({"ell": np.array(ids, dtype=np.int64),
                            "pcl": np.array([cluster_parent[c] for c in ids], dtype=np.int64)})
    verts = DistributedStream(sim, {"high": np.zeros(n, dtype=np.int64)})
    table = ancestor_table(sim, clusters, verts, D_hat)
    hops = {(e, 1 << j): a for e, j, a in table.to_records(["ell", "j", "anc"])}
    return AncestorTable(hops, hop_levels(D_hat))


def final_clusters(sim: Simulator, verts: DistributedStream, tau: int) -> None:
    """Column ``c``: leader of each vertex's level-``tau`` cluster (pointer jumping)."""
    n = len(verts)
    verts.assign(c=np.where(verts["jl"] == NEVER, np.arange(n), verts["sen"]))
    for _ in range(max(1, math.ceil(math.log2(tau + 1)))):
        sim.gather(verts, "c", verts, {"c": "c"})


def find_lca_clusters(sim: Simulator, edges: DistributedStream, verts: DistributedStream,
                      clusters: DistributedStream, table: DistributedStream, D_hat: int) -> None:
    """Column ``x`` on ``edges``: leader of the final cluster holding LCA(u, v).

    Nested cluster intervals give the answer directly (the outer cluster).
    Otherwise the candidate climbs from c(u) by descending powers of two
    while its interval stays disjoint from c(v)'s, and the answer is the
    candidate's parent.
    """
    sim.gather(edges, "u", verts, {"x": "c"})
    sim.gather(edges, "v", verts, {"cv": "c"})
    # nested intervals settle the edge at once; settled edges get cv = -1
    sim.gather(edges, "x", verts, {"h": "high"})
    x, cv = edges["x"], edges["cv"]
    u_outer = (x <= cv) & (cv <= edges["h"])
    edges.assign(cv=np.where(u_outer, -1, cv))
    sim.gather(edges, "cv", verts, {"h": "high"})
    x, cv = edges["x"], edges["cv"]
    v_outer = (cv >= 0) & (cv <= x) & (x <= edges["h"])
    edges.assign(x=np.where(v_outer, cv, x), cv=np.where(v_outer, -1, cv))
    edges.drop("h")
    for j in range(hop_levels(D_hat) - 1, -1, -1):
        sim.lookup(edges, ["x", np.full(len(edges), j)], table, ["ell", "j"],
                   {"cand": "anc", "ch": "ahigh"})
        cand, ch, cv = edges["cand"], edges["ch"], edges["cv"]
        climb = (cv >= 0) & ~((cand <= cv) & (cv <= ch))
        edges.assign(x=np.where(climb, cand, edges["x"]))
        edges.drop("cand", "ch")
    sim.lookup(edges, "x", clusters, "ell", {"px": "pcl"})
    edges.assign(x=np.where(edges["cv"] >= 0, edges["px"], edges["x"]))
    edges.drop("px", "cv")


def junior_table(verts: DistributedStream, level: int, extra: dict | None = None) -> DistributedStream:
    """Juniors absorbed at ``level``: ``(s, j, jh)`` plus requested vertex columns."""
    mask = verts["jl"] == level
    cols = {"sen": "s", "high": "jh"}
    cols.update(extra or {})
    table = verts.take(mask, list(cols), rename=cols)
    table.assign(j=np.flatnonzero(mask))
    return table


def undo_clustering(sim: Simulator, edges: DistributedStream, verts: DistributedStream,
                    tau: int) -> None:
    """Descend from the LCA cluster ``x`` to the LCA vertex, level by level.

    At step ``i`` a cluster splits into its senior part (same leader) and
    its juniors; the edge moves to the junior whose interval holds both
    endpoints, else stays with the senior.
    """
    for level in range(tau, 0, -1):
        jt = junior_table(verts, level)
        sim.interval_lookup(edges, "x", "u", jt, "s", "j", "jh", {"jj": "j", "jjh": "jh"}, default=-1)
        v = edges["v"]
        inside = (edges["jj"] >= 0) & (edges["jj"] <= v) & (v <= edges["jjh"])
        edges.assign(x=np.where(inside, edges["jj"], edges["x"]))
        edges.drop("jj", "jjh")
        jt.release()


def edge_lcas(frame: TreeFrame, clusters: DistributedStream, tau: int,
              edges: DistributedStream, D_hat: int) -> None:
    """Add column ``a`` = LCA(u, v) (internal ids) to ``edges``."""
    sim = frame.sim
    verts = frame.verts
    with sim.phase("path_collection"):
        final_clusters(sim, verts, tau)
        table = ancestor_table(sim, clusters, verts, D_hat)
        find_lca_clusters(sim, edges, verts, clusters, table, D_hat)
        table.release()
        verts.drop("c")
    with sim.phase("unwind"):
        undo_clustering(sim, edges, verts, tau)
    edges.rename(x="a")


def to_ancestor_descendant(g, t, lcas: dict):
    """Replace every non-tree edge {u, v} by {u, lca} and {v, lca} (same weight).

    Zero-length halves are dropped; edges already joining an ancestor and a
    descendant come out unchanged. Returns ``(graph, provenance)`` where
    ``provenance[i]`` is the original id of output edge ``i``.
    """
    u, v, w, flag, prov = [], [], [], [], []
    for e in range(g.m):
        a, b, c, tree = int(g.u[e]), int(g.v[e]), int(g.w[e]), bool(g.is_tree[e])
        if tree:
            u.append(a), v.append(b), w.append(c), flag.append(True), prov.append(e)
            continue
        x = lcas[e]
        for end in (a, b):
            if end != x:
                u.append(end), v.append(x), w.append(c), flag.append(False), prov.append(e)
    out = WeightedGraph(g.n, np.array(u, dtype=np.int64), np.array(v, dtype=np.int64),
                        np.array(w, dtype=np.int64), np.array(flag, dtype=bool), W=g.W)
    return out, np.array(prov, dtype=np.int64)


def lca_tsv(g, lcas: dict) -> str:
    lines = [f"{int(g.u[e])}\t{int(g.v[e])}\t{x}" for e, x in sorted(lcas.items())]
    return "\n".join(lines) + ("\n" if lines else "")


@dataclass
class LcaResult:
    """LCA of every non-tree edge (original ids), keyed by edge id."""

    lca: dict
    stats: object = None
    taus: list = None

    def tsv(self, g) -> str:
        return lca_tsv(g, self.lca)


def all_edges_lca(g, t=None, D_hat: int | None = None, options=None, root: int = 0) -> LcaResult:
    """LCA of both endpoints of every non-tree edge, one forest component at a time."""
    options = options or RunOptions()
    if t is not None:
        root = t.root
    whole = options.config(g.n, g.m)
    out, stats, taus = {}, [], []
    for comp in components(g, options.seed, D_hat, root):
        sub = comp.graph
        if not len(sub.nontree_edge_ids()):
            continue
        li = load_instance(sub, comp.tree, comp.D_hat, component_config(whole, sub),
                           options.seed, options.target_reduction)
        edge_lcas(li.frame, li.clusters, li.tau, li.edges, comp.D_hat)
        a = sub.vertex_ids[li.frame.order[li.edges["a"]]]
        for e, x in zip(li.nontree_ids.tolist(), a.tolist()):
            out[int(sub.edge_ids[e])] = int(x)
        li.clusters.release()
        stats.append(li.sim.stats)
        taus.append(li.tau)
    return LcaResult(dict(sorted(out.items())), merge_stats(stats), taus)
