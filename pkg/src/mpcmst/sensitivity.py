"""MST sensitivity: how far each edge weight can move before the MST changes.

Tree edge ``{x, par x}`` is named by its lower end ``x``; ``mc[x]`` is the
lightest non-tree edge covering it and its sensitivity is ``mc[x] - w``.
A non-tree edge's sensitivity is its weight minus its tree path maximum.

Non-tree edges are split at their LCA into two halves ``(b, t, w)`` with
``t`` an ancestor of ``b``. A half always has ``b`` leading its cluster and
``t`` a leaf of its own cluster, so it covers no edge inside either end's
cluster. Contraction steps shorten halves; whenever a half gives up a piece
of path running from a cluster's root down to one of its leaves, the piece
is recorded as a root-to-leaf note ``(r, l, i, w)`` on the cluster formed at
step ``i``. After the last step the remaining halves are resolved on the
small cluster tree, and unwinding the hierarchy splits every note into
notes on smaller clusters until each covered tree edge has seen its weight.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import NEVER
from .euler import TreeFrame
from .graph import WeightedGraph
from .lca import edge_lcas, junior_table
from .mpc_sim import POS_INF, DistributedStream, MpcConfig, RoundStats, Simulator
from .pipeline import RunOptions, component_config, components, load_instance, merge_stats
from .verification import edge_pathmax, root_path_rows

HALVES = (("bu", "tu"), ("bv", "tv"))
NOTE_COLUMNS = ("r", "l", "i", "w")


class NotAnMSTError(ValueError):
    """Sensitivity is only defined when the flagged tree is a minimum spanning tree."""


@dataclass(frozen=True)
class RootToLeafNote:
    r: int
    l: int
    i: int
    w: int


@dataclass
class McTable:
    """Lightest covering weight per tree edge id (``math.inf`` on bridges)."""

    mc: dict
    weight: dict

    @property
    def sens(self) -> dict:
        return {e: (math.inf if c == math.inf else c - self.weight[e]) for e, c in self.mc.items()}


@dataclass
class SensitivityState:
    """Everything the three passes share inside one simulator."""

    sim: Simulator
    frame: TreeFrame
    clusters: DistributedStream
    halves: DistributedStream
    notes: DistributedStream
    tau: int
    level: int = 0
    note_peak: int = 0

    @property
    def verts(self) -> DistributedStream:
        return self.frame.verts

    def add_notes(self, extra: DistributedStream) -> None:
        self.notes = self.sim.concat(self.notes, extra)
        self.note_peak = max(self.note_peak, len(self.notes))
        self.notes = dedupe_notes(self.sim, self.notes)

    def note_list(self) -> list:
        return [RootToLeafNote(*(int(x) for x in rec)) for rec in self.notes.to_records(list(NOTE_COLUMNS))]


def dedupe_notes(sim: Simulator, notes: DistributedStream) -> DistributedStream:
    """Drop empty notes (root equals leaf) and keep the lightest per ``(r, l, i)``."""
    notes.filter(notes["r"] != notes["l"])
    out = sim.group_reduce(notes, ["r", "l", "i"], {"w": ("w", "min")})
    notes.release()
    return out


def _empty_notes(sim: Simulator) -> DistributedStream:
    return DistributedStream(sim, {c: np.zeros(0, dtype=np.int64) for c in NOTE_COLUMNS})


def start_sensitivity(sim: Simulator, frame: TreeFrame, edges: DistributedStream,
                      tau: int) -> SensitivityState:
    """Split every non-tree edge ``(u, v, a, w)`` into its two halves.

    A half that starts at the LCA itself is empty and marked dead (``b = -1``).
    """
    n = frame.n
    verts = frame.verts
    verts.assign(c=np.arange(n), form=np.zeros(n, dtype=np.int64),
                 mc=np.full(n, POS_INF, dtype=np.int64))
    halves = edges.take(columns=["u", "v", "a", "w"], rename={"u": "bu", "v": "bv", "a": "tu"})
    bu, bv, a = halves["bu"], halves["bv"], halves["tu"]
    halves.assign(bu=np.where(bu != a, bu, -1), tu=np.where(bu != a, a, -1),
                  bv=np.where(bv != a, bv, -1), tv=np.where(bv != a, a, -1))
    clusters = DistributedStream(sim, {"ell": np.arange(n), "pcl": verts["par"]})
    return SensitivityState(sim, frame, clusters, halves, _empty_notes(sim), tau)


def sens_contraction_step(state: SensitivityState, level: int) -> None:
    """Apply contraction step ``level`` to every half, emitting notes.

    For a half ``(b, t)`` whose path crosses clusters ``C0 (b), ..., Ck (t)``:
    * ``C0`` joins ``Ck`` (k = 1): the half is the single edge above ``b``;
      it updates ``mc[b]`` and is spent;
    * ``C0`` joins ``C1`` (k > 1): ``mc[b]`` is updated, the path inside
      ``C1`` from its root down to ``par b`` becomes a note and ``b`` moves
      up to ``C1``'s root;
    * ``C(k-1)`` joins ``Ck``: the edge above ``C(k-1)``'s root is updated,
      the path inside ``C(k-1)`` from its root down to its leaf on the path
      becomes a note and ``t`` moves down to that leaf;
    * any other merge leaves the half alone.
    """
    sim, verts, clusters, halves = state.sim, state.verts, state.clusters, state.halves
    n = len(verts)
    absorbed = verts["jl"] == level
    verts.assign(nxt=np.where(absorbed, verts["sen"], np.arange(n)))

    # children x of absorbed clusters, grouped by the senior that absorbs their parent
    sim.gather(clusters, "pcl", verts, {"g": "nxt"})
    below = clusters["g"] != clusters["pcl"]
    bridge = clusters.take(below, ["ell", "g"], rename={"ell": "lo", "g": "grp"})
    clusters.drop("g")
    sim.gather(bridge, "lo", verts, {"hi": "high"})

    for b, t in HALVES:
        alive = halves[b] >= 0
        sim.gather(halves, np.where(alive, halves[t], -1), verts, {"ct": "c"})
        # top end: the cluster just below t's is absorbed into it
        sim.interval_lookup(halves, "ct", b, bridge, "grp", "lo", "hi", {"x": "lo"}, default=-1)
        hit = halves["x"] >= 0
        made = halves.take(hit, ["x", "w"], rename={"x": "l"})
        sim.gather(made, "l", verts, {"l": "par"})
        sim.gather(made, "l", verts, {"r": "c"})
        sim.gather(made, "r", verts, {"i": "form"})
        sim.deliver(verts, "r", made, {"mc": "w"}, combine="min")
        sim.gather(halves, np.where(hit, halves["x"], -1), verts, {t: "par"})
        halves.drop("x")
        made.keep(*NOTE_COLUMNS)
        state.add_notes(made)

        # bottom end: b's cluster is absorbed
        sim.gather(halves, np.where(alive, halves[b], -1), verts, {"s": "nxt"})
        moved = alive & (halves["s"] != halves[b])
        sim.deliver(verts, b, halves, {"mc": "w"}, combine="min", where=moved)
        spent = moved & (halves["s"] == halves["ct"])
        opened = moved & ~spent
        made = halves.take(opened, [b, "s", "w"], rename={b: "l", "s": "r"})
        sim.gather(made, "l", verts, {"l": "par"})
        sim.gather(made, "r", verts, {"i": "form"})
        made.keep(*NOTE_COLUMNS)
        halves.assign(**{b: np.where(spent, -1, np.where(opened, halves["s"], halves[b])),
                         t: np.where(spent, -1, halves[t])})
        halves.drop("s", "ct")
        state.add_notes(made)
    bridge.release()

    juniors = verts.take(absorbed, ["sen"])
    sim.deliver(verts, "sen", juniors, {"form": level}, combine="max")
    juniors.release()
    sim.gather(verts, "c", verts, {"c": "nxt"})
    sim.gather(clusters, "ell", verts, {"g": "jl"})
    clusters.filter(clusters["g"] != level)
    clusters.drop("g")
    sim.gather(clusters, "pcl", verts, {"pcl": "nxt"})
    verts.drop("nxt")
    state.level = level


def sens_cluster_contractions(state: SensitivityState, observer=None) -> None:
    """Replay the hierarchy's steps with note creation; ``observer(state)`` runs after each."""
    with state.sim.phase("contraction"):
        if observer is not None:
            observer(state)
        for level in range(1, state.tau + 1):
            sens_contraction_step(state, level)
            if observer is not None:
                observer(state)


def cluster_sensitivity(state: SensitivityState, D_hat: int) -> None:
    """Resolve the surviving halves on the level-``tau`` cluster tree.

    Each half first pays for its top edge (the edge above ``v'``, the root
    of the child cluster of ``t``'s cluster on the path) and is shortened to
    ``(b, v')``. A shortened half starting at cluster ``x`` and ending ``k``
    cluster levels up covers, for every cluster ``c`` among the ``k``
    lowest on that path, the edge above ``c`` and the root-to-leaf path
    inside ``c``'s parent. So ``minA(c)``, the lightest shortened half that
    starts in ``c``'s subtree and ends above ``c``, sets ``mc`` of the edge
    above ``c`` and one note on the parent cluster.
    """
    sim, verts, clusters, halves = state.sim, state.verts, state.clusters, state.halves
    with sim.phase("path_collection"):
        kids = clusters.take(clusters["ell"] != clusters["pcl"], ["ell", "pcl"])
        sim.gather(kids, "ell", verts, {"hi": "high"})
        rows = root_path_rows(sim, clusters, D_hat)
        short = None
        for b, t in HALVES:
            alive = halves[b] >= 0
            sim.gather(halves, np.where(alive, halves[t], -1), verts, {"ct": "c"})
            sim.interval_lookup(halves, "ct", b, kids, "pcl", "ell", "hi", {"ct": "ell"}, default=-1)
            if np.any(alive & (halves["ct"] < 0)):
                raise AssertionError("half does not end next to a cluster root")
            sim.deliver(verts, "ct", halves, {"mc": "w"}, combine="min", where=alive)
            sim.lookup(halves, "ct", clusters, "ell", {t: "lev"}, default=0)
            sim.lookup(halves, b, clusters, "ell", {"ct": "lev"}, default=0)
            halves.assign(ct=halves["ct"] - halves[t])
            part = halves.take(alive & (halves["ct"] > 0), [b, "ct", "w"], rename={b: "x", "ct": "k"})
            halves.drop("ct")
            short = part if short is None else sim.concat(short, part)
        halves.release()
        kids.release()

        bucket = sim.group_reduce(short, ["x", "k"], {"w": ("w", "min")})
        short.release()
        sim.lookup(rows, ["x", rows["t"] + 1], bucket, ["x", "k"], {"a": "w"}, default=POS_INF)
        bucket.release()
        # minimum over all k > t: suffix minimum along each root path
        rows.assign(t=-rows["t"])
        sim.sort(rows, ["x", "t"])
        sim.prefix_aggregate(rows, "min", POS_INF, "a", out="a", segment="x", inclusive=True)
        best = sim.group_reduce(rows, "anc", {"w": ("a", "min")})
        rows.release()
        best.filter(best["w"] < POS_INF)
        best.rename(anc="l")
        sim.deliver(verts, "l", best, {"mc": "w"}, combine="min")
        sim.lookup(best, "l", clusters, "ell", {"r": "pcl"})
        sim.gather(best, "l", verts, {"l": "par"})
        best.assign(i=np.full(len(best), state.tau))
        best.keep(*NOTE_COLUMNS)
        state.add_notes(best)
        clusters.release()
        verts.drop("c")


def _senior_formation(sim: Simulator, verts: DistributedStream) -> None:
    """Column ``pf``: for a junior ``j``, the formation step of its senior's
    cluster just before ``j`` was absorbed (0 if the senior was a singleton)."""
    n = len(verts)
    absorbed = verts["jl"] != NEVER
    jun = verts.take(absorbed, ["sen", "jl"])
    jun.assign(j=np.flatnonzero(absorbed))
    steps = sim.group_reduce(jun, ["sen", "jl"], {})
    sim.adjacent(steps, "jl", "pf", offset=-1, segment="sen", fill=0)
    sim.lookup(jun, ["sen", "jl"], steps, ["sen", "jl"], {"pf": "pf"}, default=0)
    steps.release()
    verts.assign(pf=np.zeros(n, dtype=np.int64))
    sim.deliver(verts, "j", jun, {"pf": "pf"})
    jun.release()


def undo_contractions(state: SensitivityState) -> None:
    """Unwind steps ``tau..1``, splitting notes until every covered edge is paid.

    At step ``L`` a note on a cluster formed at step ``>= L`` looks for the
    junior absorbed at ``L`` whose subtree holds the leaf. If there is one,
    the edge above the junior is paid and the note splits into the senior
    part (root down to the junior's parent) and the junior part (junior's
    root down to the leaf).
    """
    sim, verts = state.sim, state.verts
    with sim.phase("unwind"):
        _senior_formation(sim, verts)
        for level in range(state.tau, 0, -1):
            notes = state.notes
            jt = junior_table(verts, level)
            notes.assign(q=np.where(notes["i"] >= level, notes["l"], -1))
            sim.interval_lookup(notes, "r", "q", jt, "s", "j", "jh", {"q": "j"}, default=-1)
            jt.release()
            hit = notes["q"] >= 0
            sim.deliver(verts, "q", notes, {"mc": "w"}, combine="min", where=hit)
            made = notes.take(hit, ["q", "l", "w"], rename={"q": "r"})
            sim.gather(made, "r", verts, {"i": "form"})
            sim.gather(notes, np.where(hit, notes["q"], -1), verts, {"l": "par", "i": "pf"})
            notes.drop("q")
            made.keep(*NOTE_COLUMNS)
            state.add_notes(made)
        if len(state.notes):
            raise AssertionError(f"{len(state.notes)} dangling notes after unwinding")
        state.notes.release()
        verts.drop("pf")


def audit_halves(state: SensitivityState) -> None:
    """Sequential check of the half invariant (tests only)."""
    verts = state.verts
    c, par, high = verts["c"], verts["par"], verts["high"]
    for b, t in HALVES:
        for x, y in zip(state.halves[b].tolist(), state.halves[t].tolist()):
            if x < 0:
                continue
            if not (y < x <= high[y]):
                raise AssertionError(f"half ({x}, {y}) is not ancestor-descendant")
            if c[x] != x or c[x] == c[y]:
                raise AssertionError(f"half ({x}, {y}) covers an edge inside its bottom cluster")
            z = x
            while par[z] != y:
                z = par[z]
            if c[z] != z:
                raise AssertionError(f"half ({x}, {y}) covers an edge inside its top cluster")


@dataclass
class SensitivityResult:
    """Per-edge sensitivity keyed by original edge id (``math.inf`` on bridges)."""

    sens: dict
    mc: McTable
    stats: RoundStats = field(repr=False)
    note_peak: int = 0
    taus: list = field(default_factory=list)

    def tsv(self, g: WeightedGraph) -> str:
        lines = []
        for e in range(g.m):
            kind = "tree" if g.is_tree[e] else "nontree"
            s = self.sens[e]
            lines.append(f"{g.u[e]}\t{g.v[e]}\t{g.w[e]}\t{kind}\t{'inf' if s == math.inf else s}")
        return "\n".join(lines) + ("\n" if lines else "")


def _component_sensitivity(comp, config: MpcConfig, options: RunOptions, observer=None):
    g, t, D_hat = comp.graph, comp.tree, comp.D_hat
    if not len(g.nontree_edge_ids()):
        # no chords: every tree edge is a bridge
        tree_w = {int(g.edge_ids[t.edge_id[v]]): int(t.weight[v]) for v in range(g.n) if v != t.root}
        return {e: math.inf for e in tree_w}, tree_w, {}, None, 0, 0
    li = load_instance(g, t, D_hat, config, options.seed, options.target_reduction)
    sim, frame = li.sim, li.frame
    edges_lcas = li.edges
    edge_lcas(frame, li.clusters, li.tau, edges_lcas, D_hat)
    edge_pathmax(sim, frame, li.clusters, edges_lcas, li.tau, D_hat)
    pm = edges_lcas["pm"].copy()
    edges_lcas.drop("pm")
    w = g.w[li.nontree_ids]
    if np.any(w < pm):
        raise NotAnMSTError("input tree is not an MST")
    frame.verts.drop("pw")
    state = start_sensitivity(sim, frame, edges_lcas, li.tau)
    edges_lcas.release()
    sens_cluster_contractions(state, observer)
    cluster_sensitivity(state, D_hat)
    undo_contractions(state)

    mc_int = frame.verts["mc"]
    tree_mc = {}
    tree_w = {}
    for x in range(1, frame.n):
        v = int(frame.order[x])
        e = int(g.edge_ids[t.edge_id[v]])
        tree_mc[e] = math.inf if mc_int[x] >= POS_INF else int(mc_int[x])
        tree_w[e] = int(t.weight[v])
    chord = {int(g.edge_ids[e]): int(w[i] - pm[i]) for i, e in enumerate(li.nontree_ids.tolist())}
    return tree_mc, tree_w, chord, sim.stats, state.note_peak, li.tau


def analyze_sensitivity(g: WeightedGraph, D_hat: int | None = None,
                        options: RunOptions | None = None, root: int = 0,
                        observer=None) -> SensitivityResult:
    """Sensitivity of every edge of ``g`` whose flagged edges form an MST (forest).

    Raises :class:`NotAnMSTError` when some non-tree edge is lighter than
    the heaviest tree edge on its path.
    """
    options = options or RunOptions()
    whole = options.config(g.n, g.m)
    mc, weight, sens, stats, peak, taus = {}, {}, {}, [], 0, []
    for comp in components(g, options.seed, D_hat, root):
        cmc, cw, chord, st, p, tau = _component_sensitivity(
            comp, component_config(whole, comp.graph), options, observer)
        mc.update(cmc)
        weight.update(cw)
        sens.update(chord)
        if st is not None:
            stats.append(st)
        peak = max(peak, p)
        taus.append(tau)
    table = McTable(mc, weight)
    sens.update(table.sens)
    return SensitivityResult(sens, table, merge_stats(stats), peak, taus)


def tree_edge_sensitivity(g: WeightedGraph, t=None, D_hat: int | None = None,
                          options: RunOptions | None = None) -> McTable:
    """``mc`` and ``sens`` for every tree edge."""
    root = t.root if t is not None else 0
    return analyze_sensitivity(g, D_hat, options, root).mc


def nontree_edge_sensitivity(g: WeightedGraph, t=None, D_hat: int | None = None,
                             options: RunOptions | None = None) -> dict:
    """``w(e) - pathmax(e)`` for every non-tree edge ``e``."""
    root = t.root if t is not None else 0
    res = analyze_sensitivity(g, D_hat, options, root)
    return {e: s for e, s in res.sens.items() if not g.is_tree[e]}
