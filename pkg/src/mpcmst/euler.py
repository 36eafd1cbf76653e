"""Euler tour and list ranking: DFS preorder intervals inside the simulator.

Every later phase works on vertices renumbered by preorder, so vertex ``x``
owns the interval ``[x, high[x]]`` and the vertex table is dense.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mpc_sim import DistributedStream, Simulator


@dataclass
class TreeFrame:
    """A rooted tree resident in the simulator, renumbered by preorder.

    ``verts`` is the dense vertex table with columns ``par``, ``pw`` and
    ``high`` (and whatever later phases add). ``order[x]`` is the original
    id of internal vertex ``x``; ``rank`` is the inverse map.
    """

    sim: Simulator
    verts: DistributedStream
    order: np.ndarray
    rank: np.ndarray

    @property
    def n(self) -> int:
        return len(self.order)


def euler_preorder(sim: Simulator, tree: DistributedStream) -> tuple[np.ndarray, np.ndarray]:
    """Preorder number and subtree high of every vertex.

    ``tree`` is dense by original id with a ``par`` column (root points to
    itself). Children are visited in increasing id order. Costs O(log n)
    rounds for the pointer-doubling list ranking.
    """
    par = tree["par"]
    n = len(par)
    if n == 1:
        return np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    root_mask = par == np.arange(n)
    # arcs 2x (down into x) and 2x+1 (up out of x); the root's pair bracket the tour
    kids = sim.scatter({"x": np.flatnonzero(~root_mask)})
    sim.gather(kids, "x", tree, {"p": "par"})
    sim.sort(kids, ["p", "x"])
    sim.adjacent(kids, "x", "sib", offset=1, segment="p", fill=-1)
    sim.adjacent(kids, "p", "prev_p", offset=-1, fill=-1)
    first = kids["prev_p"] != kids["p"]
    kids.drop("prev_p")

    nav = DistributedStream(sim, {"fc": np.full(n, -1, dtype=np.int64),
                                  "sib": np.full(n, -1, dtype=np.int64)})
    sim.deliver(nav, "p", kids, {"fc": "x"}, where=first)
    sim.deliver(nav, "x", kids, {"sib": "sib"})
    kids.release()
    # arcs 2x and 2x+1 live next to vertex record x, so this is local work:
    # down(x) -> down(first child) or up(x);
    # up(x) -> down(next sibling) or up(parent), and the root's up arc ends the tour
    fc, sib = nav["fc"], nav["sib"]
    xs = np.arange(n)
    succ = np.empty(2 * n, dtype=np.int64)
    succ[0::2] = np.where(fc >= 0, 2 * fc, 2 * xs + 1)
    succ[1::2] = np.where(root_mask, 2 * xs + 1, np.where(sib >= 0, 2 * sib, 2 * par + 1))
    nav.release()
    arcs = sim.scatter({"succ": succ})
    arcs.assign(dist=np.where(succ == np.arange(2 * n), 0, 1))
    steps = int(np.ceil(np.log2(max(2 * n, 2))))
    for _ in range(steps):
        sim.gather(arcs, "succ", arcs, {"d2": "dist"})
        arcs.assign(dist=arcs["dist"] + arcs["d2"])
        arcs.drop("d2")
        sim.gather(arcs, arcs["succ"], arcs, {"succ": "succ"})
    # larger distance to the end of the tour means earlier position
    arcs.assign(succ=np.arange(2 * n), dist=(2 * n - 1) - arcs["dist"])
    arcs.rename(succ="arc", dist="pos")
    sim.sort(arcs, "pos")
    arcs.assign(down=arcs["arc"] % 2 == 0)
    sim.prefix_aggregate(arcs, "+", 0, "down", out="pre")
    arcs.drop("down")
    down = arcs["arc"] % 2 == 0
    x = arcs["arc"] // 2
    spans = DistributedStream(sim, {"low": np.zeros(n, dtype=np.int64),
                                    "first": np.zeros(n, dtype=np.int64),
                                    "last": np.zeros(n, dtype=np.int64)})
    sim.deliver(spans, x, arcs, {"low": "pre", "first": "pos"}, where=down)
    sim.deliver(spans, x, arcs, {"last": "pos"}, where=~down)
    arcs.release()
    low = spans["low"].copy()
    high = low + (spans["last"] - spans["first"] + 1) // 2 - 1
    spans.release()
    return low, high


def prepare_tree(sim: Simulator, parent: np.ndarray, weight: np.ndarray) -> TreeFrame:
    """Load a rooted tree (root ``parent[r] == r``) and renumber it by preorder."""
    parent = np.asarray(parent, dtype=np.int64)
    n = len(parent)
    with sim.phase("dfs"):
        raw = sim.scatter({"par": parent, "pw": np.asarray(weight, dtype=np.int64)})
        low, high = euler_preorder(sim, raw)
        raw.assign(low=low, high=high)
        sim.gather(raw, "par", raw, {"plow": "low"})
        verts = DistributedStream(sim, {"par": np.zeros(n, dtype=np.int64),
                                        "pw": np.zeros(n, dtype=np.int64),
                                        "high": np.zeros(n, dtype=np.int64)})
        sim.deliver(verts, "low", raw, {"par": "plow", "pw": "pw", "high": "high"})
        raw.release()
    order = np.empty(n, dtype=np.int64)
    order[low] = np.arange(n)
    return TreeFrame(sim, verts, order, low)
