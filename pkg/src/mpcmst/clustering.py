"""Hierarchical clustering by repeated random-mating contraction.

Clusters are named by their leader (the root of the cluster's subtree).
Every vertex leads its singleton cluster at level 0 and keeps leading until
its cluster is absorbed as a junior, so the whole hierarchy fits in two
words per vertex: ``jl[v]``, the step at which v's cluster was absorbed
(``NEVER`` for survivors), and ``sen[v]``, the leader that absorbed it.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .euler import TreeFrame, prepare_tree
from .mpc_sim import DistributedStream, MpcConfig, RoundStats, Simulator, create_simulator

NEVER = 1 << 40


class HierarchyFailure(RuntimeError):
    """The contraction did not reach its target within the step budget."""


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def coin_flips(seed: int, level: int, ids) -> np.ndarray:
    """Seeded fair coins (True = heads), one per cluster leader, via splitmix64."""
    ids = np.asarray(ids, dtype=np.int64).astype(np.uint64)
    base = np.uint64((seed * 0x9E3779B97F4A7C15 + level * 0xD1B54A32D192ED03) & (2**64 - 1))
    with np.errstate(over="ignore"):
        z = ids * np.uint64(0x9E3779B97F4A7C15) + base
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(63)) == 1


# a random-mating step absorbs each non-root cluster with probability 1/4
EXPECTED_SHRINK = 0.75
SCHEDULE_SLACK = 16


def planned_steps(target_reduction: float) -> int:
    """Fixed number of contraction steps for a ``target_reduction``-fold shrink.

    Enough steps for the expected shrink to overshoot the target, plus
    slack for concentration. A run that still misses the target is retried
    with a fresh seed.
    """
    need = math.log(max(target_reduction, 1.0)) / -math.log(EXPECTED_SHRINK)
    return math.ceil(need) + SCHEDULE_SLACK


@dataclass
class ContractionRecord:
    level: int
    new_cluster: int
    senior: int
    juniors: list
    formation: dict  # sub-cluster leader -> level at which it was formed


def contraction_step(sim: Simulator, clusters: DistributedStream, level: int,
                     seed: int) -> DistributedStream:
    """One random-mating step on the cluster tree ``clusters``.

    ``clusters`` has one record per cluster: ``ell`` (leader) and ``pcl``
    (parent cluster's leader, ``ell`` itself at a root). A child is absorbed
    into its parent iff the child flips heads and the parent tails, so no
    cluster is absorbed and absorbing in the same step. The stream is
    updated in place; the absorbed ``(j, s)`` pairs are returned.
    """
    ell, pcl = clusters["ell"], clusters["pcl"]
    junior = coin_flips(seed, level, ell) & ~coin_flips(seed, level, pcl) & (ell != pcl)
    pairs = clusters.take(junior, ["ell", "pcl"], rename={"ell": "j", "pcl": "s"})
    clusters.filter(~junior)
    # survivors whose parent was absorbed now hang below the absorbing senior
    sim.lookup(clusters, "pcl", pairs, "j", {"up": "s"}, default=-1)
    clusters.assign(pcl=np.where(clusters["up"] >= 0, clusters["up"], clusters["pcl"]))
    clusters.drop("up")
    return pairs


def _target(n: int, target_reduction: float) -> float:
    return max(1.0, n / target_reduction)


def contract_frame(frame: TreeFrame, D_hat: int, seed: int = 0,
                   target_reduction: float | None = None, max_retries: int = 8):
    """Build the hierarchy on a loaded tree.

    Runs the fixed schedule of ``planned_steps`` steps (so the round count
    depends on ``D_hat`` only) and checks that at most
    ``max(1, n / target_reduction)`` clusters remain. Adds columns ``jl``
    and ``sen`` to ``frame.verts`` and returns
    ``(clusters, tau, seed_used, retries)`` where ``clusters`` is the final
    cluster-tree stream.
    """
    sim = frame.sim
    verts = frame.verts
    n = frame.n
    if target_reduction is None:
        target_reduction = float(max(D_hat, 1)) ** 3
    target = _target(n, target_reduction)
    tau = planned_steps(target_reduction)
    for retry in range(max_retries + 1):
        run_seed = seed + retry * 0x5851F42D
        with sim.phase("contraction"):
            verts.assign(jl=np.full(n, NEVER, dtype=np.int64), sen=np.full(n, -1, dtype=np.int64))
            clusters = DistributedStream(sim, {"ell": np.arange(n), "pcl": verts["par"]})
            for level in range(1, tau + 1):
                pairs = contraction_step(sim, clusters, level, run_seed)
                sim.deliver(verts, "j", pairs, {"jl": level, "sen": "s"})
                pairs.release()
            if sim.count(clusters) <= target:
                return clusters, tau, run_seed, retry
            clusters.release()
    raise HierarchyFailure(f"more than {target:.0f} clusters left after {tau} steps, "
                           f"{max_retries} retries")


@dataclass
class Clustering:
    """Harness-side view of a finished hierarchy, in original vertex ids.

    ``absorbed_at[v]`` is the step at which the cluster led by ``v`` became
    a junior (``NEVER`` if it survives to level ``tau``) and ``absorbed_by[v]``
    the leader of the senior that absorbed it.
    """

    parent: np.ndarray
    absorbed_at: np.ndarray
    absorbed_by: np.ndarray
    tau: int
    seed: int
    retries: int = 0
    stats: RoundStats | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.parent)

    def leaders(self, level: int) -> np.ndarray:
        """Leaders of the clusters in C_level."""
        return np.flatnonzero(self.absorbed_at > level)

    @property
    def levels(self) -> list:
        return [self.leaders(i) for i in range(self.tau + 1)]

    def level_sizes(self) -> list:
        return [int(np.count_nonzero(self.absorbed_at > i)) for i in range(self.tau + 1)]

    def hierarchy_size(self) -> int:
        """Sum of ``|C_i|`` over ``C_0`` and every level at which a step formed a cluster.

        A step that contracts nothing leaves the cluster set unchanged, so it
        adds no clusters.
        """
        sizes = self.level_sizes()
        formed = set(self.absorbed_at[self.absorbed_at != NEVER].tolist())
        return sizes[0] + sum(sizes[i] for i in range(1, self.tau + 1) if i in formed)

    def cluster_of(self, level: int) -> np.ndarray:
        """``c[v]``: leader of the level-``level`` cluster containing ``v``."""
        c = np.arange(self.n)
        while True:
            move = self.absorbed_at[c] <= level
            if not move.any():
                return c
            c = np.where(move, self.absorbed_by[c], c)

    def leader_map(self, level: int) -> dict:
        c = self.cluster_of(level)
        return {v: int(c[v]) for v in range(self.n)}

    def cluster_tree_edges(self, level: int) -> list:
        """``(child, parent, (child leader, its tree parent))`` for every non-root cluster."""
        c = self.cluster_of(level)
        out = []
        for x in self.leaders(level).tolist():
            p = int(self.parent[x])
            if p != x:
                out.append((x, int(c[p]), (x, p)))
        return out

    def formation_levels(self) -> np.ndarray:
        """Level at which each leader's cluster was last enlarged, as of its absorption."""
        form = np.zeros(self.n, dtype=np.int64)
        has = self.absorbed_by >= 0
        np.maximum.at(form, self.absorbed_by[has], self.absorbed_at[has])
        return form

    def records(self) -> list:
        out = []
        for level in range(1, self.tau + 1):
            js = np.flatnonzero(self.absorbed_at == level)
            prior = self.absorbed_at < level
            for s in np.unique(self.absorbed_by[js]).tolist():
                juniors = sorted(js[self.absorbed_by[js] == s].tolist())
                form = {}
                for x in [s] + juniors:
                    kids = (self.absorbed_by == x) & prior
                    form[x] = int(self.absorbed_at[kids].max()) if kids.any() else 0
                out.append(ContractionRecord(level, s, s, juniors, form))
        return out

    def to_json(self) -> str:
        levels = []
        for r in self.records():
            levels.append({"level": r.level, "cluster": r.new_cluster, "senior": r.senior,
                           "juniors": r.juniors,
                           "formation": {str(k): v for k, v in sorted(r.formation.items())}})
        doc = {"n": self.n, "tau": self.tau, "seed": self.seed, "retries": self.retries,
               "level_sizes": self.level_sizes(), "contractions": levels}
        return json.dumps(doc, sort_keys=True)


def clustering_from_frame(frame: TreeFrame, tau: int, seed: int, retries: int = 0) -> Clustering:
    """Map the ``jl``/``sen`` columns back to original vertex ids."""
    order = frame.order
    jl = frame.verts["jl"]
    sen = frame.verts["sen"]
    n = frame.n
    absorbed_at = np.empty(n, dtype=np.int64)
    absorbed_by = np.full(n, -1, dtype=np.int64)
    absorbed_at[order] = jl
    has = sen >= 0
    absorbed_by[order[has]] = order[sen[has]]
    parent = np.empty(n, dtype=np.int64)
    parent[order] = order[frame.verts["par"]]
    return Clustering(parent, absorbed_at, absorbed_by, tau, seed, retries, frame.sim.stats)


def build_hierarchy(t, D_hat: int, target_reduction: float | None = None, seed: int = 0,
                    config: MpcConfig | None = None) -> Clustering:
    """Cluster a rooted tree until at most ``max(1, n / target_reduction)`` clusters remain."""
    n = t.n
    sim = create_simulator(config or MpcConfig(n=n, m=max(n - 1, 0), rng_seed=seed))
    frame = prepare_tree(sim, t.parent, t.weight)
    clusters, tau, used, retries = contract_frame(frame, D_hat, seed, target_reduction)
    clusters.release()
    return clustering_from_frame(frame, tau, used, retries)
