"""Harness plumbing shared by the pipelines: components, configs, stats."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace

import numpy as np

from .clustering import contract_frame
from .euler import TreeFrame, prepare_tree
from .graph import WeightedGraph, estimate_diameter, split_components, validate_and_root
from .mpc_sim import DistributedStream, MpcConfig, RoundStats, Simulator, create_simulator


@dataclass(frozen=True)
class RunOptions:
    delta: float = 0.5
    kappa: float = 4.0
    c_g: float = 8.0
    sort_round_cost: int = 1
    seed: int = 0
    target_reduction: float | None = None
    # explicit caps, used to replay a run under tightened budgets
    local_cap: int | None = None
    global_budget: int | None = None
    machine_count: int | None = None

    def config(self, n: int, m: int) -> MpcConfig:
        return MpcConfig(n=n, m=m, delta=self.delta, kappa=self.kappa, c_g=self.c_g,
                         sort_round_cost=self.sort_round_cost, rng_seed=self.seed,
                         local_cap=self.local_cap, global_budget=self.global_budget,
                         machine_count=self.machine_count)


def component_config(whole: MpcConfig, sub: WeightedGraph) -> MpcConfig:
    """A component runs on its share of the fleet: same local cap, budget c_g (m_i + n_i).

    A connected instance keeps ``whole`` unchanged, so explicit caps survive.
    """
    if sub.n == whole.n and sub.m == whole.m:
        return whole
    return replace(whole, n=sub.n, m=sub.m, local_cap=whole.local_cap, global_budget=None,
                   machine_count=None)


@dataclass
class LoadedInstance:
    frame: TreeFrame
    clusters: DistributedStream
    tau: int
    edges: DistributedStream
    nontree_ids: np.ndarray
    seed_used: int
    retries: int
    D_hat: int

    @property
    def sim(self) -> Simulator:
        return self.frame.sim


def load_instance(g: WeightedGraph, t, D_hat: int, config: MpcConfig, seed: int = 0,
                  target_reduction: float | None = None) -> LoadedInstance:
    """Scatter one component and build its hierarchy.

    ``edges`` holds the non-tree edges as ``(u, v, w)`` in preorder ids, in
    the order of ``nontree_ids``.
    """
    sim = create_simulator(config)
    nt = g.nontree_edge_ids()
    edges = sim.scatter({"u": g.u[nt], "v": g.v[nt], "w": g.w[nt]})
    frame = prepare_tree(sim, t.parent, t.weight)
    with sim.phase("dfs"):
        ranks = DistributedStream(sim, {"r": frame.rank})
        sim.gather(edges, "u", ranks, {"u": "r"})
        sim.gather(edges, "v", ranks, {"v": "r"})
        ranks.release()
    clusters, tau, used, retries = contract_frame(frame, D_hat, seed, target_reduction)
    return LoadedInstance(frame, clusters, tau, edges, nt, used, retries, D_hat)


@dataclass
class Component:
    graph: WeightedGraph  # relabelled; vertex_ids / edge_ids map back
    tree: object
    D_hat: int
    exact_D: int


def components(g: WeightedGraph, seed: int = 0, D_hat: int | None = None,
               root: int = 0) -> list[Component]:
    """Split, root and estimate the diameter of every tree component (sequential).

    Raises ``NotSpanningError`` when the flagged edges cannot be a spanning
    forest of ``g``.
    """
    parts = split_components(g)
    out = []
    for i, sub in enumerate(parts):
        # the component holding ``root`` is rooted there, every other one at its smallest id
        hit = np.flatnonzero(sub.vertex_ids == root)
        local_root = int(hit[0]) if len(hit) else 0
        t = validate_and_root(sub, local_root)
        est = estimate_diameter(t, seed + i)
        out.append(Component(sub, t, est.D_hat if D_hat is None else max(D_hat, est.exact_D),
                             est.exact_D))
    return out


def merge_stats(parts: list[RoundStats]) -> RoundStats:
    """Components run side by side: rounds take the max, global words add up."""
    out = RoundStats()
    if not parts:
        return out
    by_phase: Counter = Counter()
    glob: Counter = Counter()
    for st in parts:
        for k, v in st.rounds_by_phase.items():
            by_phase[k] = max(by_phase[k], v)
        for k, v in st.peak_global_by_phase.items():
            glob[k] += v
    out.rounds_by_phase.update(by_phase)
    out.peak_global_by_phase.update(glob)
    out.rounds_total = max(st.rounds_total for st in parts)
    out.peak_local_words = max(st.peak_local_words for st in parts)
    out.total_global_words = sum(st.total_global_words for st in parts)
    out.messages_sent = sum(st.messages_sent for st in parts)
    return out
