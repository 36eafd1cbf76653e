"""Acceptance suite: one test per criterion, each printing one PASS/FAIL line.

Tolerances and regression bounds are pinned as module constants.
"""
import functools
import itertools
import json
import math

import networkx as nx
import numpy as np
import pytest

from mpcmst import (RunOptions, WeightedGraph, all_edges_lca, analyze_sensitivity,
                    build_hierarchy, generate_instance, oracle_lca, oracle_mst, oracle_report,
                    oracle_verify, validate_and_root, verify)
from mpcmst.cli import RunSpec, bench_rows, main
from mpcmst.pipeline import components

VERIFY_SUITE_SIZE = 1000
VERIFY_MAX_N = 2000
SENS_SUITE_SIZE = 500
SENS_MAX_N = 1500
EXHAUSTIVE_MAX_N = 7
EXHAUSTIVE_MAX_CHORDS = 2
EXHAUSTIVE_WEIGHTS = (1, 4)
FULL_WEIGHT_SWEEP_MAX_N = 4  # every weight vector in [1,4] for trees this small, one chord
MEMORY_FACTOR = 8
NOTE_FACTOR = 8
HIERARCHY_FACTOR = 8
SHRINK_BOUND = 0.95
SHRINK_SEEDS = 100
SHRINK_FLOOR = 16
# rounds <= a * log2(D) + b at n = 2^16, per core phase and in total
ROUND_FIT = {"contraction": (1150, 3200), "path_collection": (26, 150),
             "unwind": (120, 340), "core": (1300, 3600)}
ROUND_N = 2 ** 16
ROUND_GRID = (8, 64, 512)
DOUBLING_TOLERANCE = 0.10
LOWER_BOUND_NS = (6, 100, 1000)
CORE_PHASES = ("contraction", "path_collection", "unwind")


@pytest.fixture
def say(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail
    return emit


# -- instance suites ---------------------------------------------------------------
def _log_uniform(rng, lo, hi):
    return int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))


def verify_params(i):
    """Instance ``i`` of the verification suite: n <= 2000, m <= 4n, D in [4, n/4]."""
    rng = np.random.default_rng([7, i])
    n = VERIFY_MAX_N if i % 50 == 0 else _log_uniform(rng, 16, VERIFY_MAX_N)
    m = int(rng.integers(n - 1, 4 * n + 1))
    D = int(rng.integers(4, n // 4 + 1))
    kind = ("random_graph_with_mst", "perturbed_mst", "random_weights")[i % 3]
    params = {"n": n, "m": m, "D": D, "k": int(rng.integers(1, 4))}
    if i % 4 == 0:
        params["W"] = 16  # small weights: many ties
    return kind, params, i


def sens_params(i):
    rng = np.random.default_rng([11, i])
    n = SENS_MAX_N if i % 50 == 0 else _log_uniform(rng, 16, SENS_MAX_N)
    m = int(rng.integers(n - 1, 4 * n + 1))
    D = int(rng.integers(4, n // 4 + 1))
    params = {"n": n, "m": m, "D": D}
    if i % 4 == 0:
        params["W"] = 16
    return "random_graph_with_mst", params, 10_000 + i


def make(spec):
    kind, params, seed = spec
    if kind == "perturbed_mst":
        try:
            return generate_instance(kind, params, seed)
        except ValueError:  # too few non-tree edges with a path of weight >= 2
            kind = "random_weights"
    return generate_instance(kind, params, seed)


def nonisomorphic_trees(n):
    if n == 1:
        return [nx.empty_graph(1)]
    return list(nx.nonisomorphic_trees(n))


def exhaustive_structures():
    """Every tree shape on n <= 7 vertices with every chord set of size <= 2."""
    for n in range(1, EXHAUSTIVE_MAX_N + 1):
        for T in nonisomorphic_trees(n):
            tree = sorted(tuple(sorted(e)) for e in T.edges())
            free = [p for p in itertools.combinations(range(n), 2) if p not in set(tree)]
            for k in range(EXHAUSTIVE_MAX_CHORDS + 1):
                for chords in itertools.combinations(free, k):
                    yield n, tree, list(chords)


def exhaustive_instances():
    """Weight vectors per structure: all ties, one seeded draw from [1,4], and for
    n <= 4 with at most one chord every vector in [1,4]^m."""
    lo, hi = EXHAUSTIVE_WEIGHTS
    for idx, (n, tree, chords) in enumerate(exhaustive_structures()):
        m = len(tree) + len(chords)
        if n <= FULL_WEIGHT_SWEEP_MAX_N and len(chords) <= 1:
            vectors = itertools.product(range(lo, hi + 1), repeat=m)
        else:
            rng = np.random.default_rng([3, idx])
            vectors = [(2,) * m, tuple(rng.integers(lo, hi + 1, size=m).tolist())]
        for w in vectors:
            rows = [(a, b, w[j], True) for j, (a, b) in enumerate(tree)]
            rows += [(a, b, w[len(tree) + j], False) for j, (a, b) in enumerate(chords)]
            yield WeightedGraph.from_edges(n, rows, W=hi)


@functools.lru_cache(maxsize=None)
def verify_runs():
    out = []
    for i in range(VERIFY_SUITE_SIZE):
        g = make(verify_params(i))
        out.append((g, verify(g, options=RunOptions(seed=i))))
    return out


@functools.lru_cache(maxsize=None)
def exhaustive_verify_runs():
    return [(g, verify(g)) for g in exhaustive_instances()]


@functools.lru_cache(maxsize=None)
def sens_runs():
    out = []
    for i in range(SENS_SUITE_SIZE):
        g = make(sens_params(i))
        out.append((g, analyze_sensitivity(g, options=RunOptions(seed=i))))
    return out


@functools.lru_cache(maxsize=None)
def lca_runs():
    graphs = [g for g, _ in verify_runs()] + [g for g, _ in sens_runs()]
    graphs += [WeightedGraph.from_edges(n, [(a, b, 1, True) for a, b in tree]
                                        + [(a, b, 2, False) for a, b in chords])
               for n, tree, chords in exhaustive_structures()]
    return [(g, all_edges_lca(g, options=RunOptions(seed=i))) for i, g in enumerate(graphs)]


def expected_lca(g):
    t = validate_and_root(g, 0) if g.n else None
    return {e: oracle_lca(t, int(g.u[e]), int(g.v[e])) for e in g.nontree_edge_ids().tolist()}


# -- criteria ----------------------------------------------------------------------
def test_c1_verification_matches_oracle(say):
    bad = [i for i, (g, res) in enumerate(verify_runs()) if res.verdict != oracle_verify(g)]
    ex = exhaustive_verify_runs()
    bad_ex = [i for i, (g, res) in enumerate(ex) if res.verdict != oracle_verify(g)]
    no = sum(not r.verdict for _, r in verify_runs())
    say("C1 verification == oracle", not bad and not bad_ex,
        f"{len(verify_runs())} random ({no} NO) + {len(ex)} exhaustive instances, "
        f"{len(bad)} + {len(bad_ex)} mismatches (tolerance 0)")


def test_c2_sensitivity_matches_oracle(say):
    bad, edges, bridges = [], 0, 0
    for i, (g, res) in enumerate(sens_runs()):
        expect = oracle_report(g).sens
        edges += len(expect)
        bridges += sum(v == math.inf for v in expect.values())
        if res.sens != expect:
            bad.append(i)
    say("C2 sensitivity == oracle", not bad,
        f"{len(sens_runs())} planted instances, {edges} edges ({bridges} bridges), "
        f"{len(bad)} mismatching instances (tolerance 0)")


def test_c3_lca_matches_oracle(say):
    runs = lca_runs()
    bad = [i for i, (g, res) in enumerate(runs) if res.lca != expected_lca(g)]
    total = sum(len(res.lca) for _, res in runs)
    say("C3 all-edges LCA == oracle", not bad,
        f"{len(runs)} instances, {total} non-tree edges, {len(bad)} mismatching instances")


def test_c4_round_scaling(say):
    rows = {}
    for n in (ROUND_N, 2 * ROUND_N):
        spec = RunSpec("bench", seed=1, params={"n": n}, d_grid=ROUND_GRID)
        rows[n] = {r["D"]: r for r in bench_rows(spec)}
    problems = []
    for D in ROUND_GRID:
        phases = dict(rows[ROUND_N][D]["rounds_by_phase"])
        phases["core"] = rows[ROUND_N][D]["core_rounds"]
        for name, (a, b) in ROUND_FIT.items():
            if phases[name] > a * math.log2(D) + b:
                problems.append(f"{name}@D={D}: {phases[name]} > {a}*log2(D)+{b}")
        for name in CORE_PHASES:
            x, y = rows[ROUND_N][D]["rounds_by_phase"][name], rows[2 * ROUND_N][D]["rounds_by_phase"][name]
            if abs(y - x) > DOUBLING_TOLERANCE * x:
                problems.append(f"{name}@D={D}: {x} -> {y} on doubling n")
    core = [rows[ROUND_N][D]["core_rounds"] for D in ROUND_GRID]
    dfs = [rows[n][ROUND_GRID[0]]["rounds_by_phase"]["dfs"] for n in rows]
    say("C4 rounds O(log D)", not problems,
        f"core rounds {dict(zip(ROUND_GRID, core))} at n=2^16, fit a,b={ROUND_FIT['core']}, "
        f"doubling n within {DOUBLING_TOLERANCE:.0%}; dfs phase {dfs[0]} -> {dfs[1]}"
        + (f"; {problems}" if problems else ""))


def test_c5_memory_accounting(say):
    worst, over = 0.0, []
    runs = [(g, r.stats) for g, r in verify_runs()] + [(g, r.stats) for g, r in exhaustive_verify_runs()]
    runs += [(g, r.stats) for g, r in sens_runs()] + [(g, r.stats) for g, r in lca_runs()]
    counted = 0
    for g, st in runs:
        if not st.rounds_total:
            continue  # nothing ran in the simulator (no non-tree edges)
        counted += 1
        cfg = RunOptions().config(g.n, g.m)
        ratio = st.total_global_words / (MEMORY_FACTOR * (g.m + g.n))
        worst = max(worst, ratio)
        if ratio > 1 or st.peak_local_words > cfg.local_cap:
            over.append((g.n, g.m))
    say("C5 memory <= 8(m+n), local <= cap", not over,
        f"{counted} simulated runs, worst global/8(m+n) = {worst:.3f}, {len(over)} violations")


def test_c6_note_linearity(say):
    worst = max(r.note_peak / g.n for g, r in sens_runs())
    say("C6 notes <= 8n", worst <= NOTE_FACTOR, f"max note count / n = {worst:.3f}")


def test_c7_hierarchy_size(say):
    worst = 0.0
    runs = list(enumerate(verify_runs())) + list(enumerate(sens_runs()))
    for i, (g, _) in runs:
        for comp in components(g, seed=i):
            if comp.graph.n > 1:
                cl = build_hierarchy(comp.tree, comp.D_hat, seed=i)
                worst = max(worst, cl.hierarchy_size() / comp.graph.n)
    g = generate_instance("random_tree_with_diameter", {"n": 4096, "D": 60}, 0)
    t = validate_and_root(g, 0)
    ratios = {}
    for seed in range(SHRINK_SEEDS):
        sizes = build_hierarchy(t, 64, seed=seed).level_sizes()
        for i in range(len(sizes) - 1):
            if sizes[i] > SHRINK_FLOOR:
                ratios.setdefault(i, []).append(sizes[i + 1] / sizes[i])
    shrink = max(np.mean(v) for v in ratios.values())
    say("C7 hierarchy size / shrink", worst <= HIERARCHY_FACTOR and shrink <= SHRINK_BOUND,
        f"max sum|C_i| / n = {worst:.3f} (bound {HIERARCHY_FACTOR}); worst mean per-step "
        f"shrink over {SHRINK_SEEDS} seeds = {shrink:.3f} (bound {SHRINK_BOUND})")


def test_c8_lower_bound_weights(say):
    got = {}
    for n in LOWER_BOUND_NS:
        for cycles in (1, 2):
            _, w = oracle_mst(generate_instance("lower_bound", {"n": n, "cycles": cycles}, 0))
            got[(n, cycles)] = w
    ok = all(w == n + cycles for (n, cycles), w in got.items())
    say("C8 lower-bound MST weights", ok,
        ", ".join(f"n={n},c={c}: {w}" for (n, c), w in got.items()))


def _fingerprint(g, seed):
    opts = RunOptions(seed=seed)
    v = verify(g, options=opts)
    parts = [json.dumps([v.verdict, v.witness, sorted(v.pathmax.items())]), v.stats.to_json()]
    lca = all_edges_lca(g, options=opts)
    parts += [lca.tsv(g), lca.stats.to_json()]
    if v.verdict:
        s = analyze_sensitivity(g, options=opts)
        parts += [s.tsv(g), s.stats.to_json(), str(s.note_peak)]
    return "\n".join(parts).encode()


def test_c9_determinism(say, tmp_path, capsys):
    diffs = []
    for i in range(6):
        g = make(verify_params(i) if i % 2 else sens_params(i))
        if _fingerprint(g, i) != _fingerprint(g, i):
            diffs.append(i)
    outs = []
    for j in range(2):
        path = tmp_path / f"out{j}.tsv"
        main(["sensitivity", "--seed", "3", "--kind", "random_graph_with_mst", "--n", "500",
              "--m", "1500", "--D", "25", "-o", str(path), "--json"])
        outs.append(path.read_bytes() + capsys.readouterr().out.encode())
    if outs[0] != outs[1]:
        diffs.append("cli")
    say("C9 determinism", not diffs, f"6 instances x 3 pipelines + CLI rerun, {len(diffs)} differences")
