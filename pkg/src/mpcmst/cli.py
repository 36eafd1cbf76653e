"""Command-line harness: generate or load instances, run a pipeline, report.

Exit codes: 0 success, 2 bad input (including a non-minimum tree handed to
``sensitivity``), 3 simulator accounting fault, 4 oracle mismatch.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .clustering import HierarchyFailure, build_hierarchy
from .graph import GraphFormatError, generate_instance, parse_edge_list
from .lca import all_edges_lca
from .mpc_sim import AccountingFault
from .oracle import oracle_report, oracle_verify
from .pipeline import RunOptions, components
from .sensitivity import NotAnMSTError, analyze_sensitivity
from .verification import verify

EXIT_OK, EXIT_INPUT, EXIT_ACCOUNTING, EXIT_MISMATCH = 0, 2, 3, 4
COMMANDS = ("verify", "sensitivity", "lca", "generate", "bench")
KINDS = ("random_tree_with_diameter", "random_graph_with_mst", "perturbed_mst",
         "random_weights", "lower_bound")


@dataclass
class RunSpec:
    command: str
    seed: int
    input: str | None = None
    kind: str | None = None
    params: dict = field(default_factory=dict)
    delta: float = 0.5
    kappa: float = 4.0
    c_g: float = 8.0
    sort_round_cost: int = 1
    D_hat: int | None = None
    output: str | None = None
    dump_hierarchy: str | None = None
    dump_lca: str | None = None
    oracle: bool = False
    json: bool = False
    d_grid: tuple = (8, 64, 512)
    pipeline: str = "sensitivity"

    @property
    def options(self) -> RunOptions:
        return RunOptions(delta=self.delta, kappa=self.kappa, c_g=self.c_g,
                          sort_round_cost=self.sort_round_cost, seed=self.seed)


class UsageError(Exception):
    pass


def _load(spec: RunSpec):
    if (spec.input is None) == (spec.kind is None):
        raise UsageError("give exactly one of --input or --kind")
    if spec.input is not None:
        text = sys.stdin.read() if spec.input == "-" else Path(spec.input).read_text()
        return parse_edge_list(text)
    try:
        return generate_instance(spec.kind, spec.params, spec.seed)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"generator: {exc}") from exc


def _emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _report(spec: RunSpec, table: str, doc: dict) -> None:
    """TSV to ``--output`` (stdout by default); with ``--json`` the stats go to
    stdout and the table is written only when ``--output`` is given."""
    if spec.json:
        if spec.output:
            _emit(spec.output, table)
        sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")
    else:
        _emit(spec.output, table)


def _stats_doc(stats, g, spec: RunSpec) -> dict:
    doc = stats.as_dict()
    cfg = spec.options.config(g.n, g.m)
    doc["config"] = {"n": g.n, "m": g.m, "delta": cfg.delta, "local_cap": cfg.local_cap,
                     "global_budget": cfg.global_budget}
    return doc


def _dump_hierarchy(g, spec: RunSpec) -> None:
    docs = []
    for comp in components(g, spec.seed, spec.D_hat):
        cl = build_hierarchy(comp.tree, comp.D_hat, seed=spec.seed)
        doc = json.loads(cl.to_json())
        doc["vertex_ids"] = comp.graph.vertex_ids.tolist()
        doc["D_hat"] = comp.D_hat
        docs.append(doc)
    Path(spec.dump_hierarchy).write_text(json.dumps({"components": docs}, sort_keys=True) + "\n")


def _dump_lca(g, spec: RunSpec) -> None:
    res = all_edges_lca(g, D_hat=spec.D_hat, options=spec.options)
    Path(spec.dump_lca).write_text(res.tsv(g))


def _run_verify(g, spec: RunSpec) -> int:
    res = verify(g, D_hat=spec.D_hat, options=spec.options)
    witness = None
    if res.witness is not None:
        witness = {"non_tree_edge": res.witness[0], "tree_edge": res.witness[1]}
    doc = {"verdict": "YES" if res.verdict else "NO", "witness": witness,
           "stats": _stats_doc(res.stats, g, spec)}
    text = json.dumps(doc, sort_keys=True) + "\n"
    if spec.output:
        _emit(spec.output, text)
    if spec.json or not spec.output:
        sys.stdout.write(text if spec.json else f"verdict: {doc['verdict']}\n")
    if spec.oracle:
        expect = oracle_verify(g)
        if expect != res.verdict:
            print(f"oracle mismatch: oracle says {'YES' if expect else 'NO'}", file=sys.stderr)
            return EXIT_MISMATCH
    return EXIT_OK


def _run_sensitivity(g, spec: RunSpec) -> int:
    if spec.oracle and not oracle_verify(g):
        print("input tree is not an MST", file=sys.stderr)
        return EXIT_INPUT
    res = analyze_sensitivity(g, D_hat=spec.D_hat, options=spec.options)
    _report(spec, res.tsv(g), {"stats": _stats_doc(res.stats, g, spec), "note_peak": res.note_peak})
    if spec.oracle:
        expect = oracle_report(g).sens
        bad = [e for e in range(g.m) if expect[e] != res.sens[e]]
        if bad:
            print(f"oracle mismatch on {len(bad)} edges, first {bad[0]}", file=sys.stderr)
            return EXIT_MISMATCH
    return EXIT_OK


def _run_lca(g, spec: RunSpec) -> int:
    res = all_edges_lca(g, D_hat=spec.D_hat, options=spec.options)
    _report(spec, res.tsv(g), {"stats": _stats_doc(res.stats, g, spec)})
    if spec.oracle:
        expect = oracle_report(g).lca
        bad = [e for e, x in res.lca.items() if expect[e] != x]
        if bad:
            print(f"oracle mismatch on {len(bad)} edges, first {bad[0]}", file=sys.stderr)
            return EXIT_MISMATCH
    return EXIT_OK


CORE_PHASES = ("contraction", "path_collection", "unwind")


def bench_rows(spec: RunSpec) -> list:
    """One row of phase round counts per target diameter in ``spec.d_grid``."""
    runner = {"verify": verify, "sensitivity": analyze_sensitivity, "lca": all_edges_lca}[spec.pipeline]
    if "n" not in spec.params:
        raise UsageError("bench needs --n")
    rows = []
    for D in spec.d_grid:
        params = dict(spec.params, D=D)
        params.setdefault("m", 2 * params["n"])
        try:
            g = generate_instance(spec.kind or "random_graph_with_mst", params, spec.seed)
        except ValueError as exc:
            raise UsageError(f"generator: {exc}") from exc
        res = runner(g, D_hat=spec.D_hat, options=spec.options)
        by_phase = dict(res.stats.rounds_by_phase)
        rows.append({"D": D, "log2_D": round(math.log2(D), 3), "tau": max(res.taus, default=0),
                     "rounds_by_phase": {p: by_phase.get(p, 0) for p in ("dfs",) + CORE_PHASES},
                     "core_rounds": sum(by_phase.get(p, 0) for p in CORE_PHASES),
                     "total_global_words": res.stats.total_global_words})
    return rows


def _run_bench(spec: RunSpec) -> int:
    rows = bench_rows(spec)
    if spec.json:
        text = json.dumps(rows, sort_keys=True) + "\n"
    else:
        head = ["D", "log2_D", "tau", "dfs", *CORE_PHASES, "core_rounds"]
        lines = ["\t".join(head)]
        for r in rows:
            ph = r["rounds_by_phase"]
            lines.append("\t".join(str(x) for x in [r["D"], r["log2_D"], r["tau"], ph["dfs"],
                                                    *(ph[p] for p in CORE_PHASES), r["core_rounds"]]))
        text = "\n".join(lines) + "\n"
    _emit(spec.output, text)
    return EXIT_OK


def run(spec: RunSpec) -> int:
    """Execute one command; returns the process exit code."""
    try:
        if spec.command == "bench":
            return _run_bench(spec)
        g = _load(spec)
        if spec.command == "generate":
            _emit(spec.output, g.to_text())
            return EXIT_OK
        if spec.dump_hierarchy:
            _dump_hierarchy(g, spec)
        if spec.dump_lca:
            _dump_lca(g, spec)
        return {"verify": _run_verify, "sensitivity": _run_sensitivity, "lca": _run_lca}[spec.command](g, spec)
    except (GraphFormatError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotAnMSTError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    except (AccountingFault, HierarchyFailure) as exc:
        print(f"accounting fault: {exc}", file=sys.stderr)
        return EXIT_ACCOUNTING


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpcmst", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--input", help="edge-list file ('-' for stdin)")
        p.add_argument("--kind", choices=KINDS, help="generate the instance instead of reading it")
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--D", type=int, help="target tree diameter")
        p.add_argument("--k", type=int, help="perturbed edges (perturbed_mst)")
        p.add_argument("--cycles", type=int, help="1 or 2 (lower_bound)")
        p.add_argument("--W", type=int, help="largest edge weight")
        p.add_argument("--output", "-o")
        p.add_argument("--json", action="store_true")
        if name == "generate":
            continue
        p.add_argument("--delta", type=float, default=0.5)
        p.add_argument("--kappa", type=float, default=4.0)
        p.add_argument("--c-g", dest="c_g", type=float, default=8.0)
        p.add_argument("--sort-round-cost", type=int, default=1)
        p.add_argument("--D-hat", dest="D_hat", type=int, help="override the diameter estimate")
        if name == "bench":
            p.add_argument("--D-grid", dest="d_grid", default="8,64,512")
            p.add_argument("--pipeline", choices=("verify", "sensitivity", "lca"), default="sensitivity")
            continue
        p.add_argument("--oracle", action="store_true", help="compare against the sequential oracle")
        p.add_argument("--dump-hierarchy", metavar="PATH")
        p.add_argument("--dump-lca", metavar="PATH")
    return parser


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    params = {k: getattr(args, k) for k in ("n", "m", "D", "k", "cycles", "W")
              if getattr(args, k, None) is not None}
    spec = RunSpec(command=args.command, seed=args.seed, input=args.input, kind=args.kind,
                   params=params, output=args.output, json=args.json)
    for name in ("delta", "kappa", "c_g", "sort_round_cost", "D_hat", "oracle",
                 "dump_hierarchy", "dump_lca", "pipeline"):
        if hasattr(args, name):
            setattr(spec, name, getattr(args, name))
    if getattr(args, "d_grid", None):
        try:
            spec.d_grid = tuple(int(x) for x in args.d_grid.split(","))
        except ValueError as exc:
            raise UsageError(f"bad --D-grid: {args.d_grid}") from exc
    return spec


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        spec = spec_from_args(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
