"""Command-line interface.

Exit status: 0 success, 1 usage or configuration error, 2 data error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import io
from .accel import McParams, TruncationParams
from .baselines import SimRankParams
from .bench import run_bench, write_bench_csv
from .engine import _resolve, hetesim_row, rank_row
from .estimator import MEASURES, STRATEGIES, compute_relevance
from .exceptions import DimensionMismatch, FormatError, MetricError, PathError, SchemaError
from .metrics import NMI_NORMALIZATION, auc, avg_rank_difference, nmi, recall_at_k
from .synthetic import bench_graph, random_hin, toy_graph

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


# -- argument groups --------------------------------------------------------


def _graph_args(p):
    p.add_argument("--schema", required=True)
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)


def _job_args(p):
    _graph_args(p)
    p.add_argument("--path", required=True, help="e.g. A-P-C or AP.PC (relation ids, ~ for inverse)")
    p.add_argument("--measure", choices=MEASURES, default="hetesim")
    p.add_argument("--strategy", choices=STRATEGIES, default="exact")
    p.add_argument("--raw", action="store_true", help="unnormalised scores")
    _param_args(p)


def _param_args(p):
    p.add_argument("--W", type=int, default=200)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.005)
    p.add_argument("--K", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--simrank-c", type=float, default=0.8)
    p.add_argument("--iters", type=int, default=5)
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: all CPUs)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hetesim", description="Meta-path relevance in heterogeneous networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check input files and print counts")
    _graph_args(p)

    p = sub.add_parser("compute", help="write a full relevance matrix (COO) and a timing sidecar")
    _job_args(p)
    p.add_argument("--out", default="-", help="matrix file ('-' for stdout)")

    p = sub.add_parser("query", help="top-k targets of one source")
    _job_args(p)
    p.add_argument("--source", required=True)
    p.add_argument("--topk", type=int, default=10)
    p.add_argument("--store", help="directory written by 'materialize'")
    p.add_argument("--out", default="-")

    p = sub.add_parser("materialize", help="compute and store a matrix for later queries")
    _job_args(p)
    p.add_argument("--store", required=True)

    p = sub.add_parser("bench", help="time strategies and measure recall against exact")
    _graph_args(p)
    p.add_argument("--path", required=True, nargs="+")
    p.add_argument("--strategy", nargs="+", choices=STRATEGIES, default=list(STRATEGIES))
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--topk", type=int, default=100, help="recall cut-off")
    _param_args(p)
    p.add_argument("--out", default="-")

    p = sub.add_parser("metrics", help="evaluate ranked lists or clusterings")
    p.add_argument("metric", choices=("auc", "nmi", "recall", "rankdiff"))
    p.add_argument("--ranked", help="id<TAB>score list (auc, rankdiff measure side)")
    p.add_argument("--labels", help="id<TAB>label file (auc)")
    p.add_argument("--positive", help="relevant label (auc)")
    p.add_argument("--clustering", help="id<TAB>label file (nmi)")
    p.add_argument("--truth", help="id<TAB>label (nmi) or ranked list (rankdiff)")
    p.add_argument("--exact", help="ranked list (recall)")
    p.add_argument("--approx", help="ranked list (recall)")
    p.add_argument("--topk", type=int, default=100)

    p = sub.add_parser("generate", help="write a seeded synthetic graph")
    p.add_argument("kind", choices=("toy", "random", "bench"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--stem", default="graph")
    return parser


# -- helpers ----------------------------------------------------------------


def _load(args):
    return io.load_graph(args.schema, args.nodes, args.edges)


def _threads(args):
    return args.threads if args.threads else (os.cpu_count() or 1)


def _compute(args, graph):
    if args.threads is not None and args.threads < 1:
        raise ValueError("--threads must be >= 1")
    # validate every parameter before any work starts
    truncation = TruncationParams(args.W, args.beta, args.gamma, args.seed)
    mc = McParams(args.K, args.seed)
    simrank = SimRankParams(args.simrank_c, args.iters)
    return compute_relevance(
        graph,
        args.path,
        measure=args.measure,
        strategy=args.strategy,
        normalized=not args.raw,
        truncation=truncation,
        mc=mc,
        simrank_params=simrank,
        n_jobs=_threads(args),
    )


def _open_out(target):
    if target == "-":
        return contextlib.nullcontext(sys.stdout)
    return open(target, "w", encoding="utf-8")


def _slug(args, path) -> str:
    kind = "raw" if args.raw else "norm"
    base = re.sub(r"[^A-Za-z0-9_.-]+", "_", str(path))
    return f"{base}__{args.measure}__{args.strategy}__{kind}"


def _entry_key(args, path) -> dict:
    params = {"W": args.W, "beta": args.beta, "gamma": args.gamma, "K": args.K, "seed": args.seed}
    if args.measure == "simrank":
        params = {"C": args.simrank_c, "iterations": args.iters}
    return {
        "path": str(path),
        "measure": args.measure,
        "strategy": args.strategy,
        "normalized": not args.raw,
        "params": params,
    }


def _read_manifest(store: Path) -> dict:
    f = store / MANIFEST
    if not f.exists():
        return {"entries": []}
    with open(f, encoding="utf-8") as fh:
        return json.load(fh)


# -- commands ---------------------------------------------------------------


def cmd_validate(args) -> int:
    graph = _load(args)
    schema = graph.schema
    parts = [f"{graph.n_nodes(t)} {t}" for t in schema.type_names]
    parts += [f"{graph.n_edges(r.id)} {r.id} edges" for r in schema.relations]
    print(", ".join(parts))
    return EXIT_OK


def cmd_compute(args) -> int:
    graph = _load(args)
    result = _compute(args, graph)
    if args.out == "-":
        io.write_coo(result, sys.stdout, graph.content_hash())
        return EXIT_OK
    n = io.write_coo(result, args.out, graph.content_hash())
    timing = {
        "path": str(result.path),
        "measure": args.measure,
        "strategy": result.strategy,
        "params": result.params,
        "normalized": result.normalized,
        "mul_seconds": result.mul_seconds,
        "rel_seconds": result.rel_seconds,
        "total_seconds": result.total_seconds,
        "peak_nnz": [int(x) for x in result.peak_nnz],
        "entries": n,
    }
    with open(f"{args.out}.timing.json", "w", encoding="utf-8") as fh:
        json.dump(timing, fh, indent=2)
    return EXIT_OK


def cmd_materialize(args) -> int:
    graph = _load(args)
    result = _compute(args, graph)
    store = Path(args.store)
    store.mkdir(parents=True, exist_ok=True)
    fname = _slug(args, result.path) + ".coo.tsv"
    io.write_coo(result, store / fname, graph.content_hash())
    manifest = _read_manifest(store)
    entry = dict(_entry_key(args, result.path), file=fname, graph_hash=graph.content_hash())
    key = _entry_key(args, result.path)
    manifest["entries"] = [e for e in manifest["entries"] if {k: e.get(k) for k in key} != key]
    manifest["entries"].append(entry)
    with open(store / MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return EXIT_OK


def _from_store(args, graph, path):
    """Ranked row from a materialised matrix, or ``None`` if unavailable or stale."""
    store = Path(args.store)
    key = _entry_key(args, path)
    for e in _read_manifest(store)["entries"]:
        if {k: e.get(k) for k in key} != key:
            continue
        if e["graph_hash"] != graph.content_hash():
            print(f"warning: stored matrix {e['file']} is stale (graph changed); recomputing", file=sys.stderr)
            return None
        data = io.read_coo(store / e["file"])["entries"]
        row = [(col, v) for (r, col), v in data.items() if r == args.source and v > 0]
        row.sort(key=lambda x: (-round(x[1], 12), x[0]))
        return row
    return None


def cmd_query(args) -> int:
    graph = _load(args)
    path = _resolve(graph, args.path)
    if args.topk < 1:
        raise ValueError("--topk must be >= 1")
    graph.index_of(args.source, path.source_type)
    TruncationParams(args.W, args.beta, args.gamma, args.seed)
    McParams(args.K, args.seed)

    ranked = _from_store(args, graph, path) if args.store else None
    if ranked is None:
        if args.measure == "hetesim" and args.strategy in ("exact", "dp"):
            ranked = hetesim_row(graph, path, args.source, normalized=not args.raw)
        else:
            result = _compute(args, graph)
            ranked = rank_row(result.scores.getrow(result.row_ids.index(args.source)), result.col_ids)
    with _open_out(args.out) as fh:
        io.write_ranked(ranked[: args.topk], stream=fh)
    return EXIT_OK


def cmd_bench(args) -> int:
    graph = _load(args)
    truncation = TruncationParams(args.W, args.beta, args.gamma, args.seed)
    mc = McParams(args.K, args.seed)
    paths = [_resolve(graph, p) for p in args.path]
    rows = run_bench(graph, paths, args.strategy, args.reps, truncation, mc, _threads(args), args.topk)
    with _open_out(args.out) as fh:
        write_bench_csv(rows, fh)
    return EXIT_OK


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"metrics {args.metric} needs --{' --'.join(missing)}")


def cmd_metrics(args) -> int:
    if args.metric == "auc":
        _need(args, "ranked", "labels", "positive")
        value = auc(io.read_ranked(args.ranked), io.read_labels(args.labels), args.positive, args.topk)
    elif args.metric == "nmi":
        _need(args, "clustering", "truth")
        value = nmi(io.read_labels(args.clustering), io.read_labels(args.truth))
    elif args.metric == "recall":
        _need(args, "exact", "approx")
        value = recall_at_k(io.read_ranked(args.exact), io.read_ranked(args.approx), args.topk)
    else:
        _need(args, "ranked", "truth")
        value = avg_rank_difference(io.read_ranked(args.ranked), io.read_ranked(args.truth), args.topk)
    name = f"nmi_{NMI_NORMALIZATION}" if args.metric == "nmi" else args.metric
    print(f"{name}\t{value:.12g}")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.kind == "toy":
        graph = toy_graph()
    elif args.kind == "random":
        graph = random_hin(np.random.default_rng(args.seed))
    else:
        graph = bench_graph(args.seed)
    for p in io.write_graph(graph, args.out, args.stem):
        print(p)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "compute": cmd_compute,
    "query": cmd_query,
    "materialize": cmd_materialize,
    "bench": cmd_bench,
    "metrics": cmd_metrics,
    "generate": cmd_generate,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, SchemaError, MetricError, DimensionMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (PathError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
