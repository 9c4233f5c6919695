"""Timing and accuracy harness for the computation strategies.

Every (path, strategy) cell is run ``reps`` times.  Recall is measured
against one exact run per path.  The CSV columns are :data:`COLUMNS`; each
cell is followed by a row whose ``rep`` is ``mean``.
"""

from __future__ import annotations

import csv

import numpy as np

from .accel import McParams, SubchainCache, TruncationParams
from .estimator import compute_relevance
from .graph import HinGraph
from .metrics import matrix_recall

__all__ = ["COLUMNS", "run_bench", "write_bench_csv", "mean_rows"]

COLUMNS = ("path", "strategy", "rep", "mul_seconds", "rel_seconds", "total_seconds", "recall_at_100")


def run_bench(
    graph: HinGraph,
    paths,
    strategies,
    reps: int = 5,
    truncation: TruncationParams | None = None,
    mc: McParams | None = None,
    n_jobs: int | None = None,
    k: int = 100,
) -> list:
    """Return the bench rows (dicts keyed by :data:`COLUMNS`).

    The sub-chain cache is fresh for every run so repetitions do not
    measure cache hits.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rows = []
    for path in paths:
        reference = compute_relevance(graph, path, strategy="exact")
        for strategy in strategies:
            cell = []
            for rep in range(reps):
                res = compute_relevance(
                    graph,
                    path,
                    strategy=strategy,
                    truncation=truncation,
                    mc=mc,
                    n_jobs=n_jobs,
                    cache=SubchainCache(),
                )
                cell.append(
                    {
                        "path": str(path),
                        "strategy": strategy,
                        "rep": rep,
                        "mul_seconds": res.mul_seconds,
                        "rel_seconds": res.rel_seconds,
                        "total_seconds": res.total_seconds,
                        "recall_at_100": matrix_recall(reference, res, k),
                    }
                )
            rows.extend(cell)
            rows.append(_mean(cell))
    return rows


def _mean(cell: list) -> dict:
    out = {"path": cell[0]["path"], "strategy": cell[0]["strategy"], "rep": "mean"}
    for col in COLUMNS[3:]:
        out[col] = float(np.mean([r[col] for r in cell]))
    return out


def mean_rows(rows: list) -> dict:
    """``{(path, strategy): mean row}``."""
    return {(r["path"], r["strategy"]): r for r in rows if r["rep"] == "mean"}


def write_bench_csv(rows: list, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({c: (f"{r[c]:.6f}" if isinstance(r[c], float) else r[c]) for c in COLUMNS})
