"""Text formats: schema/node/edge TSV, COO matrix export, ranked lists, labels.

All readers report malformed lines as :class:`FormatError` with the file
name and 1-based line number.  Blank lines and lines starting with ``#``
are skipped everywhere.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .exceptions import FormatError, HeteSimError
from .graph import HinGraph, RelationDef, Schema, build_graph

__all__ = [
    "read_schema",
    "read_nodes",
    "read_edges",
    "load_graph",
    "write_schema",
    "write_graph",
    "write_coo",
    "read_coo",
    "write_ranked",
    "read_ranked",
    "read_labels",
]

VALUE_FORMAT = "%.12g"


def _lines(path):
    """Yield ``(lineno, fields)`` for every data line of a TSV file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def _parse_bool(text, path, lineno) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "weighted"):
        return True
    if low in ("0", "false", "no", "unweighted"):
        return False
    raise FormatError(f"expected a boolean, got {text!r}", path, lineno)


def read_schema(path) -> Schema:
    """``TYPE<TAB>name`` and ``REL<TAB>id<TAB>src<TAB>dst[<TAB>weighted]`` lines."""
    types, rels = [], []
    for lineno, f in _lines(path):
        kind = f[0]
        if kind == "TYPE" and len(f) == 2:
            types.append(f[1])
        elif kind == "REL" and len(f) in (4, 5):
            weighted = _parse_bool(f[4], path, lineno) if len(f) == 5 else False
            rels.append(RelationDef(f[1], f[2], f[3], weighted))
        else:
            raise FormatError(f"bad schema line: {' '.join(f)!r}", path, lineno)
    try:
        return Schema(types, rels)
    except HeteSimError as exc:
        raise FormatError(str(exc), path) from exc


def read_nodes(path) -> list:
    out = []
    for lineno, f in _lines(path):
        if len(f) != 2 or not f[0]:
            raise FormatError("node lines need exactly: id<TAB>type", path, lineno)
        out.append((f[0], f[1], lineno))
    return out


def read_edges(path) -> list:
    out = []
    for lineno, f in _lines(path):
        if len(f) not in (3, 4):
            raise FormatError("edge lines need: src<TAB>dst<TAB>relation[<TAB>weight]", path, lineno)
        weight = 1.0
        if len(f) == 4:
            try:
                weight = float(f[3])
            except ValueError:
                raise FormatError(f"weight {f[3]!r} is not a number", path, lineno) from None
        out.append((f[0], f[1], f[2], weight, lineno))
    return out


def load_graph(schema_path, nodes_path, edges_path) -> HinGraph:
    """Read the three TSV files and build a graph.

    Validation errors are re-raised as :class:`FormatError` naming the
    file and line of the offending record.
    """
    schema = read_schema(schema_path)
    where = [None, None]

    def tracked(records, path):
        # build_graph validates records as it consumes them, so the last
        # yielded line is the one that failed
        for rec in records:
            where[:] = [path, rec[-1]]
            yield rec[:-1]

    try:
        return build_graph(
            schema, tracked(read_nodes(nodes_path), nodes_path), tracked(read_edges(edges_path), edges_path)
        )
    except FormatError:
        raise
    except HeteSimError as exc:
        raise FormatError(str(exc), *where) from exc


def write_schema(schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in schema.type_names:
            fh.write(f"TYPE\t{t}\n")
        for r in schema.relations:
            extra = "\ttrue" if r.weighted else ""
            fh.write(f"REL\t{r.id}\t{r.source_type}\t{r.target_type}{extra}\n")


def write_graph(graph: HinGraph, directory, stem: str = "graph") -> tuple:
    """Write ``<stem>.schema.tsv``, ``<stem>.nodes.tsv`` and ``<stem>.edges.tsv``.

    Weights are written with full precision so re-reading reproduces the
    adjacency matrices exactly.  Returns the three paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = tuple(directory / f"{stem}.{part}.tsv" for part in ("schema", "nodes", "edges"))
    write_schema(graph.schema, paths[0])
    with open(paths[1], "w", encoding="utf-8") as fh:
        for t in graph.schema.type_names:
            for nid in graph.node_ids(t):
                fh.write(f"{nid}\t{t}\n")
    with open(paths[2], "w", encoding="utf-8") as fh:
        for rel in graph.schema.relations:
            src = graph.node_ids(rel.source_type)
            dst = graph.node_ids(rel.target_type)
            w = graph.weights(rel.id).tocoo()
            for r, c, v in zip(w.row, w.col, w.data):
                tail = "" if v == 1.0 else f"\t{float(v)!r}"
                fh.write(f"{src[r]}\t{dst[c]}\t{rel.id}{tail}\n")
    return paths


def write_coo(result, target, graph_hash: str = "") -> int:
    """Write a relevance matrix as ``row_id<TAB>col_id<TAB>value`` lines.

    ``target`` is a file name or an open text stream.  Zeros are omitted.
    The three ``#`` header lines record the path, the strategy with its
    parameters, and the graph content hash.  Returns the number of data
    lines.
    """
    m = sp.coo_matrix(result.scores)
    order = np.lexsort((m.col, m.row))
    params = " ".join(f"{k}={v}" for k, v in sorted(result.params.items()))
    kind = "normalized" if result.normalized else "raw"
    lines = [
        f"# path\t{result.path}\t{result.path.type_string()}\n",
        f"# strategy\t{result.strategy}\t{kind}\t{params}\n",
        f"# graph-hash\t{graph_hash}\n",
    ]
    lines += [
        f"{result.row_ids[m.row[i]]}\t{result.col_ids[m.col[i]]}\t{VALUE_FORMAT % m.data[i]}\n" for i in order
    ]
    if hasattr(target, "write"):
        target.writelines(lines)
    else:
        with open(target, "w", encoding="utf-8") as fh:
            fh.writelines(lines)
    return len(order)


def read_coo(path) -> dict:
    """Parse a COO export into ``{"header": {...}, "entries": {(row, col): value}}``."""
    header, entries = {}, {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if line.startswith("#"):
                parts = line[1:].strip().split("\t")
                header[parts[0]] = parts[1:]
                continue
            if not line.strip():
                continue
            f = line.split("\t")
            if len(f) != 3:
                raise FormatError("COO lines need: row<TAB>col<TAB>value", path, lineno)
            try:
                entries[(f[0], f[1])] = float(f[2])
            except ValueError:
                raise FormatError(f"value {f[2]!r} is not a number", path, lineno) from None
    return {"header": header, "entries": entries}


def write_ranked(items, path=None, stream=None) -> None:
    lines = "".join(f"{nid}\t{VALUE_FORMAT % score}\n" for nid, score in items)
    if path is None:
        stream.write(lines)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(lines)


def read_ranked(path) -> list:
    """Read an ``id<TAB>score`` list, keeping file order."""
    out, seen = [], set()
    for lineno, f in _lines(path):
        if len(f) != 2:
            raise FormatError("ranked lines need: id<TAB>score", path, lineno)
        if f[0] in seen:
            raise FormatError(f"id {f[0]!r} listed twice", path, lineno)
        try:
            score = float(f[1])
        except ValueError:
            raise FormatError(f"score {f[1]!r} is not a number", path, lineno) from None
        if out and score > out[-1][1]:
            raise FormatError("scores must be non-increasing", path, lineno)
        seen.add(f[0])
        out.append((f[0], score))
    return out


def read_labels(path) -> dict:
    out = {}
    for lineno, f in _lines(path):
        if len(f) != 2:
            raise FormatError("label lines need: id<TAB>label", path, lineno)
        out[f[0]] = f[1]
    return out

