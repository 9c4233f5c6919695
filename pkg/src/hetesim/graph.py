"""Typed heterogeneous graph storage.

A :class:`HinGraph` keeps one sparse adjacency matrix per schema relation,
with rows indexed by the relation's source type and columns by its target
type.  Everything downstream (paths, relevance, baselines) works on the
row/column-normalised transition matrices derived here.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import (
    DuplicateNode,
    NonPositiveWeight,
    SchemaError,
    TypeMismatch,
    UnknownNode,
    UnknownRelation,
    UnknownType,
)

__all__ = [
    "RelationDef",
    "Schema",
    "Step",
    "ProbMatrix",
    "HinGraph",
    "build_graph",
    "adjacency",
    "transition_row",
    "transition_col",
    "edge_object_split",
    "canonical_csr",
]

# Characters reserved by the path grammar and the TSV formats.
_NAME_RE = re.compile(r"^[^\s\-.~()@\[\]]+$")


def canonical_csr(m) -> sp.csr_matrix:
    """Return ``m`` as float64 CSR with sorted indices and no stored zeros."""
    m = sp.csr_matrix(m, dtype=np.float64)
    m.sum_duplicates()
    m.eliminate_zeros()
    m.sort_indices()
    return m


@dataclass(frozen=True)
class RelationDef:
    id: str
    source_type: str
    target_type: str
    weighted: bool = False


@dataclass(frozen=True)
class Schema:
    """Object types plus directed relations between them."""

    type_names: tuple
    relations: tuple

    def __init__(self, type_names: Iterable[str], relations: Iterable[RelationDef]):
        type_names = tuple(type_names)
        relations = tuple(relations)
        object.__setattr__(self, "type_names", type_names)
        object.__setattr__(self, "relations", relations)

        seen = set()
        for name in type_names:
            if not _NAME_RE.match(name):
                raise SchemaError(f"invalid type name {name!r}")
            if name in seen:
                raise SchemaError(f"duplicate type name {name!r}")
            seen.add(name)
        rel_ids = set()
        for rel in relations:
            if not _NAME_RE.match(rel.id):
                raise SchemaError(f"invalid relation id {rel.id!r}")
            if rel.id in rel_ids:
                raise SchemaError(f"duplicate relation id {rel.id!r}")
            rel_ids.add(rel.id)
            for t in (rel.source_type, rel.target_type):
                if t not in seen:
                    raise UnknownType(f"relation {rel.id!r} references unknown type {t!r}")

    def relation(self, rel_id: str) -> RelationDef:
        for rel in self.relations:
            if rel.id == rel_id:
                return rel
        raise UnknownRelation(f"unknown relation {rel_id!r}")

    def has_type(self, name: str) -> bool:
        return name in self.type_names

    def check_type(self, name: str) -> None:
        if name not in self.type_names:
            raise UnknownType(f"unknown type {name!r}")

    def relations_between(self, a: str, b: str) -> list:
        """Steps that move from type ``a`` to type ``b`` (forward or inverse)."""
        found = []
        for rel in self.relations:
            if rel.source_type == a and rel.target_type == b:
                found.append(Step(rel.id))
            if rel.target_type == a and rel.source_type == b:
                found.append(Step(rel.id, inverse=True))
        return found


@dataclass(frozen=True)
class Step:
    """One hop of a meta-path.

    ``relation`` names a schema relation, walked backwards when ``inverse``.
    ``self_type`` marks the self-relation ``I`` of that type instead.
    ``half`` is ``"out"`` or ``"in"`` for the two halves ``R_O``/``R_I`` of a
    relation split through its edge objects; these only appear in decomposed
    paths.
    """

    relation: str | None = None
    inverse: bool = False
    half: str | None = None
    self_type: str | None = None

    def __post_init__(self):
        if (self.relation is None) == (self.self_type is None):
            raise ValueError("a step names exactly one of relation / self_type")
        if self.half not in (None, "out", "in"):
            raise ValueError(f"bad half marker {self.half!r}")

    @property
    def is_self(self) -> bool:
        return self.self_type is not None

    @property
    def key(self) -> str:
        if self.is_self:
            base = f"I({self.self_type})"
        else:
            base = self.relation + ("~" if self.inverse else "")
        return base if self.half is None else f"{base}@{self.half}"

    def reversed(self) -> "Step":
        if self.is_self:
            if self.half is None:
                return self
            return Step(self_type=self.self_type, half="in" if self.half == "out" else "out")
        return Step(self.relation, not self.inverse, self.half)

    def halves(self) -> tuple:
        """Split a full step through its edge objects: ``(left, right)``."""
        if self.half is not None:
            raise ValueError("step is already a half step")
        if self.is_self:
            return Step(self_type=self.self_type, half="out"), Step(self_type=self.self_type, half="in")
        if not self.inverse:
            return Step(self.relation, False, "out"), Step(self.relation, False, "in")
        # R~ walks target -> source: enter the edge objects through R_I
        # backwards, leave through R_O backwards.
        return Step(self.relation, True, "in"), Step(self.relation, True, "out")

    def endpoints(self, schema: Schema) -> tuple:
        """``(source space, target space)`` of the step on ``schema``."""
        if self.is_self:
            schema.check_type(self.self_type)
            node, edge = self.self_type, f"E[I({self.self_type})]"
            if self.half is None:
                return node, node
            pair = (node, edge) if self.half == "out" else (edge, node)
            return pair
        rel = schema.relation(self.relation)
        edge = f"E[{rel.id}]"
        if self.half is None:
            pair = (rel.source_type, rel.target_type)
        elif self.half == "out":
            pair = (rel.source_type, edge)
        else:
            pair = (edge, rel.target_type)
        return pair[::-1] if self.inverse else pair

    def __str__(self) -> str:
        return self.key


def _as_step(ref) -> Step:
    if isinstance(ref, Step):
        return ref
    if not isinstance(ref, str):
        raise TypeError(f"expected relation id or Step, got {type(ref).__name__}")
    if ref.startswith("I(") and ref.endswith(")"):
        return Step(self_type=ref[2:-1])
    if ref.endswith("~"):
        return Step(ref[:-1], inverse=True)
    return Step(ref)


@dataclass(frozen=True, eq=False)
class ProbMatrix:
    """Sparse probability matrix tagged with where it walks from and to."""

    matrix: sp.csr_matrix
    source: str
    target: str
    path: str = ""

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


class HinGraph:
    """Immutable heterogeneous information network.

    Build instances with :func:`build_graph`.  Node indices are assigned per
    type in order of first appearance and are contiguous ``0..n-1``.
    """

    def __init__(self, schema: Schema, node_ids: dict, weights: dict):
        self.schema = schema
        self._node_ids = {t: tuple(node_ids.get(t, ())) for t in schema.type_names}
        self._index = {}
        for t, ids in self._node_ids.items():
            for i, nid in enumerate(ids):
                self._index[nid] = (t, i)
        self._weights = weights
        self._cache = {}

    # -- nodes -------------------------------------------------------------

    def n_nodes(self, type_name: str) -> int:
        self.schema.check_type(type_name)
        return len(self._node_ids[type_name])

    def node_ids(self, type_name: str) -> tuple:
        self.schema.check_type(type_name)
        return self._node_ids[type_name]

    def index_of(self, node_id: str, type_name: str | None = None) -> int:
        try:
            t, i = self._index[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None
        if type_name is not None and t != type_name:
            raise TypeMismatch(f"node {node_id!r} has type {t!r}, expected {type_name!r}")
        return i

    def type_of(self, node_id: str) -> str:
        try:
            return self._index[node_id][0]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def space_size(self, space: str) -> int:
        """Size of a node type or of an edge-object space ``E[rel]``."""
        if space.startswith("E[") and space.endswith("]"):
            inner = space[2:-1]
            if inner.startswith("I(") and inner.endswith(")"):
                return self.n_nodes(inner[2:-1])
            return self.weights(inner).nnz
        return self.n_nodes(space)

    def space_ids(self, space: str) -> list:
        if space.startswith("E[") and space.endswith("]"):
            inner = space[2:-1]
            if inner.startswith("I(") and inner.endswith(")"):
                t = inner[2:-1]
                return [f"{n}|{n}" for n in self.node_ids(t)]
            rel = self.schema.relation(inner)
            w = self.weights(inner).tocoo()
            src = self.node_ids(rel.source_type)
            dst = self.node_ids(rel.target_type)
            return [f"{src[r]}|{dst[c]}" for r, c in zip(w.row, w.col)]
        return list(self.node_ids(space))

    # -- edges -------------------------------------------------------------

    def weights(self, rel_id: str) -> sp.csr_matrix:
        self.schema.relation(rel_id)
        return self._weights[rel_id]

    def n_edges(self, rel_id: str) -> int:
        return self.weights(rel_id).nnz

    def cached(self, key, factory):
        """Memoise a derived, never-mutated matrix on this graph."""
        try:
            return self._cache[key]
        except KeyError:
            value = factory()
            self._cache[key] = value
            return value

    def content_hash(self) -> str:
        def build():
            h = hashlib.sha256()
            for t in self.schema.type_names:
                h.update(f"T\t{t}\n".encode())
                for nid in self._node_ids[t]:
                    h.update(f"N\t{nid}\n".encode())
            for rel in self.schema.relations:
                h.update(f"R\t{rel.id}\t{rel.source_type}\t{rel.target_type}\n".encode())
                w = self._weights[rel.id]
                h.update(w.indptr.astype(np.int64).tobytes())
                h.update(w.indices.astype(np.int64).tobytes())
                h.update(w.data.astype(np.float64).tobytes())
            return h.hexdigest()

        return self.cached("content_hash", build)

    def __repr__(self) -> str:
        types = ", ".join(f"{t}={len(ids)}" for t, ids in self._node_ids.items())
        rels = ", ".join(f"{r}={w.nnz}" for r, w in self._weights.items())
        return f"HinGraph(types[{types}], edges[{rels}])"


def build_graph(schema: Schema, nodes: Iterable, edges: Iterable) -> HinGraph:
    """Build an immutable graph from node and edge records.

    Parameters
    ----------
    schema : Schema
    nodes : iterable of (external_id, type_name)
    edges : iterable of (src_id, dst_id, relation_id[, weight])
        Repeated edges under one relation accumulate their weights.

    Returns
    -------
    HinGraph
    """
    node_ids = {t: [] for t in schema.type_names}
    index = {}
    for rec in nodes:
        nid, t = rec[0], rec[1]
        if t not in node_ids:
            raise UnknownType(f"node {nid!r} has unknown type {t!r}")
        if nid in index:
            if index[nid][0] != t:
                raise DuplicateNode(f"node {nid!r} declared with types {index[nid][0]!r} and {t!r}")
            continue
        index[nid] = (t, len(node_ids[t]))
        node_ids[t].append(nid)

    rel_by_id = {r.id: r for r in schema.relations}
    buckets = {r.id: ([], [], []) for r in schema.relations}
    for rec in edges:
        src, dst, rel_id = rec[0], rec[1], rec[2]
        weight = float(rec[3]) if len(rec) > 3 and rec[3] is not None else 1.0
        rel = rel_by_id.get(rel_id)
        if rel is None:
            raise UnknownRelation(f"edge {src!r}->{dst!r} uses unknown relation {rel_id!r}")
        if not np.isfinite(weight) or weight <= 0:
            raise NonPositiveWeight(f"edge {src!r}->{dst!r} ({rel_id}) has weight {weight!r}")
        for nid in (src, dst):
            if nid not in index:
                raise UnknownNode(f"edge {src!r}->{dst!r} ({rel_id}) references unknown node {nid!r}")
        (st, si), (dt, di) = index[src], index[dst]
        if st != rel.source_type or dt != rel.target_type:
            raise TypeMismatch(
                f"edge {src!r}({st})->{dst!r}({dt}) does not fit relation "
                f"{rel_id}: {rel.source_type}->{rel.target_type}"
            )
        rows, cols, vals = buckets[rel_id]
        rows.append(si)
        cols.append(di)
        vals.append(weight)

    weights = {}
    for rel in schema.relations:
        rows, cols, vals = (np.asarray(x) for x in buckets[rel.id])
        shape = (len(node_ids[rel.source_type]), len(node_ids[rel.target_type]))
        if len(vals):
            # fixed summation order so permuted inputs give bit-identical sums
            order = np.lexsort((vals, cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
        w = sp.coo_matrix(
            (vals.astype(np.float64), (rows.astype(np.int64), cols.astype(np.int64))), shape=shape
        )
        weights[rel.id] = canonical_csr(w)
    return HinGraph(schema, node_ids, weights)


# -- matrices -------------------------------------------------------------


def _identity(n: int) -> sp.csr_matrix:
    return sp.identity(n, dtype=np.float64, format="csr")


def _step_adjacency(graph: HinGraph, step: Step) -> sp.csr_matrix:
    if step.is_self:
        return _identity(graph.n_nodes(step.self_type))
    w = graph.weights(step.relation)
    if step.half is None:
        m = w
    else:
        # Edge objects are indexed in CSR order of W, i.e. by (source, target).
        # Both halves carry sqrt(w) so that R_O @ R_I reproduces W.
        n_src, n_dst = w.shape
        nnz = w.nnz
        root = np.sqrt(w.data)
        if step.half == "out":
            m = sp.csr_matrix((root, np.arange(nnz), w.indptr.copy()), shape=(n_src, nnz))
        else:
            m = sp.csr_matrix((root, w.indices.copy(), np.arange(nnz + 1)), shape=(nnz, n_dst))
    if step.inverse:
        m = m.T
    return canonical_csr(m)


def _scale_rows(m: sp.csr_matrix, sums: np.ndarray) -> sp.csr_matrix:
    inv = np.zeros_like(sums)
    nz = sums > 0
    inv[nz] = 1.0 / sums[nz]
    return canonical_csr(sp.diags(inv) @ m)


def adjacency(graph: HinGraph, relation) -> ProbMatrix:
    """Weight matrix ``W`` of a relation; ``"R~"`` gives its transpose."""
    step = _as_step(relation)
    src, dst = step.endpoints(graph.schema)
    m = graph.cached(("W", step), lambda: _step_adjacency(graph, step))
    return ProbMatrix(m, src, dst, step.key)


def transition_row(graph: HinGraph, relation) -> ProbMatrix:
    """Row-normalised ``W`` (U).  All-zero rows stay all-zero."""
    step = _as_step(relation)
    src, dst = step.endpoints(graph.schema)

    def build():
        w = _step_adjacency(graph, step)
        return _scale_rows(w, np.asarray(w.sum(axis=1)).ravel())

    return ProbMatrix(graph.cached(("U", step), build), src, dst, step.key)


def transition_col(graph: HinGraph, relation) -> ProbMatrix:
    """Column-normalised ``W`` (V).  All-zero columns stay all-zero."""
    step = _as_step(relation)
    src, dst = step.endpoints(graph.schema)

    def build():
        wt = _step_adjacency(graph, step).T.tocsr()
        return canonical_csr(_scale_rows(wt, np.asarray(wt.sum(axis=1)).ravel()).T)

    return ProbMatrix(graph.cached(("V", step), build), src, dst, step.key)


def edge_object_split(graph: HinGraph, relation: str) -> tuple:
    """Weight matrices ``(W_O, W_I)`` of ``R`` split through its edge objects.

    ``W_O`` is ``|R.S| x |E|`` and ``W_I`` is ``|E| x |R.T|``; each edge
    instance contributes ``sqrt(w)`` on both sides, so ``W_O @ W_I == W``.
    """
    step = _as_step(relation)
    left, right = step.halves()
    return adjacency(graph, left), adjacency(graph, right)


def steps_signature(steps: Sequence[Step]) -> str:
    return ".".join(s.key for s in steps)
