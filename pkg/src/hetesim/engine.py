"""HeteSim relevance: raw and normalised, full matrix or single pair.

A path is split into a left half walked from the source type and a right
half walked backwards from the target type.  Each half yields a reachable
probability matrix (MUL phase); relevance is the inner product of the two
row distributions, optionally cosine-normalised (REL phase).

Odd paths meet inside their middle relation.  Instead of materialising the
edge-object columns, the middle relation is folded into a node-space
operator ``D`` with ``D[u, v] = U_O[u, e] * U_I'[v, e]`` for the edge
``e = (u, v)``, together with the per-node squared masses needed for the
norms.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import SchemaMismatch
from .graph import HinGraph, ProbMatrix, Step, canonical_csr, transition_row
from .metapath import MetaPath, parse_path

__all__ = [
    "RelevanceResult",
    "reachable_matrix",
    "hetesim_raw",
    "hetesim",
    "hetesim_pair",
    "hetesim_row",
    "hetesim_recursive_oracle",
    "split_path",
]

# Above this fill ratio the REL product runs on dense arrays.
DENSE_SWITCH = 0.25


@dataclass
class RelevanceResult:
    """Relevance scores between the path's source and target types.

    ``scores`` is a CSR matrix (rows: source objects, columns: target
    objects, both in graph index order) or a float for single-pair queries.
    """

    scores: object
    path: MetaPath
    normalized: bool
    strategy: str = "exact"
    params: dict = field(default_factory=dict)
    row_ids: tuple = ()
    col_ids: tuple = ()
    mul_seconds: float = 0.0
    rel_seconds: float = 0.0
    peak_nnz: list = field(default_factory=list)

    @property
    def total_seconds(self) -> float:
        return self.mul_seconds + self.rel_seconds

    def toarray(self) -> np.ndarray:
        if sp.issparse(self.scores):
            return self.scores.toarray()
        return np.asarray(self.scores)

    def score(self, a: str, b: str) -> float:
        i = self.row_ids.index(a)
        j = self.col_ids.index(b)
        return float(self.scores[i, j])

    def ranked(self, source: str, k: int | None = None) -> list:
        """Nonzero targets of ``source``: descending score, then ascending id."""
        i = self.row_ids.index(source)
        return rank_row(self.scores.getrow(i), self.col_ids, k)


def rank_row(row: sp.spmatrix, col_ids: Sequence[str], k: int | None = None) -> list:
    row = sp.csr_matrix(row)
    items = [(col_ids[j], float(v)) for j, v in zip(row.indices, row.data) if v > 0]
    items.sort(key=lambda x: (-round(x[1], 12), x[0]))
    return items if k is None else items[:k]


# -- path plumbing --------------------------------------------------------


@dataclass(frozen=True)
class SplitPath:
    """Node-space halves of a path, both oriented away from the middle.

    ``left`` walks from the source type, ``right`` from the target type (the
    reverse of the path's right half).  ``middle`` is the relation the two
    halves meet inside for odd paths, else ``None``.
    """

    left: tuple
    right: tuple
    middle: Step | None
    left_type: str
    right_type: str
    source_type: str
    target_type: str


def split_path(path: MetaPath) -> SplitPath:
    steps, types, l = path.steps, path.types, path.length
    if l % 2 == 0:
        h = l // 2
        left, right_half, middle = steps[:h], steps[h:], None
        lt = rt = types[h]
    else:
        m = (l - 1) // 2
        left, right_half, middle = steps[:m], steps[m + 1 :], steps[m]
        lt, rt = types[m], types[m + 1]
    right = tuple(s.reversed() for s in reversed(right_half))
    return SplitPath(tuple(left), right, middle, lt, rt, types[0], types[-1])


def _resolve(graph: HinGraph, path) -> MetaPath:
    path = parse_path(path, graph.schema) if isinstance(path, str) else path
    if path.schema != graph.schema:
        raise SchemaMismatch(f"path {path} was built for a different schema")
    return path


def _identity(n: int) -> sp.csr_matrix:
    return sp.identity(n, dtype=np.float64, format="csr")


def chain_product(graph: HinGraph, steps: Sequence[Step], start_type: str, peak=None) -> sp.csr_matrix:
    """Left-to-right product of the transition matrices along ``steps``."""
    if not steps:
        return _identity(graph.n_nodes(start_type))
    pm = transition_row(graph, steps[0]).matrix
    if peak is not None:
        peak.append(pm.nnz)
    for step in steps[1:]:
        pm = canonical_csr(pm @ transition_row(graph, step).matrix)
        if peak is not None:
            peak.append(pm.nnz)
    return pm


def middle_operator(graph: HinGraph, step: Step) -> tuple:
    """``(D, left_mass, right_mass)`` for a relation split through its edges.

    ``left_mass[u]`` is the sum of squared transition probabilities from
    ``u`` into the edge objects; ``right_mass`` likewise from the target
    side.  They turn node-space rows into edge-space norms.
    """

    def build():
        lo, ro = step.halves()
        ul = transition_row(graph, lo).matrix
        ur = transition_row(graph, ro.reversed()).matrix
        d = canonical_csr(ul @ ur.T)
        left_mass = np.asarray(ul.multiply(ul).sum(axis=1)).ravel()
        right_mass = np.asarray(ur.multiply(ur).sum(axis=1)).ravel()
        return d, left_mass, right_mass

    return graph.cached(("middle", step), build)


def _density(m) -> float:
    rows, cols = m.shape
    return m.nnz / max(1, rows * cols)


def _times_transpose(a: sp.csr_matrix, b: sp.csr_matrix) -> sp.csr_matrix:
    if _density(a) > DENSE_SWITCH and _density(b) > DENSE_SWITCH:
        return canonical_csr(a.toarray() @ b.toarray().T)
    return canonical_csr(a @ b.T.tocsr())


def _row_sq(m: sp.csr_matrix) -> np.ndarray:
    return np.asarray(m.multiply(m).sum(axis=1)).ravel()


def relevance(left_pm, right_pm, middle, normalized: bool) -> sp.csr_matrix:
    """REL phase: inner products (and cosine) of left rows with right rows."""
    if middle is None:
        raw = _times_transpose(left_pm, right_pm)
        left_sq, right_sq = _row_sq(left_pm), _row_sq(right_pm)
    else:
        d, left_mass, right_mass = middle
        raw = _times_transpose(canonical_csr(left_pm @ d), right_pm)
        left_sq = np.asarray(left_pm.multiply(left_pm) @ left_mass).ravel()
        right_sq = np.asarray(right_pm.multiply(right_pm) @ right_mass).ravel()
    if not normalized:
        return raw
    return _cosine_scale(raw, np.sqrt(left_sq), np.sqrt(right_sq))


def _inverse_or_zero(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    nz = x > 0
    out[nz] = 1.0 / x[nz]
    return out


def _cosine_scale(raw, left_norm, right_norm) -> sp.csr_matrix:
    out = canonical_csr(sp.diags(_inverse_or_zero(left_norm)) @ raw @ sp.diags(_inverse_or_zero(right_norm)))
    np.minimum(out.data, 1.0, out=out.data)
    return out


SideFn = Callable[[HinGraph, tuple, str, list], sp.csr_matrix]


def _exact_side(graph, steps, start_type, peak):
    return chain_product(graph, steps, start_type, peak)


def run_strategy(
    graph: HinGraph,
    path,
    *,
    normalized: bool,
    strategy: str,
    params: dict,
    side: SideFn = _exact_side,
    post: Callable | None = None,
) -> RelevanceResult:
    """Shared MUL/REL driver used by every strategy.

    ``side`` builds one half's probability matrix; ``post`` optionally
    rewrites both halves (e.g. truncation) before the REL phase.
    """
    path = _resolve(graph, path)
    sp_ = split_path(path)
    peak = []

    t0 = time.perf_counter()
    left = side(graph, sp_.left, sp_.source_type, peak)
    right = side(graph, sp_.right, sp_.target_type, peak)
    if post is not None:
        left, right = post(left, right)
        peak.extend([left.nnz, right.nnz])
    middle = middle_operator(graph, sp_.middle) if sp_.middle is not None else None
    t1 = time.perf_counter()
    scores = relevance(left, right, middle, normalized)
    t2 = time.perf_counter()

    return RelevanceResult(
        scores=scores,
        path=path,
        normalized=normalized,
        strategy=strategy,
        params=dict(params),
        row_ids=graph.node_ids(sp_.source_type),
        col_ids=graph.node_ids(sp_.target_type),
        mul_seconds=t1 - t0,
        rel_seconds=t2 - t1,
        peak_nnz=peak,
    )


# -- public operations ----------------------------------------------------


def reachable_matrix(graph: HinGraph, path) -> ProbMatrix:
    """Product of row-transition matrices along ``path``.

    Entry ``(i, j)`` is the probability that a walk from ``i`` following the
    path ends at ``j``.  Rows lose mass at dangling nodes.  Decomposed
    (half-step) paths are accepted and end in edge-object space.
    """
    path = _resolve(graph, path)
    pm = chain_product(graph, path.steps, path.source_type)
    return ProbMatrix(pm, path.source_type, path.target_type, str(path))


def hetesim_raw(graph: HinGraph, path) -> RelevanceResult:
    """Unnormalised HeteSim: the meeting probability of the two walks."""
    return run_strategy(graph, path, normalized=False, strategy="exact", params={})


def hetesim(graph: HinGraph, path) -> RelevanceResult:
    """Normalised HeteSim (cosine of the two reachable distributions).

    Scores lie in ``[0, 1]``; pairs where either side has no reachable mass
    score 0.
    """
    return run_strategy(graph, path, normalized=True, strategy="exact", params={})


def _row_walk(graph: HinGraph, steps, start_type: str, index: int) -> sp.csr_matrix:
    n = graph.n_nodes(start_type)
    vec = sp.csr_matrix(([1.0], ([0], [index])), shape=(1, n))
    for step in steps:
        vec = canonical_csr(vec @ transition_row(graph, step).matrix)
    return vec


def hetesim_pair(graph: HinGraph, path, a: str, b: str, normalized: bool = True) -> float:
    """HeteSim of one pair using only the two walk distributions of ``a`` and ``b``."""
    path = _resolve(graph, path)
    sp_ = split_path(path)
    ia = graph.index_of(a, sp_.source_type)
    ib = graph.index_of(b, sp_.target_type)
    left = _row_walk(graph, sp_.left, sp_.source_type, ia)
    right = _row_walk(graph, sp_.right, sp_.target_type, ib)
    middle = middle_operator(graph, sp_.middle) if sp_.middle is not None else None
    return float(relevance(left, right, middle, normalized)[0, 0])


def hetesim_row(graph: HinGraph, path, source: str, normalized: bool = True) -> list:
    """Ranked ``(target id, score)`` list for one source, without the full matrix.

    Only the source's own walk is computed on the left; the right half is
    the usual reachable matrix of the target type.
    """
    path = _resolve(graph, path)
    sp_ = split_path(path)
    ia = graph.index_of(source, sp_.source_type)
    left = _row_walk(graph, sp_.left, sp_.source_type, ia)
    right = chain_product(graph, sp_.right, sp_.target_type)
    middle = middle_operator(graph, sp_.middle) if sp_.middle is not None else None
    return rank_row(relevance(left, right, middle, normalized), graph.node_ids(sp_.target_type))


def hetesim_recursive_oracle(graph: HinGraph, path, a: str, b: str) -> float:
    """Raw HeteSim by direct recursion over neighbour pairs.

    Independent of the matrix code: walks adjacency lists, averaging the
    relevance of (out-neighbour of ``a``, in-neighbour of ``b``) pairs
    until the two ends meet.  Neighbours are weighted by edge weight; for
    unweighted graphs that is the plain average.  Exponential in path
    length without the memo; intended for small graphs.
    """
    path = _resolve(graph, path)
    steps, types = path.steps, path.types
    ia = graph.index_of(a, types[0])
    ib = graph.index_of(b, types[-1])

    def out_lists(step: Step):
        """adjacency lists {node: [(neighbour, weight), ...]} along ``step``."""
        if step.is_self:
            return {i: [(i, 1.0)] for i in range(graph.n_nodes(step.self_type))}
        coo = graph.weights(step.relation).tocoo()
        lists = {}
        pairs = zip(coo.col, coo.row, coo.data) if step.inverse else zip(coo.row, coo.col, coo.data)
        for u, v, w in pairs:
            lists.setdefault(int(u), []).append((int(v), float(w)))
        return lists

    forward = [out_lists(s) for s in steps]
    backward = [out_lists(s.reversed()) for s in steps]
    memo = {}

    def rel(s: int, t: int, i: int, j: int) -> float:
        # relevance of s (at position i) and t (at position j) along steps[i:j]
        if i == j:
            return 1.0 if s == t else 0.0
        key = (s, t, i, j)
        if key in memo:
            return memo[key]
        outs = forward[i].get(s, [])
        ins = backward[j - 1].get(t, [])
        if not outs or not ins:
            value = 0.0
        elif j - i == 1:
            # atomic relation through its edge objects: the edge s->t is the
            # only common neighbour; each side reaches it with sqrt(w) weight.
            w_st = sum(w for v, w in outs if v == t)
            so = sum(np.sqrt(w) for _, w in outs)
            si = sum(np.sqrt(w) for _, w in ins)
            value = w_st / (so * si) if w_st else 0.0
        else:
            wo = sum(w for _, w in outs)
            wi = sum(w for _, w in ins)
            value = 0.0
            for o, w1 in outs:
                for q, w2 in ins:
                    value += (w1 / wo) * (w2 / wi) * rel(o, q, i + 1, j - 1)
        memo[key] = value
        return value

    return rel(ia, ib, 0, len(steps))
