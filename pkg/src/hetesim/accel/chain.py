"""Matrix-chain ordering and sub-chain reuse (the lossless DP strategy)."""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from ..engine import RelevanceResult, run_strategy
from ..exceptions import DimensionMismatch
from ..graph import HinGraph, ProbMatrix, canonical_csr, transition_row

__all__ = ["ChainPlan", "SubchainCache", "chain_order", "multiply_chain", "hetesim_dp", "DEFAULT_CACHE"]


@dataclass(frozen=True)
class ChainPlan:
    """Optimal parenthesisation of a matrix chain.

    ``tree`` is a leaf index ``i`` or a pair ``(left, right)`` of subtrees;
    ``cost`` counts scalar multiplications under the dense cost model.
    """

    tree: object
    cost: int
    dims: tuple

    def spans(self) -> list:
        """``(i, j)`` index spans of every internal product, bottom-up."""
        out = []

        def walk(node):
            if isinstance(node, int):
                return node, node
            i, _ = walk(node[0])
            _, j = walk(node[1])
            out.append((i, j))
            return i, j

        walk(self.tree)
        return out


def _check_dims(dims) -> tuple:
    dims = tuple((int(r), int(c)) for r, c in dims)
    if not dims:
        raise DimensionMismatch("empty chain")
    for k, ((_, c), (r, _)) in enumerate(zip(dims, dims[1:])):
        if c != r:
            raise DimensionMismatch(f"matrix {k} has {c} columns but matrix {k + 1} has {r} rows")
    return dims


def chain_order(dims: Sequence) -> ChainPlan:
    """Cheapest multiplication order for matrices of the given shapes.

    Classic interval DP: ``cost(i, j) = min_s cost(i, s) + cost(s+1, j) +
    rows_i * cols_s * cols_j``.  Ties go to the leftmost split.
    """
    dims = _check_dims(dims)
    n = len(dims)
    p = [dims[0][0]] + [c for _, c in dims]
    cost = [[0] * n for _ in range(n)]
    split = [[0] * n for _ in range(n)]
    for span in range(1, n):
        for i in range(n - span):
            j = i + span
            best, best_s = None, i
            for s in range(i, j):
                c = cost[i][s] + cost[s + 1][j] + p[i] * p[s + 1] * p[j + 1]
                if best is None or c < best:
                    best, best_s = c, s
            cost[i][j] = best
            split[i][j] = best_s

    def tree(i, j):
        if i == j:
            return i
        s = split[i][j]
        return (tree(i, s), tree(s + 1, j))

    return ChainPlan(tree(0, n - 1), cost[0][n - 1], dims)


class SubchainCache:
    """Bounded LRU store of sub-chain products, keyed by relation sequence."""

    def __init__(self, max_entries: int = 64):
        if max_entries < 1:
            raise ValueError("max_entries must be >= 1")
        self.max_entries = max_entries
        self._store = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        with self._lock:
            value = self._store.get(key)
            if value is None:
                self.misses += 1
                return None
            self._store.move_to_end(key)
            self.hits += 1
            return value

    def put(self, key, value) -> None:
        with self._lock:
            self._store[key] = value
            self._store.move_to_end(key)
            while len(self._store) > self.max_entries:
                self._store.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
            self.hits = self.misses = 0

    def __len__(self) -> int:
        return len(self._store)

    def __contains__(self, key) -> bool:
        return key in self._store


DEFAULT_CACHE = SubchainCache()


def _as_csr(m) -> sp.csr_matrix:
    return m.matrix if isinstance(m, ProbMatrix) else sp.csr_matrix(m)


def _leftmost(node) -> int:
    while not isinstance(node, int):
        node = node[0]
    return node


def _rightmost(node) -> int:
    while not isinstance(node, int):
        node = node[1]
    return node


def multiply_chain(matrices, plan: ChainPlan, cache: SubchainCache | None = None, keys=None, peak=None):
    """Evaluate a chain in ``plan`` order, reusing cached sub-chains.

    ``keys[i]`` labels matrix ``i``; a sub-chain ``i..j`` is cached under
    ``tuple(keys[i:j+1])``.  Without keys nothing is cached.  ``peak``, if
    given, collects the nnz of every product actually computed.
    """
    mats = [_as_csr(m) for m in matrices]
    if tuple(m.shape for m in mats) != plan.dims:
        raise DimensionMismatch("matrices do not match the plan's dimensions")
    if keys is not None and len(keys) != len(mats):
        raise ValueError("need one key per matrix")
    use_cache = cache is not None and keys is not None

    def ev(node):
        if isinstance(node, int):
            return mats[node]
        key = None
        if use_cache:
            key = tuple(keys[_leftmost(node) : _rightmost(node) + 1])
            hit = cache.get(key)
            if hit is not None:
                return hit
        out = canonical_csr(ev(node[0]) @ ev(node[1]))
        if peak is not None:
            peak.append(out.nnz)
        if key is not None:
            cache.put(key, out)
        return out

    return ev(plan.tree)


def _dp_side(cache):
    def side(graph: HinGraph, steps, start_type, peak):
        if not steps:
            return sp.identity(graph.n_nodes(start_type), dtype=np.float64, format="csr")
        mats = [transition_row(graph, s).matrix for s in steps]
        plan = chain_order([m.shape for m in mats])
        # graph hash keeps equal relation ids of different graphs apart
        keys = [(graph.content_hash(), s.key) for s in steps]
        if len(mats) == 1:
            peak.append(mats[0].nnz)
            return mats[0]
        return multiply_chain(mats, plan, cache, keys, peak)

    return side


def hetesim_dp(graph: HinGraph, path, normalized: bool = True, cache: SubchainCache | None = None) -> RelevanceResult:
    """HeteSim with cost-ordered chain multiplication and sub-chain reuse.

    Lossless: scores equal :func:`~hetesim.engine.hetesim` up to float
    reassociation.
    """
    cache = DEFAULT_CACHE if cache is None else cache
    return run_strategy(graph, path, normalized=normalized, strategy="dp", params={}, side=_dp_side(cache))
