"""Monte Carlo estimation of reachable probability matrices."""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..engine import RelevanceResult, _resolve, run_strategy
from ..graph import HinGraph, ProbMatrix, transition_row

__all__ = ["McParams", "mc_estimate_pm", "hetesim_mc"]


@dataclass(frozen=True)
class McParams:
    K: int = 500
    seed: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be an integer >= 1, got {self.K!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")

    def as_dict(self) -> dict:
        return {"K": self.K, "seed": self.seed}


class _Sampler:
    """Inverse-CDF sampling of the next node from CSR transition rows."""

    def __init__(self, u: sp.csr_matrix):
        self.indptr = u.indptr
        self.indices = u.indices
        n_rows = u.shape[0]
        row_of = np.repeat(np.arange(n_rows), np.diff(u.indptr))
        csum = np.cumsum(u.data)
        start = np.concatenate(([0.0], csum))[u.indptr[:-1]]
        within = csum - start[row_of]
        # row index + running mass is globally increasing, one searchsorted
        self.keys = row_of + within

    def step(self, pos: np.ndarray, r: np.ndarray) -> np.ndarray:
        """Next positions; ``-1`` marks walkers that have stopped."""
        out = np.full_like(pos, -1)
        alive = np.flatnonzero(pos >= 0)
        p = pos[alive]
        lo, hi = self.indptr[p], self.indptr[p + 1]
        ok = hi > lo
        alive, p, lo, hi = alive[ok], p[ok], lo[ok], hi[ok]
        idx = np.searchsorted(self.keys, p + r[alive], side="right")
        out[alive] = self.indices[np.clip(idx, lo, hi - 1)]
        return out


def _stream(seed: int, tag: int, source: int) -> np.random.Generator:
    # counter-based substream per (seed, walk signature, source)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, tag, source])))


def _walk_counts(samplers, n_start, n_end, sources, K, seed, tag):
    rows, cols, vals = [], [], []
    n_steps = len(samplers)
    for a in sources:
        draws = _stream(seed, tag, int(a)).random((n_steps, K))
        pos = np.full(K, a, dtype=np.int64)
        for s, sampler in enumerate(samplers):
            pos = sampler.step(pos, draws[s])
        ends = pos[pos >= 0]
        if len(ends):
            hit, counts = np.unique(ends, return_counts=True)
            rows.append(np.full(len(hit), a))
            cols.append(hit)
            vals.append(counts / K)
    if not rows:
        return sp.csr_matrix((n_start, n_end))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n_start, n_end)
    )


def _estimate(graph: HinGraph, steps, start_type: str, params: McParams, sources=None, n_jobs=None):
    n_start = graph.n_nodes(start_type)
    if not steps:
        return sp.identity(n_start, dtype=np.float64, format="csr")
    signature = ".".join(s.key for s in steps)
    tag = zlib.crc32(signature.encode())
    samplers = [_Sampler(transition_row(graph, s).matrix) for s in steps]
    _, end_space = steps[-1].endpoints(graph.schema)
    n_end = graph.space_size(end_space)
    if sources is None:
        sources = np.arange(n_start)
    sources = np.asarray(sources, dtype=np.int64)

    if not n_jobs or n_jobs <= 1 or len(sources) < 2:
        return _walk_counts(samplers, n_start, n_end, sources, params.K, params.seed, tag)
    chunks = np.array_split(sources, n_jobs)
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(
            pool.map(lambda c: _walk_counts(samplers, n_start, n_end, c, params.K, params.seed, tag), chunks)
        )
    return sp.csr_matrix(sum(parts[1:], parts[0]))


def mc_estimate_pm(graph: HinGraph, path, params: McParams | None = None, sources=None, n_jobs=None) -> ProbMatrix:
    """Estimate the reachable probability matrix of ``path`` by random walks.

    ``K`` walkers start at each source; a walker at ``u`` moves to a
    neighbour with probability proportional to edge weight and stops for
    good at a node with no way forward.  The estimate for ``(a, b)`` is the
    fraction of ``a``'s walkers that finish at ``b``.

    Parameters
    ----------
    sources : iterable of node ids, optional
        Rows to estimate; other rows are left empty.  Defaults to all.
    n_jobs : int, optional
        Worker threads.  Results do not depend on it: every source draws
        from its own seeded stream.
    """
    params = McParams() if params is None else params
    path = _resolve(graph, path)
    idx = None
    if sources is not None:
        idx = [graph.index_of(s, path.source_type) for s in sources]
    m = _estimate(graph, path.steps, path.source_type, params, idx, n_jobs)
    return ProbMatrix(m.tocsr(), path.source_type, path.target_type, str(path))


def hetesim_mc(graph: HinGraph, path, params: McParams | None = None, normalized: bool = True, n_jobs=None) -> RelevanceResult:
    """HeteSim with both reachable matrices estimated by random walks."""
    params = McParams() if params is None else params

    def side(g, steps, start_type, peak):
        m = _estimate(g, steps, start_type, params, None, n_jobs)
        peak.append(m.nnz)
        return m

    return run_strategy(graph, path, normalized=normalized, strategy="mc", params=params.as_dict(), side=side)
