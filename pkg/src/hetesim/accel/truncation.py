"""Truncation and hybrid strategies.

Both keep probability matrices sparse by dropping small entries.  The cut
point is a single threshold per matrix: the value of the ``k * M``-th
largest entry of an ``M x L`` matrix, where ``k`` grows sub-linearly with
``L`` once ``L`` exceeds the user's ``W``.  The threshold is estimated
from a uniform sample of the nonzeros.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..engine import RelevanceResult, chain_product, run_strategy
from ..graph import ProbMatrix, canonical_csr, transition_row
from .chain import DEFAULT_CACHE, SubchainCache, _dp_side

__all__ = [
    "TruncationParams",
    "dynamic_k",
    "truncation_threshold",
    "truncate",
    "hetesim_truncated",
    "hetesim_hybrid",
]

# Below this many sampled entries the threshold is selected exactly.
MIN_SAMPLE = 10


@dataclass(frozen=True)
class TruncationParams:
    W: int = 200
    beta: float = 0.5
    gamma: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if int(self.W) != self.W or self.W < 1:
            raise ValueError(f"W must be an integer >= 1, got {self.W!r}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta!r}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma!r}")

    def as_dict(self) -> dict:
        return {"W": self.W, "beta": self.beta, "gamma": self.gamma, "seed": self.seed}


def dynamic_k(L: int, W: int, beta: float) -> int:
    """Per-row budget: ``L`` if ``L <= W`` else ``floor((L - W) ** beta) + W``."""
    if L <= W:
        return L
    x = float(L - W) ** beta
    r = round(x)
    # guard against pow() landing just under an exact integer root
    base = r if abs(x - r) <= 1e-9 * max(1.0, x) else math.floor(x)
    return int(base) + W


def truncation_threshold(values: np.ndarray, keep: int, gamma: float, rng) -> float:
    """Estimate the ``keep``-th largest of ``values`` from a ``gamma`` sample."""
    nnz = len(values)
    n_sample = math.ceil(gamma * nnz)
    if n_sample < MIN_SAMPLE:
        return float(np.partition(values, nnz - keep)[nnz - keep])
    sample = rng.choice(values, size=n_sample, replace=False)
    rank = min(n_sample, max(1, math.ceil(keep / nnz * n_sample)))
    return float(np.partition(sample, n_sample - rank)[n_sample - rank])


def truncate(matrix, params: TruncationParams, rng=None):
    """Zero every entry below the estimated top-``k*M`` value.

    Returns the same kind of object it was given (``ProbMatrix`` or CSR).
    Never creates nonzeros and never increases an entry.
    """
    if rng is None:
        rng = np.random.default_rng(params.seed)
    wrapped = isinstance(matrix, ProbMatrix)
    m = canonical_csr(matrix.matrix if wrapped else matrix).copy()
    M, L = m.shape
    k = dynamic_k(L, params.W, params.beta)
    keep = k * M
    if k < L and 0 < keep < m.nnz:
        eps = truncation_threshold(m.data, keep, params.gamma, rng)
        m.data[m.data < eps] = 0.0
        m.eliminate_zeros()
    if wrapped:
        return ProbMatrix(m, matrix.source, matrix.target, matrix.path)
    return m


def _truncating_side(params, rng):
    def side(graph, steps, start_type, peak):
        if not steps:
            return truncate(chain_product(graph, steps, start_type), params, rng)
        pm = truncate(transition_row(graph, steps[0]).matrix, params, rng)
        peak.append(pm.nnz)
        for step in steps[1:]:
            pm = truncate(pm @ transition_row(graph, step).matrix, params, rng)
            peak.append(pm.nnz)
        return pm

    return side


def hetesim_truncated(graph, path, params: TruncationParams | None = None, normalized: bool = True) -> RelevanceResult:
    """HeteSim with truncation after every walk step on both halves."""
    params = TruncationParams() if params is None else params
    rng = np.random.default_rng(params.seed)
    return run_strategy(
        graph,
        path,
        normalized=normalized,
        strategy="truncated",
        params=params.as_dict(),
        side=_truncating_side(params, rng),
    )


def hetesim_hybrid(
    graph,
    path,
    params: TruncationParams | None = None,
    normalized: bool = True,
    cache: SubchainCache | None = None,
) -> RelevanceResult:
    """DP-ordered multiplication, then one truncation of each final half."""
    params = TruncationParams() if params is None else params
    rng = np.random.default_rng(params.seed)
    cache = DEFAULT_CACHE if cache is None else cache
    return run_strategy(
        graph,
        path,
        normalized=normalized,
        strategy="hybrid",
        params=params.as_dict(),
        side=_dp_side(cache),
        post=lambda left, right: (truncate(left, params, rng), truncate(right, params, rng)),
    )
