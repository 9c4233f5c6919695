"""Strategy dispatch and a scikit-learn style estimator wrapper."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .accel import McParams, SubchainCache, TruncationParams, hetesim_dp, hetesim_hybrid, hetesim_mc, hetesim_truncated
from .baselines import SimRankParams, pathsim, pcrw, simrank
from .engine import RelevanceResult, _resolve, rank_row, run_strategy
from .exceptions import PathError, UnknownNode
from .graph import HinGraph, canonical_csr

__all__ = ["STRATEGIES", "MEASURES", "compute_relevance", "HeteSim"]

STRATEGIES = ("exact", "dp", "truncated", "hybrid", "mc")
MEASURES = ("hetesim", "pcrw", "pathsim", "simrank")


def compute_relevance(
    graph: HinGraph,
    path,
    *,
    measure: str = "hetesim",
    strategy: str = "exact",
    normalized: bool = True,
    truncation: TruncationParams | None = None,
    mc: McParams | None = None,
    simrank_params: SimRankParams | None = None,
    n_jobs: int | None = None,
    cache: SubchainCache | None = None,
) -> RelevanceResult:
    """Compute a relevance matrix with any supported measure and strategy.

    ``strategy`` only applies to ``measure="hetesim"``.  SimRank takes a
    path of the form ``R.R~`` (scores between sources of ``R``) or
    ``R~.R`` (between its targets).
    """
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; expected one of {', '.join(MEASURES)}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {', '.join(STRATEGIES)}")
    path = _resolve(graph, path)

    if measure == "pcrw":
        pm = pcrw(graph, path)
        return RelevanceResult(
            pm.matrix, path, False, "pcrw", {}, graph.node_ids(path.source_type), graph.node_ids(path.target_type)
        )
    if measure == "pathsim":
        return pathsim(graph, path)
    if measure == "simrank":
        return _simrank_result(graph, path, simrank_params or SimRankParams())

    if strategy == "exact":
        return run_strategy(graph, path, normalized=normalized, strategy="exact", params={})
    if strategy == "dp":
        return hetesim_dp(graph, path, normalized=normalized, cache=cache)
    if strategy == "truncated":
        return hetesim_truncated(graph, path, truncation, normalized=normalized)
    if strategy == "hybrid":
        return hetesim_hybrid(graph, path, truncation, normalized=normalized, cache=cache)
    return hetesim_mc(graph, path, mc, normalized=normalized, n_jobs=n_jobs)


def _simrank_result(graph, path, params: SimRankParams) -> RelevanceResult:
    s = path.steps
    if len(s) != 2 or s[0].is_self or s[0].relation != s[1].relation or s[0].inverse == s[1].inverse:
        raise PathError(f"SimRank needs a path of the form R.R~ or R~.R, got {path}")
    sa, sb = simrank(graph, s[0].relation, params)
    scores = sb if s[0].inverse else sa
    ids = graph.node_ids(path.source_type)
    p = {"C": params.C, "iterations": params.iterations, "form": params.form}
    return RelevanceResult(canonical_csr(sp.csr_matrix(scores)), path, True, "simrank", p, ids, ids)


class HeteSim(BaseEstimator):
    """Relevance search along a fixed meta-path.

    ``fit`` computes the full relevance matrix of a graph; the query
    methods then read rows of it by external node id.

    Parameters
    ----------
    path : str
        Meta-path, e.g. ``"A-P-C"`` or ``"AP.PC"``.
    strategy : {"exact", "dp", "truncated", "hybrid", "mc"}
    normalized : bool
        Cosine-normalised scores in ``[0, 1]``; raw meeting probabilities
        otherwise.
    W, beta, gamma : truncation settings (``truncated`` / ``hybrid``).
    K : int
        Walkers per source for ``mc``.
    seed : int
        Seed for the sampling strategies.
    n_jobs : int or None
        Worker threads for ``mc``.

    Attributes
    ----------
    result_ : RelevanceResult
    graph_hash_ : str
        Content hash of the fitted graph.
    """

    def __init__(
        self,
        path="",
        strategy="exact",
        normalized=True,
        W=200,
        beta=0.5,
        gamma=0.005,
        K=500,
        seed=0,
        n_jobs=None,
    ):
        self.path = path
        self.strategy = strategy
        self.normalized = normalized
        self.W = W
        self.beta = beta
        self.gamma = gamma
        self.K = K
        self.seed = seed
        self.n_jobs = n_jobs

    def _validate(self, graph):
        if not isinstance(graph, HinGraph):
            raise TypeError(f"expected a HinGraph, got {type(graph).__name__}")
        if not self.path:
            raise ValueError("path must be set")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        trunc = TruncationParams(self.W, self.beta, self.gamma, self.seed)
        mc = McParams(self.K, self.seed)
        return trunc, mc

    def fit(self, X, y=None):
        """Compute the relevance matrix of graph ``X`` (``y`` is ignored)."""
        trunc, mc = self._validate(X)
        self.result_ = compute_relevance(
            X,
            self.path,
            strategy=self.strategy,
            normalized=self.normalized,
            truncation=trunc,
            mc=mc,
            n_jobs=self.n_jobs,
            cache=SubchainCache(),
        )
        self.graph_hash_ = X.content_hash()
        self._rows = {nid: i for i, nid in enumerate(self.result_.row_ids)}
        self._cols = {nid: i for i, nid in enumerate(self.result_.col_ids)}
        return self

    def _row_index(self, source):
        try:
            return self._rows[source]
        except KeyError:
            raise UnknownNode(f"{source!r} is not a {self.result_.path.source_type} node") from None

    def transform(self, X=None):
        """Dense score rows for the source ids in ``X`` (all sources if ``None``)."""
        check_is_fitted(self, "result_")
        m = self.result_.scores
        if X is None:
            return m.toarray()
        idx = [self._row_index(s) for s in X]
        return m[idx].toarray()

    def score_pairs(self, pairs) -> np.ndarray:
        check_is_fitted(self, "result_")
        out = np.empty(len(pairs))
        for n, (a, b) in enumerate(pairs):
            if b not in self._cols:
                raise UnknownNode(f"{b!r} is not a {self.result_.path.target_type} node")
            out[n] = self.result_.scores[self._row_index(a), self._cols[b]]
        return out

    def kneighbors(self, X, k=10) -> list:
        """Top-``k`` ``(id, score)`` lists, one per source id in ``X``."""
        check_is_fitted(self, "result_")
        m = self.result_.scores
        return [rank_row(m.getrow(self._row_index(s)), self.result_.col_ids, k) for s in X]
