"""Reference measures: SimRank on a bipartite relation, PCRW and PathSim."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .engine import RelevanceResult, _resolve, reachable_matrix
from .exceptions import AsymmetricPath
from .graph import HinGraph, ProbMatrix, adjacency, canonical_csr, transition_col, transition_row
from .metapath import is_symmetric, reverse

__all__ = ["SimRankParams", "simrank", "pcrw", "pcrw_averaged", "pathsim"]


@dataclass(frozen=True)
class SimRankParams:
    """SimRank settings.

    ``form="classic"`` is the usual fixed-point iteration: diagonal pinned
    at 1 and off-diagonal scores damped by ``C``.  ``form="series"``
    accumulates the hop-by-hop meeting probabilities ``S_1 + ... + S_n``
    of the undamped pairwise walk (each ``S_k`` scaled by ``C**k``), which
    with ``C = 1`` is the sum of HeteSim over ``(RR^-1)^k``.
    """

    C: float = 0.8
    iterations: int = 5
    form: str = "classic"

    def __post_init__(self):
        if not 0.0 < self.C <= 1.0:
            raise ValueError(f"C must lie in (0, 1], got {self.C!r}")
        if int(self.iterations) != self.iterations or self.iterations < 0:
            raise ValueError(f"iterations must be a non-negative integer, got {self.iterations!r}")
        if self.form not in ("classic", "series"):
            raise ValueError(f"form must be 'classic' or 'series', got {self.form!r}")


def simrank(graph: HinGraph, relation: str, params: SimRankParams | None = None) -> tuple:
    """SimRank on the bipartite graph of one relation ``A -> B``.

    Returns dense ``(S_A, S_B)`` similarity matrices.  Two ``A`` objects
    are scored by averaging the scores of their out-neighbour pairs in
    ``B``; two ``B`` objects by their in-neighbour pairs in ``A``.
    Iteration 0 is the identity on both sides.
    """
    params = SimRankParams() if params is None else params
    u = transition_row(graph, relation).matrix  # A x B, row-normalised
    v = transition_col(graph, relation).matrix  # A x B, column-normalised
    n_a, n_b = u.shape
    sa, sb = np.eye(n_a), np.eye(n_b)

    if params.form == "classic":
        for _ in range(params.iterations):
            sa, sb = params.C * (u @ (u @ sb).T).T, params.C * (v.T @ (v.T @ sa).T).T
            np.fill_diagonal(sa, 1.0)
            np.fill_diagonal(sb, 1.0)
        return sa, sb

    hop_a, hop_b = sa, sb
    total_a, total_b = np.zeros((n_a, n_a)), np.zeros((n_b, n_b))
    for _ in range(params.iterations):
        hop_a, hop_b = params.C * (u @ (u @ hop_b).T).T, params.C * (v.T @ (v.T @ hop_a).T).T
        total_a += hop_a
        total_b += hop_b
    return total_a, total_b


def pcrw(graph: HinGraph, path) -> ProbMatrix:
    """Path-constrained random walk: one-sided reach probability along ``path``."""
    return reachable_matrix(graph, path)


def pcrw_averaged(graph: HinGraph, path) -> ProbMatrix:
    """Mean of PCRW along ``path`` and the transpose of PCRW along its reverse.

    An evaluation convenience for using PCRW where a symmetric score is
    expected; it is not a measure of its own.
    """
    path = _resolve(graph, path)
    fwd = reachable_matrix(graph, path).matrix
    back = reachable_matrix(graph, reverse(path)).matrix
    return ProbMatrix(canonical_csr(0.5 * (fwd + back.T)), path.source_type, path.target_type, str(path))


def pathsim(graph: HinGraph, path) -> RelevanceResult:
    """PathSim over a symmetric path.

    ``2 M(a, b) / (M(a, a) + M(b, b))`` with ``M`` the path-instance count
    matrix (product of raw adjacency matrices).  Pairs whose denominators
    vanish score 0.
    """
    path = _resolve(graph, path)
    if not is_symmetric(path):
        raise AsymmetricPath(f"PathSim needs a symmetric path, got {path.type_string()}")
    m = adjacency(graph, path.steps[0]).matrix
    for step in path.steps[1:]:
        m = canonical_csr(m @ adjacency(graph, step).matrix)
    diag = m.diagonal()
    coo = m.tocoo()
    denom = diag[coo.row] + diag[coo.col]
    vals = np.where(denom > 0, 2.0 * coo.data / np.where(denom > 0, denom, 1.0), 0.0)
    scores = canonical_csr(sp.coo_matrix((vals, (coo.row, coo.col)), shape=m.shape))
    ids = graph.node_ids(path.source_type)
    return RelevanceResult(scores, path, True, "pathsim", {}, ids, ids)
