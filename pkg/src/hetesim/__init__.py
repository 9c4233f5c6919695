"""HeteSim: path-constrained relevance search in heterogeneous information networks."""

from .accel import (
    McParams,
    SubchainCache,
    TruncationParams,
    chain_order,
    dynamic_k,
    hetesim_dp,
    hetesim_hybrid,
    hetesim_mc,
    hetesim_truncated,
    mc_estimate_pm,
    truncate,
)
from .baselines import SimRankParams, pathsim, pcrw, simrank
from .engine import (
    RelevanceResult,
    hetesim,
    hetesim_pair,
    hetesim_raw,
    hetesim_recursive_oracle,
    hetesim_row,
    reachable_matrix,
)
from .estimator import HeteSim, compute_relevance
from .exceptions import *  # noqa: F401,F403
from .graph import (
    HinGraph,
    ProbMatrix,
    RelationDef,
    Schema,
    Step,
    adjacency,
    build_graph,
    edge_object_split,
    transition_col,
    transition_row,
)
from .metapath import MetaPath, concatenate, decompose, is_symmetric, parse_path, repeat, reverse
from .metrics import auc, avg_rank_difference, matrix_recall, nmi, recall_at_k

__version__ = "0.1.0"
