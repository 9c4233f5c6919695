"""Quick-computation strategies: DP ordering, truncation, hybrid, Monte Carlo."""

from .chain import DEFAULT_CACHE, ChainPlan, SubchainCache, chain_order, hetesim_dp, multiply_chain
from .montecarlo import McParams, hetesim_mc, mc_estimate_pm
from .truncation import (
    TruncationParams,
    dynamic_k,
    hetesim_hybrid,
    hetesim_truncated,
    truncate,
    truncation_threshold,
)

__all__ = [
    "ChainPlan",
    "DEFAULT_CACHE",
    "McParams",
    "SubchainCache",
    "TruncationParams",
    "chain_order",
    "dynamic_k",
    "hetesim_dp",
    "hetesim_hybrid",
    "hetesim_mc",
    "hetesim_truncated",
    "mc_estimate_pm",
    "multiply_chain",
    "truncate",
    "truncation_threshold",
]
