"""Direct estimation of linear non-Gaussian acyclic causal models."""

__version__ = "0.1.0"

from .bootstrap import BootstrapResult, bootstrap, significant_edges
from .core import (
    AdjacencyMatrix,
    LingamFit,
    PriorKnowledge,
    TotalEffects,
    discover_order,
    estimate_b,
    fit,
    r_squared,
    select_exogenous,
    total_effects,
)
from .dataset import Dataset, center, load_csv, standardize
from .kernel import KernelParams, default_params, kgv_mi, t_kernel
from .lasso import LassoConfig, adaptive_lasso, prune_adjacency

__all__ = [
    "AdjacencyMatrix",
    "BootstrapResult",
    "Dataset",
    "KernelParams",
    "LassoConfig",
    "LingamFit",
    "PriorKnowledge",
    "TotalEffects",
    "adaptive_lasso",
    "bootstrap",
    "center",
    "default_params",
    "discover_order",
    "estimate_b",
    "fit",
    "kgv_mi",
    "load_csv",
    "prune_adjacency",
    "r_squared",
    "select_exogenous",
    "significant_edges",
    "standardize",
    "t_kernel",
    "total_effects",
]
