"""MatchPyramid text matching and re-ranking toolkit.

The heavy lifting lives in the compiled ``_matchpyramid`` extension; this
package re-exports it and adds a thin command-line shim.
"""

from ._matchpyramid import (
    ConfigError,
    Index,
    MatchPyramidError,
    Model,
    NumericError,
    ParseError,
    PyramidConfig,
    ShapeError,
    average_precision,
    dynamic_max_pool,
    evaluate,
    grad_check,
    hinge_loss,
    ndcg_at_k,
    pool_boundaries,
    porter_stem,
    precision_at_k,
    run_cli,
    similarity,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Index",
    "MatchPyramidError",
    "Model",
    "NumericError",
    "ParseError",
    "PyramidConfig",
    "ShapeError",
    "average_precision",
    "dynamic_max_pool",
    "evaluate",
    "grad_check",
    "hinge_loss",
    "ndcg_at_k",
    "pool_boundaries",
    "porter_stem",
    "precision_at_k",
    "run_cli",
    "similarity",
    "tokenize",
]
