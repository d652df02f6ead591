"""Numerical laboratory for random unilateral weighted shifts.

The operator ``T e_n = X_n e_{n+1}`` has i.i.d. nonnegative bounded weights.
Submodules sample weight laws, build finite truncations, and check radii,
spectra, Hardy-space membership, domination relations, dynamics, Aluthge
iterates and moment statistics numerically.
"""

__version__ = "0.1.0"

from .errors import (
    GrammarError,
    HypothesisError,
    NonConvergenceError,
    RwslabError,
)
from .weightlaw import (
    Degenerate,
    FiniteDiscrete,
    LawStats,
    TwoPoint,
    UniformInterval,
    WeightLaw,
    WeightSample,
    law_stats,
    parse_law,
    sample_weights,
)

__all__ = [
    "Degenerate",
    "FiniteDiscrete",
    "GrammarError",
    "HypothesisError",
    "LawStats",
    "NonConvergenceError",
    "RwslabError",
    "TwoPoint",
    "UniformInterval",
    "WeightLaw",
    "WeightSample",
    "law_stats",
    "parse_law",
    "sample_weights",
]
