"""Numerical laboratory for the weighted harmonic map heat flow between
model Riemannian manifolds."""

from .geometry import (
    CurvatureFrameData,
    EmbeddingDescriptor,
    HypothesisReport,
    ManifoldModel,
    WeightFunction,
    check_hypotheses,
    curvature_tensor,
    embedding_data,
    ricci_extremes,
    sectional_range,
    weighted_ricci_min,
)
from .grids import Equivariant1D, PeriodicGrid
from .pullback import (
    DifferentialSample,
    PullbackReport,
    analyze_differential,
    analyze_equivariant,
)

__all__ = [
    "CurvatureFrameData",
    "DifferentialSample",
    "EmbeddingDescriptor",
    "Equivariant1D",
    "HypothesisReport",
    "ManifoldModel",
    "PeriodicGrid",
    "PullbackReport",
    "WeightFunction",
    "analyze_differential",
    "analyze_equivariant",
    "check_hypotheses",
    "curvature_tensor",
    "embedding_data",
    "ricci_extremes",
    "sectional_range",
    "weighted_ricci_min",
]

__version__ = "0.1.0"
