"""Discrete (clustered) and polyhedral (hyperplane) uncertainty sets."""
from .kmeans import DiscreteSet, KMeansScenarios, kmeans, lloyd
from .polyhedron import (
    EmptyPolyhedronError, HyperplaneConfig, HyperplanePolyhedron, Polyhedron, best_offset, build_polyhedron,
    fit_hyperplane, generate_noise, score_hyperplane,
)

__all__ = [
    "DiscreteSet", "KMeansScenarios", "kmeans", "lloyd", "EmptyPolyhedronError", "HyperplaneConfig",
    "HyperplanePolyhedron", "Polyhedron", "best_offset", "build_polyhedron", "fit_hyperplane",
    "generate_noise", "score_hyperplane",
]
