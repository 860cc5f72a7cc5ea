"""Hybrid multi-objective binary PSO biclustering of expression matrices."""

from biswarm.bicluster import Bicluster, ObjectiveVector, coverage, evaluate, overlap
from biswarm.expr import ExpressionMatrix, compute_stats, load_matrix, load_matrix_path
from biswarm.local_search import LocalSearchConfig, Phases, local_search
from biswarm.mopso import PsoParams, RunReport, run
from biswarm.pareto import ArchiveEntry, ParetoArchive, crowding_distances, dominates

__all__ = [
    "ArchiveEntry",
    "Bicluster",
    "ExpressionMatrix",
    "LocalSearchConfig",
    "ObjectiveVector",
    "ParetoArchive",
    "Phases",
    "PsoParams",
    "RunReport",
    "compute_stats",
    "coverage",
    "crowding_distances",
    "dominates",
    "evaluate",
    "load_matrix",
    "load_matrix_path",
    "local_search",
    "overlap",
    "run",
]
