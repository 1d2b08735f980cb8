"""
mlrank - maximum likelihood critical points of low-rank probability matrices

This package computes every complex critical point of the likelihood
function on rank-constrained (and symmetric rank-constrained) probability
matrices by parameter homotopies from a preprocessed solution archive,
classifies the real positive ones, and compares them with multi-start EM.
"""

__version__ = "0.1.0"
__author__ = "mlrank developers"

from .exceptions import MLRankError
from .models import CriticalPoint, DataMatrix, ProbabilityMatrix, RankModel, SolutionArchive
from .solver import CriticalPointSolver, SolveReport
from .store import ArchiveStore, ArchiveStoreFactory, JsonArchiveStore, SQLiteArchiveStore
from .monodromy import MonodromyOptions, load_archive, monodromy_solve, save_archive
from .tracker import TrackerOptions
from .bounds import bezout_bound, multihomogeneous_bound
from .em import multistart_em

__all__ = [
    "CriticalPointSolver",
    "SolveReport",
    "MLRankError",
    "CriticalPoint",
    "DataMatrix",
    "ProbabilityMatrix",
    "RankModel",
    "SolutionArchive",
    "ArchiveStore",
    "ArchiveStoreFactory",
    "JsonArchiveStore",
    "SQLiteArchiveStore",
    "MonodromyOptions",
    "TrackerOptions",
    "load_archive",
    "monodromy_solve",
    "save_archive",
    "bezout_bound",
    "multihomogeneous_bound",
    "multistart_em",
]
