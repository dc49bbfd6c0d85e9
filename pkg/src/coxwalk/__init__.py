"""Coxeter tournaments on complete signed graphs.

Fibers of a score sequence, their interchange multigraphs, the diamond and
crystal structure of distance-two networks, and the lazy random walk with
its path coupling, all checked by exact computation at small ``n``.
"""
from .errors import (CapExceededError, CoxwalkError, InfeasibleScoreError, InvalidInputError,
                     LemmaViolation, NotNeutralError)
from .signed import (CompleteSignedGraph, Game, GameKind, RootType, Tournament, build_complete_graph,
                     degree_formula, game_vector, reverse_subset, score, standard_score)

__version__ = "0.1.0"

__all__ = [
    "CapExceededError", "CoxwalkError", "InfeasibleScoreError", "InvalidInputError", "LemmaViolation",
    "NotNeutralError", "CompleteSignedGraph", "Game", "GameKind", "RootType", "Tournament",
    "build_complete_graph", "degree_formula", "game_vector", "reverse_subset", "score", "standard_score",
]
