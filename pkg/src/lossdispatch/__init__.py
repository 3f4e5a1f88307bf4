"""Economic dispatch with marginal losses and locational marginal prices."""

from .dispatch import (
    DispatchProblem,
    DispatchSolution,
    LimitSource,
    assemble,
    lmp_check,
    relax_oversatisfaction,
    solve_dispatch,
    verify_reference_invariance,
)
from .injections import LDF, HalfLine, InjectionModel
from .line_functions import ApproxTier, LineFunctionSet, Side
from .network import Bus, Generator, Line, Network, PiecewiseLinearCost, QuadraticCost
from .nlp import SolverOptions, solve_nlp

__all__ = [
    "ApproxTier",
    "Bus",
    "DispatchProblem",
    "DispatchSolution",
    "Generator",
    "HalfLine",
    "InjectionModel",
    "LDF",
    "LimitSource",
    "Line",
    "LineFunctionSet",
    "Network",
    "PiecewiseLinearCost",
    "QuadraticCost",
    "Side",
    "SolverOptions",
    "assemble",
    "lmp_check",
    "relax_oversatisfaction",
    "solve_dispatch",
    "solve_nlp",
    "verify_reference_invariance",
]
