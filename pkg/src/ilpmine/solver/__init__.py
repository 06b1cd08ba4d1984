"""Exact 0/1 (bounded integer) ILP solving by LP-based branch and bound."""

from .bnb import DEFAULT_NODE_LIMIT, CompiledSystem, solve_ilp
from .lp import LPResult, solve_lp
from .presolve import Reduction, presolve
from .problem import ILPProblem, ILPSolution, NodeBudgetExceeded

__all__ = [
    "ILPProblem",
    "ILPSolution",
    "NodeBudgetExceeded",
    "CompiledSystem",
    "solve_ilp",
    "solve_lp",
    "LPResult",
    "presolve",
    "Reduction",
    "DEFAULT_NODE_LIMIT",
]
