"""Mine integer linear program constraints from observed optimal solutions."""

from .core import EqualitySystem, Sample
from .latent import LatentSchema, expand_sample, linking_constraints, mine_with_latents, observed_pairs
from .miner import (
    EqualityMiner,
    InnerPolytope,
    OuterPolytope,
    build_outer,
    compute_slacks,
    infer_inner,
    infer_outer,
    inner_insert,
    mine_equalities,
    prune_redundant_cuts,
    verify_implied,
)
from .solver import ILPProblem, ILPSolution, NodeBudgetExceeded, presolve, solve_ilp, solve_lp

__version__ = "0.1.0"

__all__ = [
    "EqualitySystem",
    "Sample",
    "LatentSchema",
    "expand_sample",
    "linking_constraints",
    "mine_with_latents",
    "observed_pairs",
    "EqualityMiner",
    "InnerPolytope",
    "OuterPolytope",
    "build_outer",
    "compute_slacks",
    "infer_inner",
    "infer_outer",
    "inner_insert",
    "mine_equalities",
    "prune_redundant_cuts",
    "verify_implied",
    "ILPProblem",
    "ILPSolution",
    "NodeBudgetExceeded",
    "presolve",
    "solve_ilp",
    "solve_lp",
]
