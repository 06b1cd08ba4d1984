"""ILP problem and solution types."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..core import EqualitySystem, rational_array

__all__ = ["ILPProblem", "ILPSolution", "NodeBudgetExceeded"]


class NodeBudgetExceeded(RuntimeError):
    """Branch-and-bound ran out of nodes before proving optimality."""

    def __init__(self, budget, incumbent=None, what=None):
        what = what or f"node budget of {budget}"
        super().__init__(f"{what} exhausted before optimality was proved")
        self.budget = budget
        self.incumbent = incumbent


def _rational_matrix(A, d):
    if A is None:
        return np.zeros((0, d))
    A = np.asarray(A) if not isinstance(A, np.ndarray) else A
    if A.size == 0:
        return np.zeros((0, d))
    if A.dtype == object or A.dtype.kind not in "iuf":
        rows = [rational_array(r) for r in A]
        if all(r.dtype == np.float64 for r in rows):
            return np.vstack(rows)
        out = np.empty((len(rows), d), dtype=object)
        for i, r in enumerate(rows):
            out[i] = r
        return out
    return A.astype(np.float64) if A.dtype.kind == "f" else A.astype(np.int64)


@dataclass(eq=False)
class ILPProblem:
    """``max objective . y`` subject to ``A_ub y <= b_ub``, ``A_eq y == b_eq``
    and integer bounds ``lower <= y <= upper``; every variable is integer.

    Coefficients are exact rationals: ints, floats (taken at their exact
    binary value) or :class:`Fraction` objects.
    """

    objective: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.objective = rational_array(self.objective)
        d = self.objective.shape[0]
        self.A_ub = _rational_matrix(self.A_ub, d)
        self.b_ub = rational_array(self.b_ub) if self.b_ub is not None and len(self.b_ub) else np.zeros(0)
        self.A_eq = _rational_matrix(self.A_eq, d)
        self.b_eq = rational_array(self.b_eq) if self.b_eq is not None and len(self.b_eq) else np.zeros(0)
        self.lower = np.zeros(d, dtype=np.int64) if self.lower is None else np.broadcast_to(np.asarray(self.lower, dtype=np.int64), (d,)).copy()
        self.upper = np.ones(d, dtype=np.int64) if self.upper is None else np.broadcast_to(np.asarray(self.upper, dtype=np.int64), (d,)).copy()
        for name, A, b in (("inequality", self.A_ub, self.b_ub), ("equality", self.A_eq, self.b_eq)):
            if A.shape[1] != d or A.shape[0] != b.shape[0]:
                raise ValueError(f"{name} block has shape {A.shape} with {b.shape[0]} right-hand sides; expected {d} columns")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @classmethod
    def from_system(cls, objective, inequalities=(), equalities: EqualitySystem | None = None,
                    lower=0, upper=1) -> "ILPProblem":
        """Build from a list of ``(row, rhs)`` inequalities and an equality system."""
        d = len(objective)
        ineq = list(inequalities)
        A_ub = [r for r, _ in ineq] if ineq else None
        b_ub = [b for _, b in ineq] if ineq else None
        A_eq = b_eq = None
        if equalities is not None and equalities.n_rows:
            A_eq, b_eq = equalities.w_eq, equalities.c
        return cls(objective, A_ub, b_ub, A_eq, b_eq,
                   np.full(d, lower, dtype=np.int64), np.full(d, upper, dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.objective.shape[0]

    @property
    def inequalities(self):
        return list(zip(self.A_ub, self.b_ub))

    def with_objective(self, objective) -> "ILPProblem":
        return ILPProblem(objective, self.A_ub, self.b_ub, self.A_eq, self.b_eq, self.lower, self.upper)


@dataclass(eq=False)
class ILPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    assignment: np.ndarray | None = None
    objective_value: Fraction | None = None
    nodes_explored: int = 0
    proof_gap: Fraction | None = None
    lp_pivots: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def key(self):
        """Hashable summary used to compare runs for determinism."""
        a = None if self.assignment is None else tuple(int(v) for v in self.assignment)
        return (self.status, a, self.objective_value, self.nodes_explored, self.proof_gap)
