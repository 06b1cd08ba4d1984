"""Exact match, element accuracy and feasibility rate."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tasks.hmc import hmc_is_path
from .tasks.mst import is_spanning_tree, n_nodes_for
from .tasks.sudoku import DIM as SUDOKU_DIM, decode_y, rule_violation

__all__ = [
    "EvalReport",
    "InstanceResult",
    "evaluate",
    "mst_is_tree",
    "sudoku_valid",
    "hmc_is_path",
    "sudoku_view",
]


def mst_is_tree(y, n: int | None = None) -> bool:
    """True when ``y`` is the edge indicator of a spanning tree of ``K_n``."""
    y = np.asarray(y)
    if n is None:
        n = n_nodes_for(y.shape[0])
    return is_spanning_tree(y, n)


def sudoku_valid(y) -> bool:
    """True when ``y`` encodes a complete grid obeying all four rule families."""
    y = np.asarray(y)
    if y.shape != (SUDOKU_DIM,) or np.any((y != 0) & (y != 1)):
        return False
    if np.any(y.reshape(81, 9).sum(axis=1) != 1):
        return False
    return rule_violation(decode_y(y)) is None


@dataclass
class InstanceResult:
    id: str
    em: bool
    elem_correct: int
    n_elements: int
    feasible: bool
    status: str = "optimal"
    solve_ms: float | None = None


@dataclass
class EvalReport:
    exact_match: float
    element_accuracy: float
    feasibility: float
    n: int
    per_instance: list = field(default_factory=list)
    n_infeasible_status: int = 0

    @property
    def timing(self) -> list:
        return [r.solve_ms for r in self.per_instance]

    def to_json(self) -> dict:
        out = asdict(self)
        out["timing"] = self.timing
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    def csv_line(self, label: str = "") -> str:
        """One CSV row: label, n, exact_match, element_accuracy, feasibility, solver_infeasible."""
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(
            [label, self.n, f"{self.exact_match:.6f}", f"{self.element_accuracy:.6f}",
             f"{self.feasibility:.6f}", self.n_infeasible_status])
        return buf.getvalue()


def evaluate(predictions: Sequence, gold: Sequence, feasibility_predicate: Callable,
             ids: Sequence | None = None, statuses: Sequence | None = None,
             timings: Sequence | None = None, element_view: Callable | None = None,
             element_mask=None) -> EvalReport:
    """Score predictions against gold label vectors.

    A prediction of ``None`` (the solver found no feasible point) counts as
    wrong and infeasible, and its elements are scored as an all-zeros
    vector. ``element_view`` maps a vector to the units that element
    accuracy counts (the 81 decoded cells for Sudoku); ``element_mask``
    holds one boolean mask per instance over those units, e.g. blank cells.
    """
    if len(predictions) != len(gold):
        raise ValueError(f"{len(predictions)} predictions for {len(gold)} gold vectors")
    n = len(gold)
    view = element_view or (lambda v: np.asarray(v))
    rows = []
    for i, (pred, g) in enumerate(zip(predictions, gold)):
        g = np.asarray(g)
        status = statuses[i] if statuses is not None else ("optimal" if pred is not None else "infeasible")
        if pred is None:
            p = np.zeros_like(g)
            feas = False
        else:
            p = np.asarray(pred)
            if p.shape != g.shape:
                raise ValueError(f"instance {i}: prediction shape {p.shape}, gold shape {g.shape}")
            feas = bool(feasibility_predicate(p))
        pv, gv = view(p), view(g)
        if element_mask is not None:
            m = np.asarray(element_mask[i], dtype=bool)
            pv, gv = pv[m], gv[m]
        em = pred is not None and bool(np.array_equal(p, g))
        rows.append(InstanceResult(
            str(ids[i]) if ids is not None else str(i), em, int(np.sum(pv == gv)), int(gv.size), feas,
            status, None if timings is None else float(timings[i])))
    total = sum(r.n_elements for r in rows)
    return EvalReport(
        exact_match=sum(r.em for r in rows) / n if n else 0.0,
        element_accuracy=sum(r.elem_correct for r in rows) / total if total else 0.0,
        feasibility=sum(r.feasible for r in rows) / n if n else 0.0,
        n=n,
        per_instance=rows,
        n_infeasible_status=sum(r.status != "optimal" for r in rows),
    )


def sudoku_view(y):
    """Entry-level view: the 81 decoded cells."""
    return decode_y(y)
