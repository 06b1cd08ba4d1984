"""Sudoku as a 729-dimensional 0/1 labelling problem.

Variable ``81*r + 9*c + (k-1)`` is 1 when cell ``(r, c)`` holds digit ``k``.
The weight vector marks the clues: ``w`` is 1 on the clue variables and 0
elsewhere, and ``y`` is the one-hot encoding of the solution grid.

Text format: one puzzle per line, an 81-character givens string (``0`` or
``.`` for blanks), a separator, and the 81-character solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core import Sample

__all__ = [
    "DIM",
    "var_index",
    "encode_grid",
    "decode_y",
    "rule_violation",
    "SudokuInstance",
    "SudokuFormatError",
    "parse_line",
    "load_sudoku",
    "load_sudoku_instances",
    "write_sudoku",
    "count_solutions",
    "solve_grid",
    "gen_sudoku_instances",
    "gen_sudoku_dataset",
    "permute_sudoku",
    "cell_permutation",
    "canonical_constraints",
]

DIM = 729
_FULL = 0x3FE  # bits 1..9


def var_index(r: int, c: int, k: int) -> int:
    return 81 * r + 9 * c + (k - 1)


def encode_grid(grid) -> np.ndarray:
    """One-hot encode an 81-cell grid; blanks (0) leave their fiber empty."""
    g = np.asarray(grid, dtype=np.int64).reshape(81)
    y = np.zeros(DIM, dtype=np.int64)
    cells = np.flatnonzero(g)
    y[9 * cells + g[cells] - 1] = 1
    return y


def decode_y(y) -> np.ndarray:
    """81-cell grid from a 0/1 vector; cells with no (or several) digits give 0."""
    Y = np.asarray(y).reshape(81, 9)
    ones = Y.sum(axis=1)
    grid = np.argmax(Y, axis=1) + 1
    grid[ones != 1] = 0
    return grid.astype(np.int64)


def rule_violation(grid) -> str | None:
    """Describe the first broken rule of a full grid, or None if it is valid."""
    g = np.asarray(grid).reshape(9, 9)
    bad = np.argwhere((g < 1) | (g > 9))
    if len(bad):
        r, c = bad[0]
        return f"cell ({r + 1}, {c + 1}) holds no digit in 1-9"
    digits = set(range(1, 10))
    for r in range(9):
        if set(g[r].tolist()) != digits:
            return f"row {r + 1} repeats a digit"
    for c in range(9):
        if set(g[:, c].tolist()) != digits:
            return f"column {c + 1} repeats a digit"
    for b in range(9):
        br, bc = divmod(b, 3)
        if set(g[3 * br:3 * br + 3, 3 * bc:3 * bc + 3].ravel().tolist()) != digits:
            return f"box {b + 1} repeats a digit"
    return None


class SudokuFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SudokuInstance:
    givens: tuple  # 81 digits, 0 = blank
    solution: tuple  # 81 digits

    def __post_init__(self):
        if len(self.givens) != 81 or len(self.solution) != 81:
            raise ValueError("givens and solution must have 81 cells")
        for i, (g, s) in enumerate(zip(self.givens, self.solution)):
            if g and g != s:
                raise ValueError(f"clue at cell {i} disagrees with the solution")

    @property
    def n_clues(self) -> int:
        return sum(1 for g in self.givens if g)

    def line(self, sep=" ") -> str:
        return "".join(map(str, self.givens)) + sep + "".join(map(str, self.solution))

    def sample(self, id="") -> Sample:
        return Sample(encode_grid(self.givens), encode_grid(self.solution), id)


def _digits(text, lineno, what):
    if len(text) != 81:
        raise SudokuFormatError(f"line {lineno}: {what} has {len(text)} characters, expected 81")
    out = []
    for pos, ch in enumerate(text):
        if ch == ".":
            out.append(0)
        elif ch.isdigit():
            out.append(int(ch))
        else:
            raise SudokuFormatError(f"line {lineno}, {what} position {pos + 1}: unexpected character {ch!r}")
    return tuple(out)


def parse_line(line: str, lineno: int = 1, comma: bool = False) -> SudokuInstance:
    """Parse one puzzle line and validate the solution grid."""
    text = line.strip()
    if comma:
        parts = text.split(",")
    elif len(text) == 162:
        parts = [text[:81], text[81:]]
    else:
        parts = text.split()
    if len(parts) != 2:
        raise SudokuFormatError(f"line {lineno}: expected givens and solution, found {len(parts)} fields")
    givens = _digits(parts[0], lineno, "givens")
    solution = _digits(parts[1], lineno, "solution")
    why = rule_violation(solution)
    if why:
        raise SudokuFormatError(f"line {lineno}: invalid solution, {why}")
    try:
        return SudokuInstance(givens, solution)
    except ValueError as e:
        raise SudokuFormatError(f"line {lineno}: {e}") from None


def load_sudoku_instances(path, comma: bool = False) -> list[SudokuInstance]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            if comma and lineno == 1 and not line.strip()[:1].isdigit() and line.strip()[:1] != ".":
                continue  # header row such as "quizzes,solutions"
            out.append(parse_line(line, lineno, comma))
    return out


def load_sudoku(path, comma: bool = False) -> list[Sample]:
    """Samples from a puzzle file; ids are ``<file stem>-<index>``."""
    stem = Path(path).stem
    return [inst.sample(f"{stem}-{i}") for i, inst in enumerate(load_sudoku_instances(path, comma))]


def write_sudoku(path, instances, comma: bool = False):
    sep = "," if comma else " "
    with open(path, "w") as fh:
        for inst in instances:
            fh.write(inst.line(sep) + "\n")


# --- backtracking solver used for generation --------------------------------

_BOX = [3 * (r // 3) + c // 3 for r in range(9) for c in range(9)]


def _masks(grid):
    rows = [0] * 9
    cols = [0] * 9
    boxes = [0] * 9
    for i, v in enumerate(grid):
        if v:
            bit = 1 << v
            r, c = divmod(i, 9)
            if rows[r] & bit or cols[c] & bit or boxes[_BOX[i]] & bit:
                return None
            rows[r] |= bit
            cols[c] |= bit
            boxes[_BOX[i]] |= bit
    return rows, cols, boxes


def _search(grid, rows, cols, boxes, limit, rng, found):
    best = -1
    best_cand = 0
    best_n = 10
    for i in range(81):
        if grid[i]:
            continue
        r, c = divmod(i, 9)
        cand = _FULL & ~(rows[r] | cols[c] | boxes[_BOX[i]])
        n = bin(cand).count("1")
        if n < best_n:
            best, best_cand, best_n = i, cand, n
            if n <= 1:
                break
    if best < 0:
        found.append(list(grid))
        return len(found) >= limit
    if best_n == 0:
        return False
    digits = [k for k in range(1, 10) if best_cand >> k & 1]
    if rng is not None:
        rng.shuffle(digits)
    r, c = divmod(best, 9)
    b = _BOX[best]
    for k in digits:
        bit = 1 << k
        grid[best] = k
        rows[r] |= bit
        cols[c] |= bit
        boxes[b] |= bit
        stop = _search(grid, rows, cols, boxes, limit, rng, found)
        rows[r] &= ~bit
        cols[c] &= ~bit
        boxes[b] &= ~bit
        grid[best] = 0
        if stop:
            return True
    return False


def count_solutions(givens, limit: int = 2) -> int:
    """Number of completions of ``givens``, counting at most ``limit``."""
    grid = list(givens)
    m = _masks(grid)
    if m is None:
        return 0
    found = []
    _search(grid, *m, limit, None, found)
    return len(found)


def solve_grid(givens):
    """First completion in digit order, or None."""
    grid = list(givens)
    m = _masks(grid)
    if m is None:
        return None
    found = []
    _search(grid, *m, 1, None, found)
    return found[0] if found else None


def _random_solution(rng):
    grid = [0] * 81
    found = []
    _search(grid, [0] * 9, [0] * 9, [0] * 9, 1, rng, found)
    return found[0]


def gen_sudoku_instances(n: int, seed: int, n_clues: int = 36) -> list[SudokuInstance]:
    """Random solution grids with clues removed while the solution stays unique.

    Cells are cleared in random order; a removal is undone when it would
    admit a second completion. Removal stops at ``n_clues`` givens (or
    earlier if no further cell can go).
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 17 <= n_clues <= 81:
        raise ValueError("n_clues must lie in [17, 81]")
    rng = np.random.default_rng(seed)
    py_rng = _NumpyShuffler(rng)
    out = []
    for _ in range(n):
        sol = _random_solution(py_rng)
        givens = list(sol)
        count = 81
        for cell in rng.permutation(81):
            if count <= n_clues:
                break
            keep = givens[cell]
            givens[cell] = 0
            if count_solutions(givens, 2) == 1:
                count -= 1
            else:
                givens[cell] = keep
        out.append(SudokuInstance(tuple(givens), tuple(sol)))
    return out


class _NumpyShuffler:
    def __init__(self, rng):
        self.rng = rng

    def shuffle(self, seq):
        seq[:] = [seq[i] for i in self.rng.permutation(len(seq))]


def gen_sudoku_dataset(n: int, seed: int, n_clues: int = 36, prefix="sudoku") -> list[Sample]:
    return [inst.sample(f"{prefix}-{i}") for i, inst in enumerate(gen_sudoku_instances(n, seed, n_clues))]


def cell_permutation(seed) -> np.ndarray:
    """Seeded permutation of the 81 cells; ``seed=None`` is the identity."""
    if seed is None:
        return np.arange(81)
    return np.random.default_rng(seed).permutation(81)


def permute_sudoku(samples, seed, inverse: bool = False) -> list[Sample]:
    """Move every cell's 9-digit fiber to a new position, the same way in every sample.

    Cell ``i`` of the input lands at cell ``perm[i]``.
    """
    perm = cell_permutation(seed)
    if inverse:
        perm = np.argsort(perm)
    src = np.empty(81, dtype=np.intp)
    src[perm] = np.arange(81)
    idx = (9 * src[:, None] + np.arange(9)).reshape(-1)
    out = []
    for s in samples:
        if s.dim != DIM:
            raise ValueError(f"sample {s.id!r} is not a Sudoku encoding")
        out.append(Sample(s.w[idx], s.y[idx], s.id))
    return out


def canonical_constraints(perm_seed=None) -> list[tuple[str, dict, int]]:
    """The 324 one-hot rules as ``(name, {variable: 1}, 1)``.

    With ``perm_seed`` the cells are relabelled as by :func:`permute_sudoku`.
    """
    perm = cell_permutation(perm_seed)

    def v(r, c, k):
        return 9 * int(perm[9 * r + c]) + k - 1

    out = []
    for r in range(9):
        for c in range(9):
            out.append((f"cell r{r + 1}c{c + 1}", {v(r, c, k): 1 for k in range(1, 10)}, 1))
    for r in range(9):
        for k in range(1, 10):
            out.append((f"row {r + 1} digit {k}", {v(r, c, k): 1 for c in range(9)}, 1))
    for c in range(9):
        for k in range(1, 10):
            out.append((f"column {c + 1} digit {k}", {v(r, c, k): 1 for r in range(9)}, 1))
    for b in range(9):
        br, bc = divmod(b, 3)
        for k in range(1, 10):
            cells = [(3 * br + i, 3 * bc + j) for i in range(3) for j in range(3)]
            out.append((f"box {b + 1} digit {k}", {v(r, c, k): 1 for r, c in cells}, 1))
    return out
