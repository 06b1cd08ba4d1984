"""Dataset generators, loaders and oracles for the three task families."""

from . import hmc, mst, sudoku
from .io import read_jsonl, write_jsonl

__all__ = ["hmc", "mst", "sudoku", "read_jsonl", "write_jsonl"]
