"""Benchmark harness: problem generators, solvers, tables and demos."""

from .generators import (BenchProblem, gen_linear_problem, gen_quadratic_problem,
                         load_problem, save_problem)
from .barrier import barrier_reference_solve, grid_reference_2d
from .solve import layer_solve, SolveResult
from .tables import RelErrorTable, relative_error, run_table

__all__ = [
    "BenchProblem", "gen_linear_problem", "gen_quadratic_problem",
    "load_problem", "save_problem",
    "barrier_reference_solve", "grid_reference_2d",
    "layer_solve", "SolveResult",
    "RelErrorTable", "relative_error", "run_table",
]
