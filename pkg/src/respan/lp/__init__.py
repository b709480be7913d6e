from .mps import export_mps, import_solution
from .problem import (
    FEAS_TOL,
    INF,
    OBJ_RTOL,
    LpError,
    LpProblem,
    LpSolution,
    Status,
    Violation,
    feasibility_violation,
)
from .simplex import DEFAULT_MAX_VARS, SizeCapExceeded, solve_reference
from .solvers import SolverError, default_external_command, solve, solve_external, solve_highs

__all__ = [
    "DEFAULT_MAX_VARS",
    "FEAS_TOL",
    "INF",
    "OBJ_RTOL",
    "LpError",
    "LpProblem",
    "LpSolution",
    "SizeCapExceeded",
    "SolverError",
    "Status",
    "Violation",
    "default_external_command",
    "export_mps",
    "feasibility_violation",
    "import_solution",
    "solve",
    "solve_external",
    "solve_highs",
    "solve_reference",
]
