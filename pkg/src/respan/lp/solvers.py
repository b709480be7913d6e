"""Solver back ends behind one ``solve`` entry point.

``reference``  dense simplex in :mod:`respan.lp.simplex` (small problems only)
``highs``      HiGHS through highspy, in process
``mps:<cmd>``  shell out: export MPS, run ``cmd`` with ``{mps}``/``{sol}``
               placeholders, read back the ``name value`` listing
"""

from __future__ import annotations

import math
import os
import shlex
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .mps import export_mps, import_solution
from .problem import LpError, LpProblem, LpSolution, Status
from .simplex import solve_reference


class SolverError(RuntimeError):
    pass


def default_external_command() -> str:
    return f"{shlex.quote(sys.executable)} -m respan.lp.highs_cli {{mps}} {{sol}}"


def thread_cap() -> int | None:
    raw = os.environ.get("REsPAN_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise SolverError(f"REsPAN_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


_HIGHS_STATUS = {
    "kOptimal": Status.OPTIMAL,
    "kInfeasible": Status.INFEASIBLE,
    "kUnbounded": Status.UNBOUNDED,
    "kUnboundedOrInfeasible": Status.INFEASIBLE,
    "kIterationLimit": Status.ITERATION_LIMIT,
    "kTimeLimit": Status.ITERATION_LIMIT,
}


def highs_status(model_status) -> Status:
    return _HIGHS_STATUS.get(str(model_status).split(".")[-1], Status.NUMERICAL_ERROR)


def solve_highs(lp: LpProblem) -> LpSolution:
    import highspy

    t0 = time.perf_counter()
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    threads = thread_cap()
    if threads:
        h.setOptionValue("threads", threads)
    a = lp.matrix().tocsc()
    inf = highspy.kHighsInf
    model = highspy.HighsLp()
    model.num_col_ = lp.n_vars
    model.num_row_ = lp.n_rows
    model.col_cost_ = lp.c
    model.col_lower_ = np.where(np.isfinite(lp.lb), lp.lb, -inf)
    model.col_upper_ = np.where(np.isfinite(lp.ub), lp.ub, inf)
    model.row_lower_ = np.where(np.isfinite(lp.row_lb), lp.row_lb, -inf)
    model.row_upper_ = np.where(np.isfinite(lp.row_ub), lp.row_ub, inf)
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = a.indptr
    model.a_matrix_.index_ = a.indices
    model.a_matrix_.value_ = a.data
    model.a_matrix_.num_col_ = lp.n_vars
    model.a_matrix_.num_row_ = lp.n_rows
    h.passModel(model)
    h.run()
    status = highs_status(h.getModelStatus())
    info = h.getInfo()
    if status is Status.OPTIMAL:
        x = np.asarray(h.getSolution().col_value, dtype=float)
        obj = lp.objective_value(x)
    else:
        x = np.full(lp.n_vars, math.nan)
        obj = math.nan
    return LpSolution(
        status=status, x=x, objective=obj,
        iterations=int(info.simplex_iteration_count + max(info.ipm_iteration_count, 0)),
        wall_time=time.perf_counter() - t0, solver="highs",
    )


def solve_external(lp: LpProblem, command: str, workdir: str | os.PathLike | None = None) -> LpSolution:
    """Round-trip ``lp`` through an MPS file and an external solver command."""
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        mps_path = Path(tmp) / "model.mps"
        sol_path = Path(tmp) / "model.sol"
        export_mps(lp, mps_path)
        argv = [
            arg.replace("{mps}", str(mps_path)).replace("{sol}", str(sol_path))
            for arg in shlex.split(command)
        ]
        proc = subprocess.run(argv, capture_output=True, text=True)
        if proc.returncode != 0:
            raise SolverError(
                f"external solver exited with {proc.returncode}: {proc.stderr.strip()[-500:]}"
            )
        if not sol_path.exists():
            raise SolverError("external solver produced no solution file")
        sol = import_solution(lp, sol_path)
    sol.wall_time = time.perf_counter() - t0
    sol.solver = "external"
    if not sol.optimal:
        sol.x = np.full(lp.n_vars, math.nan)
    return sol


def solve(lp: LpProblem, solver: str = "highs") -> LpSolution:
    """Dispatch on a solver spec: ``reference``, ``highs`` or ``mps[:command]``."""
    if solver == "reference":
        return solve_reference(lp)
    if solver == "highs":
        return solve_highs(lp)
    if solver == "mps" or solver.startswith("mps:"):
        cmd = solver[4:].strip() or default_external_command()
        return solve_external(lp, cmd)
    raise LpError(f"unknown solver {solver!r}")
