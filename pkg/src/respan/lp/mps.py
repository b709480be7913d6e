"""Fixed-format MPS export and name/value solution import."""

from __future__ import annotations

import logging
import math
import os
from pathlib import Path

import numpy as np

from .problem import LpError, LpProblem, LpSolution, Status

logger = logging.getLogger(__name__)

OBJ_ROW = "COST"


def _num(v: float) -> str:
    if v == 0:
        return "0"
    s = repr(float(v))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def _fields(code: str, name: str, *pairs: str) -> str:
    # Fixed MPS columns: 2-3 code, 5-12 name, 15-22 name, 25-36 value, 40-47, 50-61.
    # Longer names keep the order but spill past column boundaries.
    line = f" {code:<2} {name:<8}"
    for k, item in enumerate(pairs):
        if k % 2 == 0:
            line += "  " + f"{item:<8}"
        else:
            line += "  " + f"{item:>12}"
            if k + 1 < len(pairs):
                line += " "
    return line.rstrip()


def _row_type(lo: float, hi: float) -> str:
    if lo == hi:
        return "E"
    if math.isfinite(lo):
        return "G"
    if math.isfinite(hi):
        return "L"
    return "N"


def export_mps(lp: LpProblem, path: str | os.PathLike) -> None:
    """Write ``lp`` as a fixed-format MPS file.

    Rows with two finite, distinct bounds become ``G`` rows with a RANGES
    entry of ``ub - lb``.  Columns appear in registration order.  Variables
    whose bounds differ from the MPS default ``[0, +inf)`` get BOUNDS lines
    (``FR`` for free, ``MI`` for no lower bound, ``FX`` for fixed).
    """
    if OBJ_ROW in lp._row_index:
        raise LpError(f"row name {OBJ_ROW!r} is reserved for the objective")
    a = lp.matrix().tocsc()
    rlb, rub = lp.row_lb, lp.row_ub
    lb, ub, c = lp.lb, lp.ub, lp.c
    lines = [f"NAME          {lp.name}", "ROWS", _fields("N", OBJ_ROW)]
    types = [_row_type(lo, hi) for lo, hi in zip(rlb, rub)]
    for name, t in zip(lp.row_names, types):
        lines.append(_fields(t, name))

    lines.append("COLUMNS")
    rows = lp.row_names
    for j, vname in enumerate(lp.var_names):
        entries: list[tuple[str, float]] = []
        if c[j] != 0.0:
            entries.append((OBJ_ROW, c[j]))
        lo, hi = a.indptr[j], a.indptr[j + 1]
        entries.extend((rows[i], v) for i, v in zip(a.indices[lo:hi], a.data[lo:hi]))
        if not entries:
            # keep the column declared so readers know it exists
            entries.append((OBJ_ROW, 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            flat = []
            for rname, v in pair:
                flat += [rname, _num(v)]
            lines.append(_fields("", vname, *flat))

    lines.append("RHS")
    for name, t, lo, hi in zip(rows, types, rlb, rub):
        if t in ("E", "G"):
            rhs = lo
        elif t == "L":
            rhs = hi
        else:
            continue
        if rhs != 0.0:
            lines.append(_fields("", "RHS", name, _num(rhs)))

    ranged = [(n, hi - lo) for n, t, lo, hi in zip(rows, types, rlb, rub)
              if t == "G" and math.isfinite(hi)]
    if ranged:
        lines.append("RANGES")
        for name, width in ranged:
            lines.append(_fields("", "RNG", name, _num(width)))

    blines = []
    for vname, lo, hi in zip(lp.var_names, lb, ub):
        if lo == hi:
            blines.append(_fields("FX", "BND", vname, _num(lo)))
            continue
        if not math.isfinite(lo) and not math.isfinite(hi):
            blines.append(_fields("FR", "BND", vname))
            continue
        if not math.isfinite(lo):
            blines.append(_fields("MI", "BND", vname))
        elif lo != 0.0 or hi < 0.0:
            blines.append(_fields("LO", "BND", vname, _num(lo)))
        if math.isfinite(hi):
            blines.append(_fields("UP", "BND", vname, _num(hi)))
    if blines:
        lines.append("BOUNDS")
        lines.extend(blines)
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_solution(lp: LpProblem, path: str | os.PathLike) -> LpSolution:
    """Read a ``name value`` listing produced by an external solver.

    Blank lines and ``#`` comments are skipped, except ``# status <Status>``
    which sets the solution status (default Optimal).  Variables missing from
    the file take their lower bound (0 when unbounded below) and each one
    counts as a warning.

    Raises:
        LpError: on an unknown variable name or a malformed line.
    """
    status = Status.OPTIMAL
    x = np.full(lp.n_vars, np.nan)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0].lower() == "status":
                    try:
                        status = Status(parts[1])
                    except ValueError:
                        raise LpError(f"line {lineno}: unknown status {parts[1]!r}") from None
                continue
            parts = line.split()
            if len(parts) != 2:
                raise LpError(f"line {lineno}: expected 'name value', got {line!r}")
            name, val = parts
            if name not in lp._var_index:
                raise LpError(f"line {lineno}: unknown variable {name!r}")
            try:
                x[lp._var_index[name]] = float(val)
            except ValueError:
                raise LpError(f"line {lineno}: bad value {val!r} for {name!r}") from None
    if status is not Status.OPTIMAL:
        return LpSolution(status=status, x=x, objective=math.nan, solver="import")
    missing = np.isnan(x)
    warnings = int(missing.sum())
    if warnings:
        lb = lp.lb
        x[missing] = np.where(np.isfinite(lb[missing]), lb[missing], 0.0)
        logger.warning("%d variables missing from %s; set to lower bound", warnings, path)
    return LpSolution(
        status=status, x=x, objective=lp.objective_value(x), warnings=warnings, solver="import"
    )
