"""Dense two-phase tableau simplex used as the desk-scale reference solver.

The problem is rewritten in standard form ``A y = b, y >= 0`` (bound shifts,
free-variable splits, slack columns for inequalities and finite ranges) and
solved with a textbook tableau.  Pricing starts with Dantzig's rule and falls
back to Bland's rule for the rest of the solve once a run of degenerate
pivots is seen, which guarantees termination.  The leaving variable is always
picked by the minimum ratio with ties broken on the smallest basic index.
"""

from __future__ import annotations

import math
import time

import numpy as np
import scipy.linalg

from .problem import FEAS_TOL, LpError, LpProblem, LpSolution, Status, feasibility_violation

DEFAULT_MAX_VARS = 5000

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_DEGENERATE_RUN = 50


class SizeCapExceeded(LpError):
    pass


class _Unbounded(Exception):
    pass


class _IterationLimit(Exception):
    pass


class _Tableau:
    def __init__(self, table: np.ndarray, basis: list[int], max_iter: int):
        self.t = table
        self.basis = basis
        self.iterations = 0
        self.max_iter = max_iter
        self.bland = False
        self._degenerate = 0

    def pivot(self, r: int, j: int) -> None:
        t = self.t
        t[r] /= t[r, j]
        col = t[:, j].copy()
        col[r] = 0.0
        t -= np.outer(col, t[r])
        t[:, j] = 0.0
        t[r, j] = 1.0
        self.basis[r] = j

    def _entering(self, allowed: np.ndarray) -> int | None:
        d = self.t[-1, :-1]
        cand = np.flatnonzero(allowed & (d < -_COST_TOL))
        if len(cand) == 0:
            return None
        if self.bland:
            return int(cand[0])
        return int(cand[np.argmin(d[cand])])

    def _leaving(self, j: int) -> int | None:
        t = self.t
        col = t[:-1, j]
        rows = np.flatnonzero(col > _PIVOT_TOL)
        if len(rows) == 0:
            return None
        ratios = t[rows, -1] / col[rows]
        best = ratios.min()
        tie = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        r = min(tie, key=lambda i: self.basis[i])
        if best <= 1e-12:
            self._degenerate += 1
            if self._degenerate >= _DEGENERATE_RUN:
                self.bland = True
        else:
            self._degenerate = 0
        return int(r)

    def run(self, allowed: np.ndarray) -> None:
        while True:
            j = self._entering(allowed)
            if j is None:
                return
            r = self._leaving(j)
            if r is None:
                raise _Unbounded
            if self.iterations >= self.max_iter:
                raise _IterationLimit
            self.pivot(r, j)
            self.iterations += 1


def _standard_form(lp: LpProblem):
    """Rewrite ``lp`` as ``min c y + const, A y = b, y >= 0``.

    ``colmap`` maps each structural column to (original var, sign); the
    original point is ``x = offset + sum(sign * y)`` over those columns.
    """
    a_orig = lp.matrix().toarray()
    lb, ub, cost = lp.lb, lp.ub, lp.c
    m, n = a_orig.shape

    cols: list[np.ndarray] = []
    colmap: list[tuple[int, float]] = []
    offset = np.zeros(n)
    c_std: list[float] = []
    var_bound_rows: list[tuple[int, float]] = []  # (std column, upper bound)
    for j in range(n):
        if math.isfinite(lb[j]):
            offset[j] = lb[j]
            cols.append(a_orig[:, j])
            colmap.append((j, 1.0))
            c_std.append(cost[j])
            if math.isfinite(ub[j]):
                var_bound_rows.append((len(cols) - 1, ub[j] - lb[j]))
        elif math.isfinite(ub[j]):
            offset[j] = ub[j]
            cols.append(-a_orig[:, j])
            colmap.append((j, -1.0))
            c_std.append(-cost[j])
        else:
            cols.append(a_orig[:, j])
            colmap.append((j, 1.0))
            c_std.append(cost[j])
            cols.append(-a_orig[:, j])
            colmap.append((j, -1.0))
            c_std.append(-cost[j])
    ny = len(cols)
    a_y = np.column_stack(cols) if cols else np.zeros((m, 0))
    shift = a_orig @ offset if n else np.zeros(m)
    rlb = lp.row_lb - shift
    rub = lp.row_ub - shift

    # rows as (dense y-part, [(slack, coef)], rhs)
    rows: list[tuple[np.ndarray | None, list[tuple[int, float]], float]] = []
    ns = 0
    zero = np.zeros(ny)
    for i in range(m):
        lo, hi = rlb[i], rub[i]
        fin_lo, fin_hi = math.isfinite(lo), math.isfinite(hi)
        if not fin_lo and not fin_hi:
            continue
        if fin_lo and fin_hi and lo == hi:
            rows.append((a_y[i], [], lo))
        elif fin_lo and not fin_hi:
            rows.append((a_y[i], [(ns, -1.0)], lo))
            ns += 1
        elif fin_hi and not fin_lo:
            rows.append((a_y[i], [(ns, 1.0)], hi))
            ns += 1
        else:
            rows.append((a_y[i], [(ns, -1.0)], lo))
            rows.append((zero, [(ns, 1.0), (ns + 1, 1.0)], hi - lo))
            ns += 2
    for col, width in var_bound_rows:
        e = np.zeros(ny)
        e[col] = 1.0
        rows.append((e, [(ns, 1.0)], width))
        ns += 1

    big_m = len(rows)
    a = np.zeros((big_m, ny + ns))
    b = np.zeros(big_m)
    for i, (yrow, slacks, rhs) in enumerate(rows):
        a[i, :ny] = yrow
        for s, coef in slacks:
            a[i, ny + s] = coef
        b[i] = rhs
    c = np.concatenate([np.asarray(c_std, dtype=float), np.zeros(ns)])
    const = float(cost @ offset) if n else 0.0
    return a, b, c, const, colmap, offset, ny


def solve_reference(
    lp: LpProblem,
    max_vars: int = DEFAULT_MAX_VARS,
    max_iter: int | None = None,
) -> LpSolution:
    """Solve ``lp`` with the dense reference simplex.

    Raises:
        SizeCapExceeded: if ``lp`` has more than ``max_vars`` variables.
    """
    if lp.n_vars > max_vars:
        raise SizeCapExceeded(
            f"reference solver capped at {max_vars} variables, problem has {lp.n_vars}"
        )
    t0 = time.perf_counter()
    a, b, c, const, colmap, offset, ny = _standard_form(lp)
    m, ncols = a.shape

    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    # a column usable as initial basis: +1 in exactly one row, 0 elsewhere
    basis: list[int] = [-1] * m
    nz_count = (a != 0).sum(axis=0) if m else np.zeros(ncols, dtype=int)
    for j in range(ny, ncols):
        if nz_count[j] == 1:
            i = int(np.flatnonzero(a[:, j])[0])
            if a[i, j] == 1.0 and basis[i] < 0:
                basis[i] = j
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    total = ncols + n_art

    table = np.zeros((m + 1, total + 1))
    table[:m, :ncols] = a
    table[:m, -1] = b
    for k, i in enumerate(art_rows):
        table[i, ncols + k] = 1.0
        basis[i] = ncols + k

    if max_iter is None:
        max_iter = 200 * (m + total + 1)
    tab = _Tableau(table, basis, max_iter)

    def finish(status: Status, x=None, obj=math.nan) -> LpSolution:
        if x is None:
            x = np.full(lp.n_vars, math.nan)
        return LpSolution(
            status=status, x=x, objective=obj, iterations=tab.iterations,
            wall_time=time.perf_counter() - t0, solver="reference",
        )

    try:
        # phase 1
        if n_art:
            table[-1, :] = 0.0
            table[-1, ncols:total] = 1.0
            for i in art_rows:
                table[-1] -= table[i]
            tab.run(np.ones(total, dtype=bool))
            if -table[-1, -1] > 1e-9 * (1.0 + float(np.abs(b).max(initial=0.0))):
                return finish(Status.INFEASIBLE)
            # drive zero-level artificials out of the basis, drop redundant rows
            drop = []
            for i in range(m):
                if tab.basis[i] >= ncols:
                    nzc = np.flatnonzero(np.abs(table[i, :ncols]) > _PIVOT_TOL)
                    if len(nzc):
                        tab.pivot(i, int(nzc[0]))
                    else:
                        drop.append(i)
            if drop:
                keep = [i for i in range(m) if i not in set(drop)] + [m]
                table = table[keep]
                tab.t = table
                tab.basis = [tab.basis[i] for i in keep[:-1]]
            table = np.delete(table, np.arange(ncols, total), axis=1)
            tab.t = table
            tab.bland = False
            tab._degenerate = 0
        # phase 2
        rows_m = table.shape[0] - 1
        table[-1, :] = 0.0
        table[-1, :ncols] = c
        for i in range(rows_m):
            cb = c[tab.basis[i]]
            if cb != 0.0:
                table[-1] -= cb * table[i]
        tab.run(np.ones(ncols, dtype=bool))
    except _Unbounded:
        return finish(Status.UNBOUNDED)
    except _IterationLimit:
        return finish(Status.ITERATION_LIMIT)

    basis_cols = list(tab.basis)
    y_tab = np.zeros(ncols)
    y_tab[basis_cols] = table[:-1, -1]
    candidates = [y_tab]
    # recompute basic values from the untouched standard-form data
    kept_rows = _kept_rows(a, basis_cols, table)
    if kept_rows is not None:
        try:
            y_ref = np.zeros(ncols)
            y_ref[basis_cols] = np.linalg.solve(a[np.ix_(kept_rows, basis_cols)], b[kept_rows])
            candidates.insert(0, y_ref)
        except np.linalg.LinAlgError:
            pass

    best = None
    for y in candidates:
        y = np.where((y < 0) & (y > -1e-9), 0.0, y)
        x = offset.copy()
        for k, (j, sign) in enumerate(colmap):
            x[j] += sign * y[k]
        x = np.minimum(np.maximum(x, lp.lb), lp.ub)
        viol = feasibility_violation(lp, x).max
        if best is None or viol < best[1]:
            best = (x, viol)
    x, viol = best
    if viol > FEAS_TOL:
        return finish(Status.NUMERICAL_ERROR, x, lp.objective_value(x))
    return finish(Status.OPTIMAL, x, lp.objective_value(x))


def _kept_rows(a: np.ndarray, basis_cols: list[int], table: np.ndarray) -> list[int] | None:
    # after redundant rows were dropped, pick a row subset making B square
    k = len(basis_cols)
    if k == a.shape[0]:
        return list(range(k))
    _, _, piv = scipy.linalg.qr(a[:, basis_cols].T, pivoting=True)
    return sorted(piv[:k].tolist())
