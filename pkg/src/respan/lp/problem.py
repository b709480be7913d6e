"""Sparse, solver-agnostic linear program container.

Variables carry their own bounds and objective coefficient; constraints are
rows ``row_lb <= a @ x <= row_ub``.  An equality row simply has equal bounds.
The objective is always minimized.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

INF = math.inf

# Shared tolerance set: feasibility is absolute, objective comparisons relative.
FEAS_TOL = 1e-7
OBJ_RTOL = 1e-6


class LpError(ValueError):
    """Raised on malformed LP construction (bad names, bounds or handles)."""


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    NUMERICAL_ERROR = "NumericalError"
    ITERATION_LIMIT = "IterationLimit"


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray
    objective: float
    iterations: int = 0
    wall_time: float = 0.0
    warnings: int = 0
    solver: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def value(self, handle: int) -> float:
        return float(self.x[handle])


def _check_name(name: str) -> None:
    if not isinstance(name, str) or not name or any(c.isspace() for c in name):
        raise LpError(f"invalid name {name!r}: must be non-empty and whitespace-free")


class LpProblem:
    """Row-wise sparse LP with a named variable registry.

    Handles returned by :meth:`add_var` / :meth:`add_constraint` are plain
    integer indices in registration order and never change.
    """

    def __init__(self, name: str = "LP"):
        _check_name(name)
        self.name = name
        self.var_names: list[str] = []
        self._var_index: dict[str, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._obj: list[float] = []

        self.row_names: list[str] = []
        self._row_index: dict[str, int] = {}
        self._row_lb: list[float] = []
        self._row_ub: list[float] = []
        # COO chunks, concatenated lazily
        self._coo_r: list[np.ndarray] = []
        self._coo_c: list[np.ndarray] = []
        self._coo_v: list[np.ndarray] = []
        self._csr: sp.csr_matrix | None = None

    # -- variables -------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def n_rows(self) -> int:
        return len(self.row_names)

    @property
    def nnz(self) -> int:
        return int(self.matrix().nnz)

    def add_var(self, name: str, lb: float = 0.0, ub: float = INF, obj: float = 0.0) -> int:
        _check_name(name)
        if name in self._var_index:
            raise LpError(f"duplicate variable name {name!r}")
        lb, ub, obj = float(lb), float(ub), float(obj)
        if math.isnan(lb) or math.isnan(ub) or lb > ub or lb == INF or ub == -INF:
            raise LpError(f"variable {name!r}: invalid bounds [{lb}, {ub}]")
        if not math.isfinite(obj):
            raise LpError(f"variable {name!r}: objective coefficient must be finite")
        handle = len(self.var_names)
        self.var_names.append(name)
        self._var_index[name] = handle
        self._lb.append(lb)
        self._ub.append(ub)
        self._obj.append(obj)
        return handle

    def add_vars(
        self,
        names: Sequence[str],
        lb: float | Sequence[float] = 0.0,
        ub: float | Sequence[float] = INF,
        obj: float | Sequence[float] = 0.0,
    ) -> np.ndarray:
        """Vectorized :meth:`add_var`; returns the block of new handles."""
        k = len(names)
        lb_a = np.broadcast_to(np.asarray(lb, dtype=float), (k,))
        ub_a = np.broadcast_to(np.asarray(ub, dtype=float), (k,))
        obj_a = np.broadcast_to(np.asarray(obj, dtype=float), (k,))
        if np.isnan(lb_a).any() or np.isnan(ub_a).any() or (lb_a > ub_a).any():
            raise LpError("invalid bounds in variable block")
        if np.isposinf(lb_a).any() or np.isneginf(ub_a).any():
            raise LpError("invalid bounds in variable block")
        if not np.isfinite(obj_a).all():
            raise LpError("objective coefficients must be finite")
        start = len(self.var_names)
        for i, name in enumerate(names):
            _check_name(name)
            if name in self._var_index:
                raise LpError(f"duplicate variable name {name!r}")
            self._var_index[name] = start + i
        self.var_names.extend(names)
        self._lb.extend(lb_a.tolist())
        self._ub.extend(ub_a.tolist())
        self._obj.extend(obj_a.tolist())
        return np.arange(start, start + k)

    def var_handle(self, name: str) -> int:
        try:
            return self._var_index[name]
        except KeyError:
            raise LpError(f"unknown variable {name!r}") from None

    @property
    def lb(self) -> np.ndarray:
        return np.asarray(self._lb, dtype=float)

    @property
    def ub(self) -> np.ndarray:
        return np.asarray(self._ub, dtype=float)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self._obj, dtype=float)

    def set_bounds(self, handle: int, lb: float, ub: float) -> None:
        if lb > ub:
            raise LpError(f"variable {self.var_names[handle]!r}: invalid bounds [{lb}, {ub}]")
        self._lb[handle] = float(lb)
        self._ub[handle] = float(ub)

    # -- constraints -----------------------------------------------------
    def _next_row_name(self, name: str | None) -> str:
        if name is None:
            name = f"R{len(self.row_names)}"
        _check_name(name)
        if name in self._row_index:
            raise LpError(f"duplicate constraint name {name!r}")
        return name

    def add_constraint(
        self,
        terms: Iterable[tuple[int, float]],
        lb: float = -INF,
        ub: float = INF,
        name: str | None = None,
    ) -> int:
        """Append ``lb <= sum(coef * x[var]) <= ub``.

        Repeated variables are merged; zero coefficients are dropped.
        """
        lb, ub = float(lb), float(ub)
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise LpError(f"constraint {name!r}: invalid bounds [{lb}, {ub}]")
        merged: dict[int, float] = {}
        n = len(self.var_names)
        for var, coef in terms:
            var = int(var)
            if not 0 <= var < n:
                raise LpError(f"unknown variable handle {var}")
            coef = float(coef)
            if not math.isfinite(coef):
                raise LpError(f"non-finite coefficient on {self.var_names[var]!r}")
            merged[var] = merged.get(var, 0.0) + coef
        merged = {v: a for v, a in merged.items() if a != 0.0}
        name = self._next_row_name(name)
        row = len(self.row_names)
        self.row_names.append(name)
        self._row_index[name] = row
        self._row_lb.append(lb)
        self._row_ub.append(ub)
        if merged:
            cols = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
            vals = np.fromiter(merged.values(), dtype=float, count=len(merged))
            self._coo_r.append(np.full(len(cols), row, dtype=np.int64))
            self._coo_c.append(cols)
            self._coo_v.append(vals)
        self._csr = None
        return row

    def add_constraints(
        self,
        rows: np.ndarray,
        cols: np.ndarray,
        vals: np.ndarray,
        lb: float | Sequence[float],
        ub: float | Sequence[float],
        names: Sequence[str],
    ) -> np.ndarray:
        """Append a block of rows given in local COO form.

        ``rows`` index into ``names`` (0-based within the block).  Entries are
        summed per (row, col) and zeros dropped, as in :meth:`add_constraint`.
        """
        k = len(names)
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        lb_a = np.broadcast_to(np.asarray(lb, dtype=float), (k,))
        ub_a = np.broadcast_to(np.asarray(ub, dtype=float), (k,))
        if np.isnan(lb_a).any() or np.isnan(ub_a).any() or (lb_a > ub_a).any():
            raise LpError("invalid row bounds in constraint block")
        if len(cols) and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise LpError("unknown variable handle in constraint block")
        if len(rows) and (rows.min() < 0 or rows.max() >= k):
            raise LpError("row index out of block range")
        if not np.isfinite(vals).all():
            raise LpError("non-finite coefficient in constraint block")
        start = len(self.row_names)
        for name in names:
            name = self._next_row_name(name)
            self._row_index[name] = len(self.row_names)
            self.row_names.append(name)
        self._row_lb.extend(lb_a.tolist())
        self._row_ub.extend(ub_a.tolist())
        keep = vals != 0.0
        self._coo_r.append(rows[keep] + start)
        self._coo_c.append(cols[keep])
        self._coo_v.append(vals[keep])
        self._csr = None
        return np.arange(start, start + k)

    @property
    def row_lb(self) -> np.ndarray:
        return np.asarray(self._row_lb, dtype=float)

    @property
    def row_ub(self) -> np.ndarray:
        return np.asarray(self._row_ub, dtype=float)

    def matrix(self) -> sp.csr_matrix:
        """Constraint matrix in canonical CSR form (duplicates summed, zeros removed)."""
        if self._csr is None:
            shape = (self.n_rows, self.n_vars)
            if self._coo_r:
                r = np.concatenate(self._coo_r)
                c = np.concatenate(self._coo_c)
                v = np.concatenate(self._coo_v)
            else:
                r = c = np.zeros(0, dtype=np.int64)
                v = np.zeros(0)
            a = sp.coo_matrix((v, (r, c)), shape=shape).tocsr()
            a.sum_duplicates()
            a.eliminate_zeros()
            a.sort_indices()
            self._csr = a
        return self._csr

    def row_terms(self, row: int) -> list[tuple[int, float]]:
        a = self.matrix()
        lo, hi = a.indptr[row], a.indptr[row + 1]
        return list(zip(a.indices[lo:hi].tolist(), a.data[lo:hi].tolist()))

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.c @ np.asarray(x, dtype=float))

    def size(self) -> dict[str, int]:
        return {"variables": self.n_vars, "constraints": self.n_rows, "nonzeros": self.nnz}


@dataclass
class Violation:
    """Largest row and bound infeasibilities of a candidate point."""

    row: float
    bound: float
    worst_row: int | None = None
    worst_var: int | None = None
    detail: dict = field(default_factory=dict)

    @property
    def max(self) -> float:
        return max(self.row, self.bound)


def feasibility_violation(lp: LpProblem, x: np.ndarray) -> Violation:
    """Residual check computed from the stored problem only."""
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.n_vars,):
        raise LpError(f"point has shape {x.shape}, expected ({lp.n_vars},)")
    ax = lp.matrix() @ x if lp.n_rows else np.zeros(0)
    row_v = np.maximum(lp.row_lb - ax, ax - lp.row_ub)
    row_v = np.maximum(row_v, 0.0)
    bnd_v = np.maximum(np.maximum(lp.lb - x, x - lp.ub), 0.0)
    return Violation(
        row=float(row_v.max()) if len(row_v) else 0.0,
        bound=float(bnd_v.max()) if len(bnd_v) else 0.0,
        worst_row=int(row_v.argmax()) if len(row_v) else None,
        worst_var=int(bnd_v.argmax()) if len(bnd_v) else None,
    )
