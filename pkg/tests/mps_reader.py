"""Minimal free-format MPS reader used only as a test oracle.

Deliberately shares no code with the exporter: it tokenizes on whitespace
and rebuilds ``min c x, lb <= A x <= ub, l <= x <= u`` from the sections.
"""

import math

import numpy as np


def read_mps(path):
    section = None
    rows, rtype, obj_row = [], {}, None
    cols, entries, rhs, ranges, bounds = [], {}, {}, {}, {}
    col_index = {}
    with open(path) as fh:
        for raw in fh:
            if not raw.strip() or raw.startswith("*"):
                continue
            if not raw[0].isspace():
                section = raw.split()[0]
                continue
            tok = raw.split()
            if section == "ROWS":
                t, name = tok
                if t == "N" and obj_row is None:
                    obj_row = name
                else:
                    rows.append(name)
                    rtype[name] = t
            elif section == "COLUMNS":
                col = tok[0]
                if col not in col_index:
                    col_index[col] = len(cols)
                    cols.append(col)
                for r, v in zip(tok[1::2], tok[2::2]):
                    entries[(r, col)] = float(v)
            elif section == "RHS":
                for r, v in zip(tok[1::2], tok[2::2]):
                    rhs[r] = float(v)
            elif section == "RANGES":
                for r, v in zip(tok[1::2], tok[2::2]):
                    ranges[r] = float(v)
            elif section == "BOUNDS":
                kind, col = tok[0], tok[2]
                val = float(tok[3]) if len(tok) > 3 else None
                bounds.setdefault(col, []).append((kind, val))
    n, m = len(cols), len(rows)
    rpos = {r: i for i, r in enumerate(rows)}
    c = np.zeros(n)
    a = np.zeros((m, n))
    for (r, col), v in entries.items():
        if r == obj_row:
            c[col_index[col]] = v
        else:
            a[rpos[r], col_index[col]] = v
    lo, hi = np.full(m, -math.inf), np.full(m, math.inf)
    for r, i in rpos.items():
        b = rhs.get(r, 0.0)
        t = rtype[r]
        if t == "E":
            lo[i] = hi[i] = b
        elif t == "G":
            lo[i] = b
            if r in ranges:
                hi[i] = b + abs(ranges[r])
        elif t == "L":
            hi[i] = b
            if r in ranges:
                lo[i] = b - abs(ranges[r])
    xl, xu = np.zeros(n), np.full(n, math.inf)
    for col, items in bounds.items():
        j = col_index[col]
        for kind, val in items:
            if kind == "FR":
                xl[j], xu[j] = -math.inf, math.inf
            elif kind == "MI":
                xl[j] = -math.inf
            elif kind == "FX":
                xl[j] = xu[j] = val
            elif kind == "LO":
                xl[j] = val
            elif kind == "UP":
                xu[j] = val
    return {"c": c, "A": a, "row_lb": lo, "row_ub": hi, "lb": xl, "ub": xu,
            "rows": rows, "cols": cols, "row_types": rtype, "ranges": ranges,
            "obj_row": obj_row}


def solve_parsed(model):
    """Solve a parsed model with scipy's linprog; returns (status, objective)."""
    from scipy.optimize import linprog

    a, lo, hi = model["A"], model["row_lb"], model["row_ub"]
    eq = np.isfinite(lo) & (lo == hi)
    ub_rows = ~eq & np.isfinite(hi)
    lb_rows = ~eq & np.isfinite(lo)
    a_ub = np.vstack([a[ub_rows], -a[lb_rows]])
    b_ub = np.concatenate([hi[ub_rows], -lo[lb_rows]])
    res = linprog(
        model["c"],
        A_ub=a_ub if len(b_ub) else None, b_ub=b_ub if len(b_ub) else None,
        A_eq=a[eq] if eq.any() else None, b_eq=lo[eq] if eq.any() else None,
        bounds=list(zip([None if math.isinf(v) else v for v in model["lb"]],
                        [None if math.isinf(v) else v for v in model["ub"]])),
        method="highs",
    )
    status = {0: "Optimal", 2: "Infeasible", 3: "Unbounded"}.get(res.status, "Other")
    return status, (float(res.fun) if res.status == 0 else math.nan)
