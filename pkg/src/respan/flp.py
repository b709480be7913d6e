"""Full capacity-expansion LP: build, extract, check.

Variables (``T`` steps, ``h`` hours per step, ``omega`` annualization weight)::

    K_m        site expansion            [0, kmax - k0]   omega (zeta + theta_f)
    p_m[t]     site feed-in, MW          [0, inf)         h theta_v
    K_g, p_g[t]  conventional units, as above
    K_s        storage expansion, MWh    [0, kmax - k0]
    pc_s[t], pd_s[t]  charge/discharge   [0, inf)         h theta_v each
    e_s[t]     state of charge, MWh      [0, inf)
    K_l        line expansion            [0, kmax - k0]
    f+_l[t], f-_l[t]  flow split         [0, inf)         h theta_v each
    u_n[t]     unserved demand, MW       [0, inf)         h theta_e

Rows, in this order::

    bal   (n,t)  sum p_m + sum p_g + sum (pd - pc) + inflow - outflow + u = lambda / h
    avail (m,t)  p_m - pi K_m <= pi k0
    capm  (m)    K_m <= kmax - k0
    disp  (g,t)  p_g - K_g <= k0
    capg  (g)    K_g <= kmax - k0
    chg   (s,t)  pc - phi K_s <= phi k0
    dis   (s,t)  pd - phi K_s <= phi k0
    soc   (s,t)  e - K_s <= k0
    rec   (s,t)  e[t] - eta_sd e[t-1] - h eta_c pc + h pd / eta_d = 0
    caps  (s)    K_s <= kmax - k0
    flow  (l,t)  f+ + f- - K_l <= k0
    capl  (l)    K_l <= kmax - k0

Line flow is ``f+ - f-`` in the from->to direction.  The absolute values of
the original formulation become the sums of the split parts.

Closed-form sizes with N buses, M sites, G units, S stores, L lines::

    variables   = M(T+1) + G(T+1) + S(3T+1) + L(2T+1) + N T
    constraints = N T + M(T+1) + G(T+1) + S(4T+1) + L(T+1)
    nonzeros    = T(M + G + 2S + 4L + N)               balance
                + M T + nnz(pi) + M                     sites
                + 2 G T + G                             units
                + 6 S T + S (4T - 1) + S                storage (4ST if cyclic)
                + 3 L T + L                             lines
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lp import INF, LpProblem, LpSolution
from .system import SolvedDesign, SystemInstance, validate_instance


class InstanceError(ValueError):
    def __init__(self, findings):
        self.findings = list(findings)
        head = "; ".join(str(f) for f in self.findings[:5])
        more = f" (+{len(self.findings) - 5} more)" if len(self.findings) > 5 else ""
        super().__init__(f"invalid instance: {head}{more}")


class NotOptimalError(RuntimeError):
    pass


@dataclass
class VarMap:
    """Variable handles per family, arrays in instance order (time on axis 1)."""

    site_ids: list[str]
    gen_ids: list[str]
    sto_ids: list[str]
    line_ids: list[str]
    bus_ids: list[str]
    K_site: np.ndarray
    p_site: np.ndarray
    K_gen: np.ndarray
    p_gen: np.ndarray
    K_sto: np.ndarray
    p_charge: np.ndarray
    p_discharge: np.ndarray
    soc: np.ndarray
    K_line: np.ndarray
    flow_pos: np.ndarray
    flow_neg: np.ndarray
    unserved: np.ndarray
    rows: dict[str, np.ndarray] = field(default_factory=dict)


def _names(prefix: str, ids: list[str], T: int | None = None) -> list[str]:
    if T is None:
        return [f"{prefix}:{i}" for i in ids]
    return [f"{prefix}:{i}:{t}" for i in ids for t in range(T)]


def _add_block(lp: LpProblem, prefix: str, keys: list[str], T: int | None,
               entries: list[tuple], lb, ub) -> np.ndarray:
    names = _names(prefix, keys, T)
    if entries:
        rows = np.concatenate([np.broadcast_to(r, np.shape(c)).ravel() for r, c, _ in entries])
        cols = np.concatenate([np.ravel(c) for _, c, _ in entries])
        vals = np.concatenate([np.broadcast_to(v, np.shape(c)).ravel() for _, c, v in entries])
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    return lp.add_constraints(rows, cols, vals, lb, ub, names)


def _require_valid(inst: SystemInstance) -> None:
    findings = validate_instance(inst)
    if findings:
        raise InstanceError(findings)


def build_flp(inst: SystemInstance, name: str = "FLP") -> tuple[LpProblem, VarMap]:
    """Build the full capacity-expansion LP for ``inst``.

    Raises:
        InstanceError: if ``inst`` fails validation.
    """
    _require_valid(inst)
    p = inst.params
    T, h, omega = inst.T, p.step_hours, p.omega
    lp = LpProblem(name)
    bus_ids = inst.bus_ids
    bpos = {b: i for i, b in enumerate(bus_ids)}
    sites, gens, stos, lines = inst.sites, inst.generators, inst.storages, inst.lines
    site_ids = [s.id for s in sites]
    gen_ids = [g.id for g in gens]
    sto_ids = [s.id for s in stos]
    line_ids = [l.id for l in lines]
    M, G, S, L, N = len(sites), len(gens), len(stos), len(lines), len(bus_ids)

    def arr(items, attr):
        return np.array([getattr(x, attr) for x in items], dtype=float)

    def capex(items):
        return omega * (arr(items, "zeta") + arr(items, "theta_f"))

    def per_step(costs, n):
        return np.repeat(h * costs, T) if n else np.zeros(0)

    K_site = lp.add_vars(_names("K_m", site_ids), 0.0,
                         arr(sites, "kappa_max") - arr(sites, "kappa0"), capex(sites))
    p_site = lp.add_vars(_names("p_m", site_ids, T), 0.0, INF,
                         per_step(arr(sites, "theta_v"), M)).reshape(M, T)
    K_gen = lp.add_vars(_names("K_g", gen_ids), 0.0,
                        np.array([g.expansion_limit for g in gens], dtype=float), capex(gens))
    p_gen = lp.add_vars(_names("p_g", gen_ids, T), 0.0, INF,
                        per_step(arr(gens, "theta_v"), G)).reshape(G, T)
    K_sto = lp.add_vars(_names("K_s", sto_ids), 0.0,
                        np.array([s.expansion_limit for s in stos], dtype=float), capex(stos))
    sto_var = per_step(arr(stos, "theta_v"), S)
    p_ch = lp.add_vars(_names("pc_s", sto_ids, T), 0.0, INF, sto_var).reshape(S, T)
    p_dis = lp.add_vars(_names("pd_s", sto_ids, T), 0.0, INF, sto_var).reshape(S, T)
    soc = lp.add_vars(_names("e_s", sto_ids, T), 0.0, INF, 0.0).reshape(S, T)
    K_line = lp.add_vars(_names("K_l", line_ids), 0.0,
                         arr(lines, "kappa_max") - arr(lines, "kappa0"), capex(lines))
    line_var = per_step(arr(lines, "theta_v"), L)
    f_pos = lp.add_vars(_names("fp_l", line_ids, T), 0.0, INF, line_var).reshape(L, T)
    f_neg = lp.add_vars(_names("fn_l", line_ids, T), 0.0, INF, line_var).reshape(L, T)
    unserved = lp.add_vars(_names("u_n", bus_ids, T), 0.0, INF,
                           np.full(N * T, h * p.theta_e)).reshape(N, T)

    vm = VarMap(site_ids, gen_ids, sto_ids, line_ids, bus_ids, K_site, p_site, K_gen, p_gen,
                K_sto, p_ch, p_dis, soc, K_line, f_pos, f_neg, unserved)
    t_idx = np.arange(T)

    def bal_rows(buses):
        return np.array([bpos[b] for b in buses], dtype=np.int64)[:, None] * T + t_idx[None, :]

    # energy balance
    lam = inst.demand_matrix() / h
    entries = [
        (bal_rows([s.bus for s in sites]), p_site, 1.0),
        (bal_rows([g.bus for g in gens]), p_gen, 1.0),
        (bal_rows([s.bus for s in stos]), p_dis, 1.0),
        (bal_rows([s.bus for s in stos]), p_ch, -1.0),
        (bal_rows([l.to_bus for l in lines]), f_pos, 1.0),
        (bal_rows([l.to_bus for l in lines]), f_neg, -1.0),
        (bal_rows([l.from_bus for l in lines]), f_pos, -1.0),
        (bal_rows([l.from_bus for l in lines]), f_neg, 1.0),
        (bal_rows(bus_ids), unserved, 1.0),
    ]
    vm.rows["bal"] = _add_block(lp, "bal", bus_ids, T, entries, lam.ravel(), lam.ravel())

    # renewable sites
    rows_mt = np.arange(M * T).reshape(M, T)
    pi = inst.cf_matrix()
    k0 = arr(sites, "kappa0")
    vm.rows["avail"] = _add_block(
        lp, "avail", site_ids, T,
        [(rows_mt, p_site, 1.0), (rows_mt, np.repeat(K_site[:, None], T, axis=1), -pi)],
        -INF, (pi * k0[:, None]).ravel(),
    )
    vm.rows["capm"] = _add_block(lp, "capm", site_ids, None, [(np.arange(M), K_site, 1.0)],
                                 -INF, arr(sites, "kappa_max") - k0)

    # conventional units
    rows_gt = np.arange(G * T).reshape(G, T)
    g0 = arr(gens, "kappa0")
    vm.rows["disp"] = _add_block(
        lp, "disp", gen_ids, T,
        [(rows_gt, p_gen, 1.0), (rows_gt, np.repeat(K_gen[:, None], T, axis=1), -1.0)],
        -INF, np.repeat(g0, T),
    )
    vm.rows["capg"] = _add_block(lp, "capg", gen_ids, None, [(np.arange(G), K_gen, 1.0)],
                                 -INF, np.array([g.expansion_limit for g in gens], dtype=float))

    # storage
    rows_st = np.arange(S * T).reshape(S, T)
    s0 = arr(stos, "kappa0")
    phi = arr(stos, "phi")
    K_sto_t = np.repeat(K_sto[:, None], T, axis=1)
    phi_t = np.repeat(phi[:, None], T, axis=1)
    for prefix, var in (("chg", p_ch), ("dis", p_dis)):
        vm.rows[prefix] = _add_block(
            lp, prefix, sto_ids, T, [(rows_st, var, 1.0), (rows_st, K_sto_t, -phi_t)],
            -INF, np.repeat(phi * s0, T),
        )
    vm.rows["soc"] = _add_block(
        lp, "soc", sto_ids, T, [(rows_st, soc, 1.0), (rows_st, K_sto_t, -1.0)],
        -INF, np.repeat(s0, T),
    )
    eta_sd = np.repeat(arr(stos, "eta_sd")[:, None], T, axis=1)
    eta_c = np.repeat(arr(stos, "eta_c")[:, None], T, axis=1)
    eta_d = np.repeat(arr(stos, "eta_d")[:, None], T, axis=1)
    rec = [(rows_st, soc, 1.0), (rows_st, p_ch, -h * eta_c), (rows_st, p_dis, h / eta_d)]
    if p.storage_cyclic:
        rec.append((rows_st, np.roll(soc, 1, axis=1), -eta_sd))
    elif T > 1:
        rec.append((rows_st[:, 1:], soc[:, :-1], -eta_sd[:, 1:]))
    vm.rows["rec"] = _add_block(lp, "rec", sto_ids, T, rec, 0.0, 0.0)
    vm.rows["caps"] = _add_block(lp, "caps", sto_ids, None, [(np.arange(S), K_sto, 1.0)],
                                 -INF, np.array([s.expansion_limit for s in stos], dtype=float))

    # transmission
    rows_lt = np.arange(L * T).reshape(L, T)
    l0 = arr(lines, "kappa0")
    vm.rows["flow"] = _add_block(
        lp, "flow", line_ids, T,
        [(rows_lt, f_pos, 1.0), (rows_lt, f_neg, 1.0),
         (rows_lt, np.repeat(K_line[:, None], T, axis=1), -1.0)],
        -INF, np.repeat(l0, T),
    )
    vm.rows["capl"] = _add_block(lp, "capl", line_ids, None, [(np.arange(L), K_line, 1.0)],
                                 -INF, arr(lines, "kappa_max") - l0)
    return lp, vm


def expected_size(inst: SystemInstance) -> dict[str, int]:
    """Closed-form variable/constraint/nonzero counts of :func:`build_flp`."""
    T = inst.T
    N, M, G = len(inst.buses), len(inst.sites), len(inst.generators)
    S, L = len(inst.storages), len(inst.lines)
    nnz_pi = int(np.count_nonzero(inst.cf_matrix()))
    if inst.params.storage_cyclic:
        if T == 1:
            rec = 3 * S + sum(1 for s in inst.storages if s.eta_sd != 1.0)
        else:
            rec = 4 * S * T
    else:
        rec = S * (4 * T - 1)
    return {
        "variables": M * (T + 1) + G * (T + 1) + S * (3 * T + 1) + L * (2 * T + 1) + N * T,
        "constraints": N * T + M * (T + 1) + G * (T + 1) + S * (4 * T + 1) + L * (T + 1),
        "nonzeros": (T * (M + G + 2 * S + 4 * L + N) + M * T + nnz_pi + M
                     + 2 * G * T + G + 6 * S * T + rec + S + 3 * L * T + L),
    }


def extract_design(inst: SystemInstance, vm: VarMap, sol: LpSolution) -> SolvedDesign:
    """Map an optimal LP solution back to domain-keyed capacities and trajectories.

    Raises:
        NotOptimalError: if ``sol`` is not optimal.
    """
    if not sol.optimal:
        raise NotOptimalError(f"cannot extract a design from a {sol.status.value} solution")
    x = sol.x

    def caps(ids, handles):
        return {i: float(x[hd]) for i, hd in zip(ids, handles)}

    def series(ids, handles):
        return {i: x[hd].copy() for i, hd in zip(ids, handles)}

    return SolvedDesign(
        objective=float(sol.objective),
        K_site=caps(vm.site_ids, vm.K_site),
        K_gen=caps(vm.gen_ids, vm.K_gen),
        K_sto=caps(vm.sto_ids, vm.K_sto),
        K_line=caps(vm.line_ids, vm.K_line),
        p_site=series(vm.site_ids, vm.p_site),
        p_gen=series(vm.gen_ids, vm.p_gen),
        p_charge=series(vm.sto_ids, vm.p_charge),
        p_discharge=series(vm.sto_ids, vm.p_discharge),
        soc=series(vm.sto_ids, vm.soc),
        flow={i: x[a] - x[b] for i, a, b in zip(vm.line_ids, vm.flow_pos, vm.flow_neg)},
        unserved=series(vm.bus_ids, vm.unserved),
        stats={"iterations": sol.iterations, "wall_time": sol.wall_time, "solver": sol.solver},
    )


def check_design(inst: SystemInstance, design: SolvedDesign) -> dict[str, float]:
    """Largest residual per constraint family (MW, or MWh for storage energy).

    ``balance`` and ``soc_recursion`` are absolute equality residuals; the
    other entries measure how far an inequality or bound is exceeded.
    """
    p = inst.params
    T, h = inst.T, p.step_hours
    bpos = {b: i for i, b in enumerate(inst.bus_ids)}
    zero = np.zeros(T)
    lhs = np.zeros((len(inst.buses), T))
    res: dict[str, float] = {}

    def worst(name, arr):
        res[name] = max(res.get(name, 0.0), float(np.max(arr, initial=0.0)))

    for s in inst.sites:
        ps, K = design.p_site[s.id], design.K_site[s.id]
        lhs[bpos[s.bus]] += ps
        worst("availability", ps - s.cf * (s.kappa0 + K))
        worst("site_cap", [s.kappa0 + K - s.kappa_max, -K])
        worst("nonnegativity", -ps)
    for g in inst.generators:
        pg, K = design.p_gen[g.id], design.K_gen[g.id]
        lhs[bpos[g.bus]] += pg
        worst("gen_dispatch", pg - (g.kappa0 + K))
        worst("gen_cap", [K - g.expansion_limit, -K])
        worst("nonnegativity", -pg)
    for s in inst.storages:
        pc, pd, e, K = design.p_charge[s.id], design.p_discharge[s.id], design.soc[s.id], design.K_sto[s.id]
        lhs[bpos[s.bus]] += pd - pc
        worst("sto_power", np.maximum(pc, pd) - s.phi * (s.kappa0 + K))
        worst("sto_energy", e - (s.kappa0 + K))
        worst("sto_cap", [K - s.expansion_limit, -K])
        worst("nonnegativity", np.concatenate([-pc, -pd, -e]))
        prev = np.roll(e, 1)
        if not p.storage_cyclic:
            prev[0] = 0.0
        worst("soc_recursion", np.abs(e - s.eta_sd * prev - h * s.eta_c * pc + h * pd / s.eta_d))
    for l in inst.lines:
        f, K = design.flow.get(l.id, zero), design.K_line[l.id]
        lhs[bpos[l.to_bus]] += f
        lhs[bpos[l.from_bus]] -= f
        worst("line_flow", np.abs(f) - (l.kappa0 + K))
        worst("line_cap", [l.kappa0 + K - l.kappa_max, -K])
    for b in inst.bus_ids:
        lhs[bpos[b]] += design.unserved[b]
        worst("nonnegativity", -design.unserved[b])
    worst("balance", np.abs(lhs - inst.demand_matrix() / h).ravel())
    for key in ("availability", "site_cap", "gen_dispatch", "gen_cap", "sto_power",
                "sto_energy", "sto_cap", "soc_recursion", "line_flow", "line_cap",
                "nonnegativity"):
        res.setdefault(key, 0.0)
    return res
