"""Site screening: parameter estimation, screening LP and retained-site sets.

The screening LP keeps only site capacities, site feed-in and unserved
demand.  Storage, conventional units and transmission are replaced by one
energy target per bus and time slice::

    sum_{t in slice} (sum_m p_m[t] + u_n[t]) >= xi_n * sum_{t in slice} lambda_n[t] / h

together with the availability and capacity rows of the full model.  Sites
whose total capacity (legacy plus new) reaches the selection threshold are
retained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flp import InstanceError, NotOptimalError, _add_block, _names, _require_valid
from .lp import INF, LpProblem, LpSolution
from .system import SystemInstance


class EstimationError(ValueError):
    pass


@dataclass
class ScreeningParams:
    delta_tau: int
    xi: dict[str, float]
    selection_threshold: float = 1.0

    def check(self, inst: SystemInstance) -> None:
        if not (isinstance(self.delta_tau, (int, np.integer)) and 1 <= self.delta_tau <= inst.T):
            raise ValueError(f"delta_tau must be an integer in [1, {inst.T}], got {self.delta_tau!r}")
        if set(self.xi) != set(inst.bus_ids):
            missing = sorted(set(inst.bus_ids) - set(self.xi))
            extra = sorted(set(self.xi) - set(inst.bus_ids))
            raise ValueError(f"xi must cover every bus (missing {missing}, unknown {extra})")
        for b, v in self.xi.items():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"xi[{b}] = {v} outside [0, 1]")
        if not self.selection_threshold > 0:
            raise ValueError("selection_threshold must be > 0")

    def to_dict(self) -> dict:
        return {
            "delta_tau": int(self.delta_tau),
            "xi": {k: float(v) for k, v in self.xi.items()},
            "selection_threshold": float(self.selection_threshold),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScreeningParams":
        return cls(
            delta_tau=int(data["delta_tau"]),
            xi={str(k): float(v) for k, v in data["xi"].items()},
            selection_threshold=float(data.get("selection_threshold", 1.0)),
        )


@dataclass
class ScreeningResult:
    retained: dict[str, frozenset[str]]
    capacity: dict[str, float]
    objective: float
    stats: dict = field(default_factory=dict)

    def retained_ids(self) -> list[str]:
        return sorted(set().union(*self.retained.values())) if self.retained else []


# -- parameter estimation ------------------------------------------------------

def dominant_period(series) -> int:
    """Period (in steps) of the strongest non-constant DFT component.

    Ties go to the lowest frequency.  The result is rounded to the nearest
    integer and clamped to ``[1, len(series)]``.

    Raises:
        EstimationError: for series shorter than 4 steps or without any
            non-constant component.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 4:
        raise EstimationError(f"need at least 4 steps to estimate a period, got {n}")
    amp = np.abs(np.fft.rfft(x - x.mean()))[1:]
    scale = n * max(1.0, float(np.abs(x).max()))
    if len(amp) == 0 or amp.max() <= 1e-9 * scale:
        raise EstimationError("series has no non-constant component; set delta_tau explicitly")
    k = int(np.argmax(amp)) + 1
    return int(min(max(math.floor(n / k + 0.5), 1), n))


def aggregate_cf(inst: SystemInstance) -> np.ndarray:
    """Capacity-factor series averaged over all sites, weighted by potential."""
    cf = inst.cf_matrix()
    if cf.shape[0] == 0:
        raise EstimationError("instance has no candidate sites")
    w = np.array([s.kappa_max for s in inst.sites], dtype=float)
    if not np.isfinite(w).all() or w.sum() <= 0:
        w = np.ones(len(w))
    return w @ cf / w.sum()


def estimate_delta_tau(inst: SystemInstance) -> int:
    return dominant_period(aggregate_cf(inst))


def estimate_xi(inst: SystemInstance, delta_tau: int, peak_steps: int = 1) -> dict[str, float]:
    """Per-bus feed-in targets from residual demand at peak load.

    Quantities are energies over one slice of ``delta_tau`` steps:

    * residual ``R`` = (peak demand - legacy unit capacity * h) * delta_tau
    * potential ``P`` = renewable potential at the peak step(s) * delta_tau
    * transmission ``X`` = sum of incident line limits * delta_tau * h

    A bus whose potential covers its demand on at least half of the steps is
    an exporter and uses ``A = R + X``; otherwise ``A = R - X``.  The target
    is ``clip(P / A, 0, 1)``; a non-positive ``A`` gives 1 for exporters and 0
    for importers.  With ``peak_steps > 1`` the top-k demand steps are averaged.
    """
    T = inst.T
    if not 1 <= delta_tau <= T:
        raise ValueError(f"delta_tau must be in [1, {T}]")
    h = inst.params.step_hours
    lam = inst.demand_matrix()
    cf = inst.cf_matrix()
    kmax = np.array([s.kappa_max for s in inst.sites], dtype=float)
    site_bus = np.array([s.bus for s in inst.sites], dtype=object)
    half = math.ceil(T / 2)
    k = max(1, min(int(peak_steps), T))
    xi: dict[str, float] = {}
    for i, b in enumerate(inst.bus_ids):
        mask = site_bus == b
        if not mask.any():
            xi[b] = 0.0
            continue
        potential = kmax[mask] @ cf[mask] * h
        peaks = np.argsort(-lam[i], kind="stable")[:k]
        legacy = sum(g.kappa0 for g in inst.generators if g.bus == b)
        R = (lam[i, peaks].mean() - legacy * h) * delta_tau
        P = potential[peaks].mean() * delta_tau
        if P <= 0:
            xi[b] = 0.0
            continue
        X = sum(l.kappa_max for l in inst.lines if b in (l.from_bus, l.to_bus)) * delta_tau * h
        exporter = int(np.count_nonzero(potential >= lam[i])) >= half
        A = R + X if exporter else R - X
        if A <= 0:
            xi[b] = 1.0 if exporter else 0.0
        else:
            xi[b] = float(min(max(P / A, 0.0), 1.0))
    return xi


def estimate_params(
    inst: SystemInstance,
    delta_tau: int | None = None,
    selection_threshold: float = 1.0,
    peak_steps: int = 1,
) -> ScreeningParams:
    if delta_tau is None:
        delta_tau = estimate_delta_tau(inst)
    return ScreeningParams(delta_tau, estimate_xi(inst, delta_tau, peak_steps), selection_threshold)


# -- screening LP ---------------------------------------------------------------

def slices(T: int, delta_tau: int) -> list[range]:
    """Consecutive slices of ``delta_tau`` steps; the last one holds the remainder."""
    if not 1 <= delta_tau <= T:
        raise ValueError(f"delta_tau must be in [1, {T}]")
    return [range(s, min(s + delta_tau, T)) for s in range(0, T, delta_tau)]


@dataclass
class SiteVarMap:
    site_ids: list[str]
    bus_ids: list[str]
    K_site: np.ndarray
    p_site: np.ndarray
    unserved: np.ndarray
    slices: list[range]
    rows: dict[str, np.ndarray] = field(default_factory=dict)


def build_siting_lp(inst: SystemInstance, params: ScreeningParams) -> tuple[LpProblem, SiteVarMap]:
    """Build the screening LP.

    Raises:
        InstanceError: if ``inst`` fails validation.
        ValueError: if ``params`` do not fit the instance.
    """
    _require_valid(inst)
    params.check(inst)
    p = inst.params
    T, h, omega = inst.T, p.step_hours, p.omega
    sites = inst.sites
    site_ids, bus_ids = [s.id for s in sites], inst.bus_ids
    M, N = len(sites), len(bus_ids)
    bpos = {b: i for i, b in enumerate(bus_ids)}
    k0 = np.array([s.kappa0 for s in sites], dtype=float)
    kmax = np.array([s.kappa_max for s in sites], dtype=float)

    lp = LpProblem("SITE")
    K = lp.add_vars(_names("K_m", site_ids), 0.0, kmax - k0,
                    omega * np.array([s.zeta + s.theta_f for s in sites], dtype=float))
    p_site = lp.add_vars(_names("p_m", site_ids, T), 0.0, INF,
                         np.repeat(h * np.array([s.theta_v for s in sites], dtype=float), T)
                         ).reshape(M, T)
    u = lp.add_vars(_names("u_n", bus_ids, T), 0.0, INF, h * p.theta_e).reshape(N, T)

    parts = slices(T, params.delta_tau)
    n_sl = len(parts)
    slice_of = np.empty(T, dtype=np.int64)
    for j, r in enumerate(parts):
        slice_of[r.start:r.stop] = j
    lam = inst.demand_matrix() / h
    xi = np.array([params.xi[b] for b in bus_ids], dtype=float)
    rhs = np.array([[xi[i] * lam[i, r.start:r.stop].sum() for r in parts] for i in range(N)])
    site_bus = np.array([bpos[s.bus] for s in sites], dtype=np.int64)
    entries = [
        (site_bus[:, None] * n_sl + slice_of[None, :], p_site, 1.0),
        (np.arange(N)[:, None] * n_sl + slice_of[None, :], u, 1.0),
    ]
    vm = SiteVarMap(site_ids, bus_ids, K, p_site, u, parts)
    vm.rows["target"] = _add_block(lp, "tgt", bus_ids, n_sl, entries, rhs.ravel(), INF)

    rows_mt = np.arange(M * T).reshape(M, T)
    pi = inst.cf_matrix()
    vm.rows["avail"] = _add_block(
        lp, "avail", site_ids, T,
        [(rows_mt, p_site, 1.0), (rows_mt, np.repeat(K[:, None], T, axis=1), -pi)],
        -INF, (pi * k0[:, None]).ravel(),
    )
    vm.rows["capm"] = _add_block(lp, "capm", site_ids, None, [(np.arange(M), K, 1.0)],
                                 -INF, kmax - k0)
    return lp, vm


def extract_retained(
    inst: SystemInstance, vm: SiteVarMap, sol: LpSolution, threshold: float = 1.0
) -> ScreeningResult:
    """Sites with ``kappa0 + K >= threshold`` per bus.

    Raises:
        NotOptimalError: if ``sol`` is not optimal.
    """
    if not sol.optimal:
        raise NotOptimalError(f"cannot screen from a {sol.status.value} solution")
    cap = {i: float(sol.x[hd]) for i, hd in zip(vm.site_ids, vm.K_site)}
    retained: dict[str, set[str]] = {b: set() for b in inst.bus_ids}
    for s in inst.sites:
        if s.kappa0 + cap[s.id] >= threshold:
            retained[s.bus].add(s.id)
    return ScreeningResult(
        retained={b: frozenset(v) for b, v in retained.items()},
        capacity=cap,
        objective=float(sol.objective),
        stats={"iterations": sol.iterations, "wall_time": sol.wall_time, "solver": sol.solver},
    )


__all__ = [
    "EstimationError",
    "InstanceError",
    "ScreeningParams",
    "ScreeningResult",
    "SiteVarMap",
    "aggregate_cf",
    "build_siting_lp",
    "dominant_period",
    "estimate_delta_tau",
    "estimate_params",
    "estimate_xi",
    "extract_retained",
    "slices",
]
