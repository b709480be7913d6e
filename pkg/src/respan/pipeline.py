"""Two-stage screening-then-planning runs and the full-model benchmark run."""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any

from .flp import VarMap, build_flp, check_design, extract_design, _require_valid
from .lp import LpProblem, LpSolution, solve
from .screening import (
    ScreeningParams,
    ScreeningResult,
    build_siting_lp,
    estimate_params,
    extract_retained,
)
from .system import SolvedDesign, SystemInstance

logger = logging.getLogger(__name__)

FLP, SITE, RLP = "FLP", "SITE", "RLP"


class SolveFailed(RuntimeError):
    def __init__(self, model: str, sol: LpSolution):
        self.model = model
        self.solution = sol
        super().__init__(f"{model} solve ended with status {sol.status.value}")


@dataclass
class RunRecord:
    model: str
    variables: int
    constraints: int
    nonzeros: int
    peak_memory: int  # bytes
    memory_estimated: bool
    solve_time: float  # s
    build_time: float  # s
    status: str
    objective: float
    solver: str
    iterations: int = 0
    design: SolvedDesign | None = None
    screening: ScreeningResult | None = None
    params: ScreeningParams | None = None
    params_source: str | None = None  # "estimated" or "override"
    residuals: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out = {
            "model": self.model,
            "variables": self.variables,
            "constraints": self.constraints,
            "nonzeros": self.nonzeros,
            "peak_memory_bytes": self.peak_memory,
            "memory_estimated": self.memory_estimated,
            "solve_time_s": self.solve_time,
            "build_time_s": self.build_time,
            "status": self.status,
            "objective": self.objective,
            "solver": self.solver,
            "iterations": self.iterations,
        }
        if self.residuals:
            out["residuals"] = dict(self.residuals)
        if self.params is not None:
            out["params"] = self.params.to_dict()
            out["params_source"] = self.params_source
        if self.screening is not None:
            out["retained"] = {b: sorted(v) for b, v in self.screening.retained.items()}
            out["siting_capacity"] = dict(self.screening.capacity)
        if self.design is not None:
            d = self.design
            out["capacity"] = {
                "site": dict(d.K_site), "generator": dict(d.K_gen),
                "storage": dict(d.K_sto), "line": dict(d.K_line),
            }
        return out


class PeakMemory:
    """Resident-set high-water mark above the entry baseline, sampled in a thread.

    Child processes (external solvers) are included.  Falls back to an
    estimate (``3 x`` sparse matrix bytes) when RSS is unavailable or the
    solve is too short to register an increase.
    """

    def __init__(self, lp: LpProblem, interval: float = 0.002):
        self.lp = lp
        self.interval = interval
        self.peak = 0
        self.estimated = False
        self._stop = threading.Event()
        self._proc = None

    def _rss(self) -> int:
        total = self._proc.memory_info().rss
        for child in self._proc.children(recursive=True):
            try:
                total += child.memory_info().rss
            except Exception:  # child exited between listing and reading
                pass
        return total

    def _sample(self) -> None:
        while not self._stop.is_set():
            try:
                self.peak = max(self.peak, self._rss() - self._base)
            except Exception:
                pass
            self._stop.wait(self.interval)

    def __enter__(self):
        try:
            import psutil

            self._proc = psutil.Process()
            self._base = self._rss()
        except Exception:
            self._proc = None
            return self
        self._thread = threading.Thread(target=self._sample, daemon=True)
        self._thread.start()
        return self

    def __exit__(self, *exc):
        if self._proc is not None:
            self._stop.set()
            self._thread.join()
            try:
                self.peak = max(self.peak, self._rss() - self._base)
            except Exception:
                pass
        if self.peak <= 0:
            a = self.lp.matrix()
            self.peak = 3 * int(a.data.nbytes + a.indices.nbytes + a.indptr.nbytes)
            self.estimated = True
        return False


def _solve_measured(model: str, lp: LpProblem, solver: str) -> tuple[LpSolution, PeakMemory]:
    with PeakMemory(lp) as mem:
        sol = solve(lp, solver)
    if not sol.optimal:
        raise SolveFailed(model, sol)
    logger.info("%s solved by %s: obj=%.6g in %.3fs", model, solver, sol.objective, sol.wall_time)
    return sol, mem


def _record(model, lp, sol, mem, build_time, solver, **extra) -> RunRecord:
    size = lp.size()
    return RunRecord(
        model=model, variables=size["variables"], constraints=size["constraints"],
        nonzeros=size["nonzeros"], peak_memory=mem.peak, memory_estimated=mem.estimated,
        solve_time=sol.wall_time, build_time=build_time, status=sol.status.value,
        objective=sol.objective, solver=solver, iterations=sol.iterations, **extra,
    )


def build_rlp(inst: SystemInstance, screening: ScreeningResult) -> tuple[LpProblem, VarMap]:
    """Full model rebuilt on the retained sites only; all other assets unchanged."""
    known = set(inst.site_ids)
    keep = set(screening.retained_ids())
    if not keep <= known:
        raise ValueError(f"retained sites not in instance: {sorted(keep - known)[:5]}")
    return build_flp(inst.with_sites(keep), name="RLP")


def _run_cep(model: str, inst: SystemInstance, solver: str, build) -> RunRecord:
    t0 = time.perf_counter()
    lp, vm = build()
    build_time = time.perf_counter() - t0
    sol, mem = _solve_measured(model, lp, solver)
    design = extract_design(inst, vm, sol)
    return _record(model, lp, sol, mem, build_time, solver, design=design,
                   residuals=check_design(inst, design))


def run_flp(inst: SystemInstance, solver: str = "highs") -> RunRecord:
    """Build, solve and extract the full model.

    Raises:
        InstanceError: before any solve when ``inst`` is invalid.
        SolveFailed: when the solver does not reach optimality.
    """
    _require_valid(inst)
    return _run_cep(FLP, inst, solver, lambda: build_flp(inst))


def run_site(inst: SystemInstance, params: ScreeningParams, solver: str = "highs",
             params_source: str = "override") -> RunRecord:
    t0 = time.perf_counter()
    lp, vm = build_siting_lp(inst, params)
    build_time = time.perf_counter() - t0
    sol, mem = _solve_measured(SITE, lp, solver)
    result = extract_retained(inst, vm, sol, params.selection_threshold)
    return _record(SITE, lp, sol, mem, build_time, solver, screening=result,
                   params=params, params_source=params_source)


def run_sm(
    inst: SystemInstance,
    params: ScreeningParams | None = None,
    solver: str = "highs",
    **estimate_kw,
) -> tuple[RunRecord, RunRecord]:
    """Screen with the siting LP, then solve the reduced model.

    ``params`` overrides estimation entirely; otherwise they are estimated
    from the instance (``estimate_kw`` is passed to :func:`estimate_params`).
    The two solves run one after the other.
    """
    _require_valid(inst)
    if params is None:
        params = estimate_params(inst, **estimate_kw)
        source = "estimated"
    else:
        source = "override"
    site_rec = run_site(inst, params, solver, source)
    reduced = inst.with_sites(site_rec.screening.retained_ids())
    rlp_rec = _run_cep(RLP, reduced, solver, lambda: build_rlp(inst, site_rec.screening))
    return site_rec, rlp_rec


def sm_runtime(site: RunRecord, rlp: RunRecord) -> float:
    return site.solve_time + rlp.solve_time
