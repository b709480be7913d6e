"""Power system instance and solved-design types.

Units: MW for power and capacity, MWh for energy and storage capacity, hours
for time, and one abstract currency.  Investment and fixed costs are
annualized per MW (per MWh for storage energy); variable costs are per MWh.
Dispatch variables are average power over a step, so energy per step is
``p * step_hours``; demand is given as energy per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

AC, DC = "AC", "DC"


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Bus:
    id: str
    name: str = ""


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    kind: str = AC
    kappa0: float = 0.0
    kappa_max: float = 0.0
    length: float = 0.0  # km
    zeta: float = 0.0
    theta_f: float = 0.0
    theta_v: float = 0.0


@dataclass(frozen=True, eq=False)
class CandidateSite:
    id: str
    bus: str
    tech: str
    lat: float
    lon: float
    kappa0: float
    kappa_max: float
    zeta: float
    theta_f: float
    theta_v: float
    cf: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cf", _frozen_array(self.cf))

    def __eq__(self, other):
        if not isinstance(other, CandidateSite):
            return NotImplemented
        return all(
            getattr(self, f) == getattr(other, f)
            for f in ("id", "bus", "tech", "lat", "lon", "kappa0", "kappa_max",
                      "zeta", "theta_f", "theta_v")
        ) and np.array_equal(self.cf, other.cf)

    __hash__ = None


@dataclass(frozen=True)
class ConventionalGen:
    id: str
    bus: str
    tech: str
    kappa0: float
    kappa_max: float
    zeta: float = 0.0
    theta_f: float = 0.0
    theta_v: float = 0.0
    sizable: bool = True

    @property
    def expansion_limit(self) -> float:
        return self.kappa_max - self.kappa0 if self.sizable else 0.0


@dataclass(frozen=True)
class StorageUnit:
    """Storage with capacity in MWh; ``phi`` converts it to a power rating."""

    id: str
    bus: str
    tech: str
    kappa0: float
    kappa_max: float
    phi: float
    eta_sd: float = 1.0
    eta_c: float = 1.0
    eta_d: float = 1.0
    zeta: float = 0.0
    theta_f: float = 0.0
    theta_v: float = 0.0
    sizable: bool = True

    @property
    def expansion_limit(self) -> float:
        return self.kappa_max - self.kappa0 if self.sizable else 0.0


@dataclass(frozen=True, eq=False)
class DemandSeries:
    bus: str
    values: np.ndarray  # MWh per step

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __eq__(self, other):
        if not isinstance(other, DemandSeries):
            return NotImplemented
        return self.bus == other.bus and np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True)
class GlobalParams:
    horizon_len: int
    step_hours: float = 1.0
    omega: float = 1.0
    theta_e: float = 1e4
    # storage state before the first step: 0, or wrap around to the last step
    storage_cyclic: bool = False


@dataclass(frozen=True)
class SystemInstance:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    sites: tuple[CandidateSite, ...]
    generators: tuple[ConventionalGen, ...]
    storages: tuple[StorageUnit, ...]
    demands: tuple[DemandSeries, ...]
    params: GlobalParams

    def __post_init__(self):
        for f in ("buses", "lines", "sites", "generators", "storages", "demands"):
            object.__setattr__(self, f, tuple(getattr(self, f)))

    @property
    def T(self) -> int:
        return self.params.horizon_len

    @property
    def bus_ids(self) -> list[str]:
        return [b.id for b in self.buses]

    @property
    def site_ids(self) -> list[str]:
        return [s.id for s in self.sites]

    def sites_at(self, bus: str) -> list[CandidateSite]:
        return [s for s in self.sites if s.bus == bus]

    def site(self, site_id: str) -> CandidateSite:
        for s in self.sites:
            if s.id == site_id:
                return s
        raise KeyError(site_id)

    def techs(self) -> list[str]:
        return sorted({s.tech for s in self.sites})

    def demand_matrix(self) -> np.ndarray:
        """Demand as (bus, step) in bus order; buses without a series get zeros."""
        out = np.zeros((len(self.buses), self.T))
        pos = {b: i for i, b in enumerate(self.bus_ids)}
        for d in self.demands:
            out[pos[d.bus]] += d.values
        return out

    def cf_matrix(self) -> np.ndarray:
        if not self.sites:
            return np.zeros((0, self.T))
        return np.vstack([s.cf for s in self.sites])

    def with_sites(self, keep: Iterable[str]) -> "SystemInstance":
        """Copy of the instance restricted to the given site ids (order preserved)."""
        keep = set(keep)
        return replace(self, sites=tuple(s for s in self.sites if s.id in keep))


@dataclass
class SolvedDesign:
    objective: float
    K_site: dict[str, float]
    K_gen: dict[str, float]
    K_sto: dict[str, float]
    K_line: dict[str, float]
    p_site: dict[str, np.ndarray]
    p_gen: dict[str, np.ndarray]
    p_charge: dict[str, np.ndarray]
    p_discharge: dict[str, np.ndarray]
    soc: dict[str, np.ndarray]
    flow: dict[str, np.ndarray]
    unserved: dict[str, np.ndarray]
    stats: dict = field(default_factory=dict)

    def installed_site(self, inst: SystemInstance) -> dict[str, float]:
        """Total site capacity (legacy plus new), keyed by site id."""
        return {s.id: s.kappa0 + self.K_site.get(s.id, 0.0) for s in inst.sites}

    @classmethod
    def zeros(cls, inst: SystemInstance) -> "SolvedDesign":
        T = inst.T
        z = lambda items: {x.id: np.zeros(T) for x in items}  # noqa: E731
        return cls(
            objective=0.0,
            K_site={s.id: 0.0 for s in inst.sites},
            K_gen={g.id: 0.0 for g in inst.generators},
            K_sto={s.id: 0.0 for s in inst.storages},
            K_line={l.id: 0.0 for l in inst.lines},
            p_site=z(inst.sites), p_gen=z(inst.generators),
            p_charge=z(inst.storages), p_discharge=z(inst.storages), soc=z(inst.storages),
            flow=z(inst.lines),
            unserved={b: np.zeros(T) for b in inst.bus_ids},
        )


@dataclass(frozen=True)
class Finding:
    entity: str
    field: str
    rule: str

    def __str__(self) -> str:
        return f"{self.entity}.{self.field}: {self.rule}"


def _check_capacity(out: list, entity: str, kappa0: float, kappa_max: float) -> None:
    if not (kappa0 >= 0):
        out.append(Finding(entity, "kappa0", "kappa0 must be >= 0"))
    if not (kappa_max >= kappa0):
        out.append(Finding(entity, "kappa_max", "kappa_max must be >= kappa0"))


def _check_id(out: list, entity: str, ident: str) -> None:
    if not ident or any(c.isspace() for c in ident):
        out.append(Finding(entity, "id", "id must be non-empty without whitespace"))


def validate_instance(inst: SystemInstance) -> list[Finding]:
    """Return every broken invariant of ``inst`` (empty when well formed)."""
    out: list[Finding] = []
    p = inst.params
    T = p.horizon_len
    if not (isinstance(T, (int, np.integer)) and T >= 1):
        out.append(Finding("params", "horizon_len", "horizon_len must be an integer >= 1"))
    if not (p.step_hours > 0):
        out.append(Finding("params", "step_hours", "step_hours must be > 0"))
    if not (p.omega > 0):
        out.append(Finding("params", "omega", "omega must be > 0"))
    if not (p.theta_e > 0):
        out.append(Finding("params", "theta_e", "theta_e must be > 0"))

    buses = set()
    for b in inst.buses:
        _check_id(out, f"bus {b.id}", b.id)
        if b.id in buses:
            out.append(Finding(f"bus {b.id}", "id", "duplicate bus id"))
        buses.add(b.id)

    def bus_ref(entity: str, bus: str, fname: str = "bus") -> None:
        if bus not in buses:
            out.append(Finding(entity, fname, f"unknown bus {bus!r}"))

    seen: dict[str, set] = {}

    def unique(kind: str, ident: str) -> None:
        if ident in seen.setdefault(kind, set()):
            out.append(Finding(f"{kind} {ident}", "id", f"duplicate {kind} id"))
        seen[kind].add(ident)

    for l in inst.lines:
        ent = f"line {l.id}"
        _check_id(out, ent, l.id)
        unique("line", l.id)
        bus_ref(ent, l.from_bus, "from_bus")
        bus_ref(ent, l.to_bus, "to_bus")
        if l.from_bus == l.to_bus:
            out.append(Finding(ent, "to_bus", "from_bus must differ from to_bus"))
        if l.kind not in (AC, DC):
            out.append(Finding(ent, "kind", "kind must be AC or DC"))
        _check_capacity(out, ent, l.kappa0, l.kappa_max)

    for s in inst.sites:
        ent = f"site {s.id}"
        _check_id(out, ent, s.id)
        unique("site", s.id)
        bus_ref(ent, s.bus)
        if not s.tech:
            out.append(Finding(ent, "tech", "exactly one technology required"))
        _check_capacity(out, ent, s.kappa0, s.kappa_max)
        if len(s.cf) != T:
            out.append(Finding(ent, "cf", f"length mismatch: {len(s.cf)} != horizon {T}"))
        bad = np.flatnonzero(~((s.cf >= 0.0) & (s.cf <= 1.0)))
        if len(bad):
            out.append(Finding(ent, "cf", f"cf out of [0,1] at t={int(bad[0])}"))
        if not (-90 <= s.lat <= 90 and -180 <= s.lon <= 360):
            out.append(Finding(ent, "lat/lon", "coordinates out of range"))

    for g in inst.generators:
        ent = f"generator {g.id}"
        _check_id(out, ent, g.id)
        unique("generator", g.id)
        bus_ref(ent, g.bus)
        _check_capacity(out, ent, g.kappa0, g.kappa_max)

    for s in inst.storages:
        ent = f"storage {s.id}"
        _check_id(out, ent, s.id)
        unique("storage", s.id)
        bus_ref(ent, s.bus)
        _check_capacity(out, ent, s.kappa0, s.kappa_max)
        if not (s.phi > 0):
            out.append(Finding(ent, "phi", "phi must be > 0"))
        for fname in ("eta_sd", "eta_c", "eta_d"):
            v = getattr(s, fname)
            if not (0 < v <= 1):
                out.append(Finding(ent, fname, f"{fname} must be in (0, 1]"))

    for d in inst.demands:
        ent = f"demand {d.bus}"
        bus_ref(ent, d.bus)
        unique("demand", d.bus)
        if len(d.values) != T:
            out.append(Finding(ent, "lambda", f"length mismatch: {len(d.values)} != horizon {T}"))
        if not (d.values >= 0).all():
            out.append(Finding(ent, "lambda", "demand must be >= 0"))

    for x in (*inst.sites, *inst.generators, *inst.storages, *inst.lines):
        for fname in ("zeta", "theta_f", "theta_v"):
            if not math.isfinite(getattr(x, fname)):
                out.append(Finding(f"{type(x).__name__} {x.id}", fname, "cost must be finite"))
    return out


class DimensionError(ValueError):
    pass


def _check_dims(design: SolvedDesign, inst: SystemInstance) -> None:
    T = inst.T
    groups = (
        (design.p_site, inst.site_ids, "p_site"),
        (design.p_gen, [g.id for g in inst.generators], "p_gen"),
        (design.p_charge, [s.id for s in inst.storages], "p_charge"),
        (design.p_discharge, [s.id for s in inst.storages], "p_discharge"),
        (design.soc, [s.id for s in inst.storages], "soc"),
        (design.flow, [l.id for l in inst.lines], "flow"),
        (design.unserved, inst.bus_ids, "unserved"),
    )
    for series, ids, label in groups:
        if set(series) != set(ids):
            raise DimensionError(f"{label}: asset ids do not match the instance")
        for k, v in series.items():
            if len(v) != T:
                raise DimensionError(f"{label}[{k}]: length {len(v)} != horizon {T}")
    for caps, items, label in (
        (design.K_site, inst.sites, "K_site"), (design.K_gen, inst.generators, "K_gen"),
        (design.K_sto, inst.storages, "K_sto"), (design.K_line, inst.lines, "K_line"),
    ):
        if set(caps) != {x.id for x in items}:
            raise DimensionError(f"{label}: asset ids do not match the instance")


def total_cost(design: SolvedDesign, inst: SystemInstance) -> float:
    """Recompute the planning objective from primal values.

    Line and storage operating costs use ``|flow|`` and ``charge + discharge``.

    Raises:
        DimensionError: if the design does not match the instance.
    """
    _check_dims(design, inst)
    p = inst.params
    h = p.step_hours
    invest = 0.0
    for items, caps in ((inst.sites, design.K_site), (inst.generators, design.K_gen),
                        (inst.storages, design.K_sto), (inst.lines, design.K_line)):
        invest += sum((x.zeta + x.theta_f) * caps[x.id] for x in items)
    energy = 0.0
    for l in inst.lines:
        energy += l.theta_v * np.abs(design.flow[l.id]).sum()
    for s in inst.sites:
        energy += s.theta_v * design.p_site[s.id].sum()
    for g in inst.generators:
        energy += g.theta_v * design.p_gen[g.id].sum()
    for s in inst.storages:
        energy += s.theta_v * (design.p_charge[s.id] + design.p_discharge[s.id]).sum()
    for b in inst.bus_ids:
        energy += p.theta_e * design.unserved[b].sum()
    return float(p.omega * invest + h * energy)
