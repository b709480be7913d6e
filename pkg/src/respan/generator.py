"""Seeded synthetic instances standing in for real weather and network data.

Archetypes
----------
solar (tech starting with ``PV``)
    clipped sinusoid with a 24-step period, zero from 18:00 to 06:00 (step 0
    is midnight), scaled by a site quality and a daily clearness index that
    is spatially correlated between sites.
wind (tech starting with ``W``)
    AR(1)-smoothed Gaussian field whose spatial correlation decays as
    ``exp(-d / correlation_length_km)`` with haversine distance ``d``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .metrics import haversine_km
from .system import (
    AC,
    DC,
    Bus,
    CandidateSite,
    ConventionalGen,
    DemandSeries,
    GlobalParams,
    Line,
    StorageUnit,
    SystemInstance,
)

# annualized cost ranges in k-currency: (zeta + theta_f) per MW/yr split, theta_v per MWh
DEFAULT_TECH_COSTS = {
    "W_on": {"zeta": [95.0, 115.0], "theta_f": [10.0, 14.0], "theta_v": [0.0, 0.002]},
    "W_off": {"zeta": [160.0, 190.0], "theta_f": [20.0, 26.0], "theta_v": [0.0, 0.002]},
    "PV_u": {"zeta": [40.0, 50.0], "theta_f": [8.0, 10.0], "theta_v": [0.0, 0.001]},
    "PV_d": {"zeta": [65.0, 80.0], "theta_f": [10.0, 12.0], "theta_v": [0.0, 0.001]},
}
DEFAULT_MEAN_CF = {"W_on": [0.15, 0.45], "W_off": [0.35, 0.55], "PV_u": [0.6, 1.0], "PV_d": [0.5, 0.9]}


class SpecError(ValueError):
    pass


@dataclass
class GenSpec:
    seed: int = 1
    n_buses: int = 3
    sites_per_bus: dict[str, int] = field(default_factory=lambda: {"W_on": 4, "PV_u": 3})
    horizon: int = 168
    step_hours: float = 1.0
    demand_base: float = 100.0  # mean MWh per step per bus
    demand_amplitude: float = 0.25  # relative daily swing
    topology: str = "ring"  # ring | star | tree
    extra_edges: int = 0
    region: tuple[float, float, float, float] = (40.0, 58.0, -8.0, 22.0)  # lat/lon box
    site_spread_km: float = 300.0
    correlation_length_km: float = 400.0
    wind_smoothing: float = 0.9  # AR(1) coefficient per step
    site_potential: tuple[float, float] = (20.0, 120.0)  # MW
    tech_costs: dict = field(default_factory=lambda: {k: dict(v) for k, v in DEFAULT_TECH_COSTS.items()})
    mean_cf: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_MEAN_CF.items()})
    theta_e: float = 3.0  # k-currency per MWh unserved
    legacy_share: tuple[float, float] = (0.0, 0.3)  # legacy CCGT as share of peak demand
    ccgt: bool = True
    storage: bool = True
    line_share: tuple[float, float] = (0.1, 0.3)  # initial line capacity as share of base demand

    def check(self) -> None:
        if self.n_buses < 1:
            raise SpecError("n_buses must be >= 1")
        if self.horizon < 24:
            raise SpecError("horizon must be >= 24 steps")
        if any(int(v) < 0 for v in self.sites_per_bus.values()):
            raise SpecError("site counts must be >= 0")
        if self.topology not in ("ring", "star", "tree"):
            raise SpecError(f"unknown topology {self.topology!r}")
        if self.extra_edges < 0:
            raise SpecError("extra_edges must be >= 0")
        if not self.step_hours > 0 or not self.correlation_length_km > 0:
            raise SpecError("step_hours and correlation_length_km must be > 0")
        if not 0 <= self.wind_smoothing < 1:
            raise SpecError("wind_smoothing must be in [0, 1)")
        for tech in self.sites_per_bus:
            if not (tech.startswith("W") or tech.startswith("PV")):
                raise SpecError(f"no capacity-factor archetype for technology {tech!r}")
            if tech not in self.tech_costs or tech not in self.mean_cf:
                raise SpecError(f"missing cost or capacity-factor range for {tech!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "GenSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        data = dict(data)
        for key in ("region", "site_potential", "legacy_share", "line_share"):
            if key in data:
                data[key] = tuple(data[key])
        spec = cls(**data)
        spec.check()
        return spec

    def to_dict(self) -> dict:
        return asdict(self)


def _distance_matrix(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    n = len(lat)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = haversine_km(lat[i], lon[i], lat[j], lon[j])
    return d


def _correlated_normals(rng, d: np.ndarray, length_km: float, steps: int) -> np.ndarray:
    """(steps, n) standard normals with exp(-d/L) correlation across columns."""
    n = d.shape[0]
    if n == 0:
        return np.zeros((steps, 0))
    cov = np.exp(-d / length_km) + 1e-9 * np.eye(n)
    chol = np.linalg.cholesky(cov)
    return rng.standard_normal((steps, n)) @ chol.T


def solar_shape(T: int, step_hours: float = 1.0) -> np.ndarray:
    hour = (np.arange(T) * step_hours) % 24.0
    shape = np.clip(np.sin(2 * np.pi * (hour - 6.0) / 24.0), 0.0, None)
    shape[(hour <= 6.0) | (hour >= 18.0)] = 0.0  # exact zeros despite rounding at the ends
    return shape


def generate(spec: GenSpec) -> SystemInstance:
    """Build a validated synthetic instance; identical seeds give identical output.

    Raises:
        SpecError: for a degenerate spec.
    """
    spec.check()
    rng = np.random.default_rng(spec.seed)
    T, h = spec.horizon, spec.step_hours
    lat0, lat1, lon0, lon1 = spec.region
    N = spec.n_buses

    bus_ids = [f"n{i:02d}" for i in range(N)]
    bus_lat = rng.uniform(lat0, lat1, N)
    bus_lon = rng.uniform(lon0, lon1, N)
    buses = [Bus(b, f"bus {i}") for i, b in enumerate(bus_ids)]

    # site placement
    meta = []  # (id, bus index, tech, lat, lon)
    for i, b in enumerate(bus_ids):
        for tech in sorted(spec.sites_per_bus):
            for k in range(int(spec.sites_per_bus[tech])):
                r = spec.site_spread_km * math.sqrt(rng.uniform())
                ang = rng.uniform(0, 2 * math.pi)
                dlat = r * math.cos(ang) / 111.2
                dlon = r * math.sin(ang) / (111.2 * max(math.cos(math.radians(bus_lat[i])), 0.1))
                meta.append((f"{tech}_{b}_{k:02d}", i, tech,
                             float(np.clip(bus_lat[i] + dlat, -89.0, 89.0)),
                             float(bus_lon[i] + dlon)))

    lat = np.array([m[3] for m in meta])
    lon = np.array([m[4] for m in meta])
    dist = _distance_matrix(lat, lon)
    is_wind = np.array([m[2].startswith("W") for m in meta], dtype=bool)
    n_days = math.ceil(T * h / 24.0)

    cf = np.zeros((len(meta), T))
    widx = np.flatnonzero(is_wind)
    if len(widx):
        w = _correlated_normals(rng, dist[np.ix_(widx, widx)], spec.correlation_length_km, T)
        a = spec.wind_smoothing
        z = np.empty_like(w)
        z[0] = w[0]
        for t in range(1, T):
            z[t] = a * z[t - 1] + math.sqrt(1 - a * a) * w[t]
        for col, m in enumerate(widx):
            lo, hi = spec.mean_cf[meta[m][2]]
            mu = rng.uniform(lo, hi)
            cf[m] = np.clip(mu + 0.6 * mu * z[:, col], 0.0, 1.0)
    sidx = np.flatnonzero(~is_wind)
    if len(sidx):
        clear = _correlated_normals(rng, dist[np.ix_(sidx, sidx)], spec.correlation_length_km, n_days)
        clear = np.clip(0.75 + 0.2 * clear, 0.1, 1.0)
        shape = solar_shape(T, h)
        day = ((np.arange(T) * h) // 24).astype(int)
        for col, m in enumerate(sidx):
            lo, hi = spec.mean_cf[meta[m][2]]
            peak = rng.uniform(lo, hi)
            cf[m] = np.clip(peak * clear[day, col] * shape, 0.0, 1.0)

    sites = []
    for row, (sid, i, tech, la, lo) in enumerate(meta):
        c = spec.tech_costs[tech]
        sites.append(CandidateSite(
            id=sid, bus=bus_ids[i], tech=tech, lat=la, lon=lo, kappa0=0.0,
            kappa_max=float(rng.uniform(*spec.site_potential)),
            zeta=float(rng.uniform(*c["zeta"])), theta_f=float(rng.uniform(*c["theta_f"])),
            theta_v=float(rng.uniform(*c["theta_v"])), cf=cf[row],
        ))

    # demand: daily cycle, weekend dip, noise
    hour = (np.arange(T) * h) % 24.0
    weekday = ((np.arange(T) * h) // 24) % 7
    base_shape = 1.0 + spec.demand_amplitude * np.sin(2 * np.pi * (hour - 9.0) / 24.0)
    base_shape *= np.where(weekday >= 5, 0.9, 1.0)
    demands, peaks = [], []
    for b in bus_ids:
        scale = spec.demand_base * rng.uniform(0.6, 1.4)
        lam = np.clip(scale * base_shape * (1 + 0.03 * rng.standard_normal(T)), 0.0, None) * h
        demands.append(DemandSeries(b, lam))
        peaks.append(lam.max() / h)

    gens, stos = [], []
    for i, b in enumerate(bus_ids):
        if spec.ccgt:
            legacy = float(rng.uniform(*spec.legacy_share) * peaks[i])
            gens.append(ConventionalGen(
                id=f"CCGT_{b}", bus=b, tech="CCGT", kappa0=legacy, kappa_max=legacy + 2 * peaks[i],
                zeta=float(rng.uniform(75, 90)), theta_f=float(rng.uniform(15, 20)),
                theta_v=float(rng.uniform(0.05, 0.07)),
            ))
        if spec.storage:
            stos.append(StorageUnit(
                id=f"Li_{b}", bus=b, tech="Li-Ion", kappa0=0.0, kappa_max=8 * peaks[i],
                phi=0.25, eta_sd=0.9999, eta_c=0.95, eta_d=0.95,
                zeta=float(rng.uniform(18, 24)), theta_f=float(rng.uniform(2, 3)),
                theta_v=float(rng.uniform(0.0005, 0.001)),
            ))

    edges: list[tuple[int, int]] = []
    if N == 2:
        edges = [(0, 1)]
    elif N > 2:
        if spec.topology == "ring":
            edges = [(i, (i + 1) % N) for i in range(N)]
        elif spec.topology == "star":
            edges = [(0, i) for i in range(1, N)]
        else:
            edges = [(int(rng.integers(0, i)), i) for i in range(1, N)]
        candidates = [(i, j) for i in range(N) for j in range(i + 1, N)
                      if (i, j) not in edges and (j, i) not in edges]
        for k in rng.permutation(len(candidates))[:spec.extra_edges]:
            edges.append(candidates[int(k)])
    lines = []
    for k, (i, j) in enumerate(edges):
        length = haversine_km(bus_lat[i], bus_lon[i], bus_lat[j], bus_lon[j])
        k0 = float(rng.uniform(*spec.line_share) * spec.demand_base)
        lines.append(Line(
            id=f"l{k:02d}", from_bus=bus_ids[i], to_bus=bus_ids[j],
            kind=DC if length > 800 else AC, kappa0=k0, kappa_max=3 * k0,
            length=length, zeta=0.08 * length, theta_f=0.005 * length,
            theta_v=float(rng.uniform(0.0005, 0.001)),
        ))

    params = GlobalParams(horizon_len=T, step_hours=h, omega=T * h / 8760.0, theta_e=spec.theta_e)
    return SystemInstance(buses, lines, sites, gens, stos, demands, params)
