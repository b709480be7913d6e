"""Instance directory format and result CSV writers.

An instance directory holds::

    buses.csv    id,name
    lines.csv    id,from,to,kind,kappa0,kappa_max,length_km,zeta,theta_f,theta_v
    sites.csv    id,bus,tech,lat,lon,kappa0,kappa_max,zeta,theta_f,theta_v
    gens.csv     id,bus,tech,kappa0,kappa_max,zeta,theta_f,theta_v,sizable
    storage.csv  id,bus,tech,kappa0,kappa_max,phi,eta_sd,eta_c,eta_d,zeta,theta_f,theta_v,sizable
    cf.csv       t,<site id>...     (one row per step)
    demand.csv   t,<bus id>...      (MWh per step)
    params.json  horizon_len, step_hours, omega, theta_e, storage_cyclic

UTF-8, ``.`` decimal separator, header row mandatory.  Floats are written
with ``repr`` so that a write/read round trip is exact.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .system import (
    Bus,
    CandidateSite,
    ConventionalGen,
    DemandSeries,
    GlobalParams,
    Line,
    SolvedDesign,
    StorageUnit,
    SystemInstance,
)

BUS_COLS = ["id", "name"]
LINE_COLS = ["id", "from", "to", "kind", "kappa0", "kappa_max", "length_km", "zeta", "theta_f", "theta_v"]
SITE_COLS = ["id", "bus", "tech", "lat", "lon", "kappa0", "kappa_max", "zeta", "theta_f", "theta_v"]
GEN_COLS = ["id", "bus", "tech", "kappa0", "kappa_max", "zeta", "theta_f", "theta_v", "sizable"]
STO_COLS = ["id", "bus", "tech", "kappa0", "kappa_max", "phi", "eta_sd", "eta_c", "eta_d",
            "zeta", "theta_f", "theta_v", "sizable"]


class FormatError(OSError):
    """Unreadable or malformed instance/result file."""


def _f(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_csv(path: Path, header: list[str] | None = None) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: missing header row")
    head, body = rows[0], [r for r in rows[1:] if r]
    if header is not None and head != header:
        raise FormatError(f"{path}: expected header {header}, got {head}")
    for k, r in enumerate(body, 2):
        if len(r) != len(head):
            raise FormatError(f"{path}:{k}: expected {len(head)} fields, got {len(r)}")
    return head, body


def _num(path: Path, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise FormatError(f"{path}: not a number: {value!r}") from None


def _bool(path: Path, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes"):
        return True
    if v in ("0", "false", "no"):
        return False
    raise FormatError(f"{path}: not a boolean: {value!r}")


def write_instance(inst: SystemInstance, directory: str | os.PathLike) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    T = inst.T
    _write_csv(d / "buses.csv", BUS_COLS, [[b.id, b.name] for b in inst.buses])
    _write_csv(d / "lines.csv", LINE_COLS, [
        [l.id, l.from_bus, l.to_bus, l.kind, _f(l.kappa0), _f(l.kappa_max), _f(l.length),
         _f(l.zeta), _f(l.theta_f), _f(l.theta_v)] for l in inst.lines])
    _write_csv(d / "sites.csv", SITE_COLS, [
        [s.id, s.bus, s.tech, _f(s.lat), _f(s.lon), _f(s.kappa0), _f(s.kappa_max),
         _f(s.zeta), _f(s.theta_f), _f(s.theta_v)] for s in inst.sites])
    _write_csv(d / "gens.csv", GEN_COLS, [
        [g.id, g.bus, g.tech, _f(g.kappa0), _f(g.kappa_max), _f(g.zeta), _f(g.theta_f),
         _f(g.theta_v), int(g.sizable)] for g in inst.generators])
    _write_csv(d / "storage.csv", STO_COLS, [
        [s.id, s.bus, s.tech, _f(s.kappa0), _f(s.kappa_max), _f(s.phi), _f(s.eta_sd),
         _f(s.eta_c), _f(s.eta_d), _f(s.zeta), _f(s.theta_f), _f(s.theta_v), int(s.sizable)]
        for s in inst.storages])
    cf = inst.cf_matrix()
    _write_csv(d / "cf.csv", ["t"] + inst.site_ids,
               [[t] + [_f(v) for v in cf[:, t]] for t in range(T)])
    dem_ids = [x.bus for x in inst.demands]
    dem = np.vstack([x.values for x in inst.demands]) if inst.demands else np.zeros((0, T))
    _write_csv(d / "demand.csv", ["t"] + dem_ids,
               [[t] + [_f(v) for v in dem[:, t]] for t in range(T)])
    p = inst.params
    (d / "params.json").write_text(json.dumps({
        "horizon_len": p.horizon_len, "step_hours": p.step_hours, "omega": p.omega,
        "theta_e": p.theta_e, "storage_cyclic": p.storage_cyclic,
    }, indent=2) + "\n", encoding="utf-8")
    return d


def _wide(path: Path, T: int) -> tuple[list[str], np.ndarray]:
    head, body = _read_csv(path)
    if not head or head[0] != "t":
        raise FormatError(f"{path}: first column must be 't'")
    if len(body) != T:
        raise FormatError(f"{path}: {len(body)} rows, horizon is {T}")
    try:
        data = np.array([[float(v) for v in r[1:]] for r in body], dtype=float).reshape(T, len(head) - 1)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    return head[1:], data.T


def read_instance(directory: str | os.PathLike) -> SystemInstance:
    """Parse an instance directory (validation is left to the caller).

    Raises:
        FormatError: on a missing or malformed file.
    """
    d = Path(directory)
    if not d.is_dir():
        raise FormatError(f"instance directory {d} does not exist")
    try:
        raw = json.loads((d / "params.json").read_text(encoding="utf-8"))
        params = GlobalParams(
            horizon_len=int(raw["horizon_len"]), step_hours=float(raw.get("step_hours", 1.0)),
            omega=float(raw.get("omega", 1.0)), theta_e=float(raw["theta_e"]),
            storage_cyclic=bool(raw.get("storage_cyclic", False)),
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{d / 'params.json'}: {exc}") from exc
    T = params.horizon_len

    _, rows = _read_csv(d / "buses.csv", BUS_COLS)
    buses = [Bus(r[0], r[1]) for r in rows]
    p = d / "lines.csv"
    _, rows = _read_csv(p, LINE_COLS)
    lines = [Line(r[0], r[1], r[2], r[3], *(_num(p, v) for v in r[4:])) for r in rows]

    p = d / "sites.csv"
    _, rows = _read_csv(p, SITE_COLS)
    ids, cf = _wide(d / "cf.csv", T)
    cf_by_id = dict(zip(ids, cf))
    sites = []
    for r in rows:
        if r[0] not in cf_by_id:
            raise FormatError(f"cf.csv: no column for site {r[0]!r}")
        nums = [_num(p, v) for v in r[3:]]
        sites.append(CandidateSite(r[0], r[1], r[2], *nums, cf=cf_by_id[r[0]]))

    gens, stos = [], []
    p = d / "gens.csv"
    if p.exists():
        _, rows = _read_csv(p, GEN_COLS)
        gens = [ConventionalGen(r[0], r[1], r[2], *(_num(p, v) for v in r[3:8]),
                                sizable=_bool(p, r[8])) for r in rows]
    p = d / "storage.csv"
    if p.exists():
        _, rows = _read_csv(p, STO_COLS)
        stos = [StorageUnit(r[0], r[1], r[2], *(_num(p, v) for v in r[3:12]),
                            sizable=_bool(p, r[12])) for r in rows]

    bus_cols, dem = _wide(d / "demand.csv", T)
    demands = [DemandSeries(b, dem[i]) for i, b in enumerate(bus_cols)]
    return SystemInstance(buses, lines, sites, gens, stos, demands, params)


def write_design(design: SolvedDesign, inst: SystemInstance, directory: str | os.PathLike) -> None:
    """``design.csv`` (capacities) and ``dispatch.csv`` (long-format trajectories)."""
    d = Path(directory)
    rows = []
    for kind, items, caps in (("site", inst.sites, design.K_site),
                              ("generator", inst.generators, design.K_gen),
                              ("storage", inst.storages, design.K_sto),
                              ("line", inst.lines, design.K_line)):
        for x in items:
            k = caps.get(x.id, 0.0)
            rows.append([kind, x.id, getattr(x, "tech", getattr(x, "kind", "")),
                         _f(x.kappa0), _f(k), _f(x.kappa0 + k)])
    _write_csv(d / "design.csv", ["kind", "id", "tech", "kappa0", "new", "total"], rows)
    rows = []
    for var, series in (("p_site", design.p_site), ("p_gen", design.p_gen),
                        ("p_charge", design.p_charge), ("p_discharge", design.p_discharge),
                        ("soc", design.soc), ("flow", design.flow), ("unserved", design.unserved)):
        for key, vals in series.items():
            rows.extend([var, key, t, _f(v)] for t, v in enumerate(vals))
    _write_csv(d / "dispatch.csv", ["variable", "id", "t", "value"], rows)


def write_retained(inst: SystemInstance, retained: dict, capacity: dict,
                   directory: str | os.PathLike) -> None:
    keep = {i for ids in retained.values() for i in ids}
    rows = [[s.id, s.bus, s.tech, _f(capacity.get(s.id, 0.0))] for s in inst.sites if s.id in keep]
    _write_csv(Path(directory) / "retained.csv", ["id", "bus", "tech", "siting_mw"], rows)
