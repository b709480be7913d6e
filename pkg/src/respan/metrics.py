"""Fidelity and savings metrics comparing the two-stage method with the full model."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .system import CandidateSite, SystemInstance

EARTH_RADIUS_KM = 6371.0


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance on a sphere of radius 6371 km."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dlat = p2 - p1
    dlon = math.radians(lon2 - lon1)
    a = math.sin(dlat / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


def gamma(inst: SystemInstance, retained: Iterable[str], tech: str) -> float:
    """Share of the candidate sites of ``tech`` discarded by screening."""
    pool = {s.id for s in inst.sites if s.tech == tech}
    if not pool:
        raise ValueError(f"no candidate sites of technology {tech!r}")
    kept = pool & set(retained)
    return 1.0 - len(kept) / len(pool)


def alpha(flp_sites: set[str], site_sites: set[str]) -> float | None:
    """Share of the full-model selection that screening also selected.

    Undefined (``None``) when the full model selects nothing.
    """
    if not flp_sites:
        return None
    return len(set(flp_sites) & set(site_sites)) / len(flp_sites)


def selected(inst: SystemInstance, new_capacity: Mapping[str, float], threshold: float = 1.0) -> set[str]:
    """Sites whose total capacity (legacy + new) reaches ``threshold`` MW."""
    return {s.id for s in inst.sites if s.kappa0 + new_capacity.get(s.id, 0.0) >= threshold}


@dataclass
class Match:
    flp_site: str
    site_site: str
    km: float
    common: bool


def match_sites(
    unidentified: Iterable[CandidateSite], exclusive: Iterable[CandidateSite]
) -> tuple[list[Match], list[str]]:
    """Greedy nearest-neighbour pairing without reuse.

    Full-model sites are visited in ascending id order; each takes the nearest
    still-free screening-only site (ties to the smaller id).  Returns the pairs
    and the ids left unmatched once the pool runs out.
    """
    pool = sorted(exclusive, key=lambda s: s.id)
    pairs: list[Match] = []
    leftover: list[str] = []
    for f in sorted(unidentified, key=lambda s: s.id):
        if not pool:
            leftover.append(f.id)
            continue
        dists = [haversine_km(f.lat, f.lon, c.lat, c.lon) for c in pool]
        k = int(np.argmin(dists))
        pairs.append(Match(f.id, pool[k].id, dists[k], False))
        pool.pop(k)
    return pairs, leftover


def tsce(flp_objective: float, rlp_objective: float) -> float:
    if not flp_objective > 0:
        raise ValueError("full-model objective must be positive")
    return (rlp_objective - flp_objective) / flp_objective


def _reduction(full: float, reduced: float) -> float:
    if full == 0:
        return 0.0
    return 100.0 * (1.0 - reduced / full)


def size_deltas(flp: Mapping, rlp: Mapping, site: Mapping) -> dict[str, float]:
    """Percent reductions of the two-stage method relative to the full model.

    Size fields compare the reduced model against the full one.  Runtime
    charges both stages; peak memory takes the larger of the two stages since
    they never run concurrently.
    """
    return {
        "variables": _reduction(flp["variables"], rlp["variables"]),
        "constraints": _reduction(flp["constraints"], rlp["constraints"]),
        "nonzeros": _reduction(flp["nonzeros"], rlp["nonzeros"]),
        "pmr": _reduction(flp["peak_memory_bytes"],
                          max(site["peak_memory_bytes"], rlp["peak_memory_bytes"])),
        "srt": _reduction(flp["solve_time_s"], site["solve_time_s"] + rlp["solve_time_s"]),
    }


def pearson(x: Iterable[float], y: Iterable[float]) -> float | None:
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    if len(x) < 2 or x.std() == 0 or y.std() == 0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def distance_cdf(km: Iterable[float]) -> tuple[np.ndarray, np.ndarray]:
    d = np.sort(np.asarray(list(km), dtype=float))
    return d, np.arange(1, len(d) + 1) / max(len(d), 1)


@dataclass
class ComparisonReport:
    gamma: dict[str, float]
    alpha: dict[str, float | None]
    matching: dict[str, list[Match]]
    unmatched: dict[str, list[str]]
    capacity_pairs: list[dict]
    tsce: float
    deltas: dict[str, float]
    pearson: float | None
    capacity_differences: dict[str, float] = field(default_factory=dict)
    memory_estimated: bool = False

    def to_dict(self) -> dict:
        dist = [m.km for ms in self.matching.values() for m in ms]
        d, _ = distance_cdf(dist)
        return {
            "gamma": self.gamma,
            "alpha": self.alpha,
            "tsce": self.tsce,
            "deltas": self.deltas,
            "memory_estimated": self.memory_estimated,
            "pearson": self.pearson,
            "matched_pairs": sum(len(v) for v in self.matching.values()),
            "unmatched": self.unmatched,
            "distance_km": {
                "p50": float(np.percentile(d, 50)) if len(d) else None,
                "p95": float(np.percentile(d, 95)) if len(d) else None,
                "max": float(d[-1]) if len(d) else None,
            },
            "capacity_differences": self.capacity_differences,
            "matching": {t: [asdict(m) for m in ms] for t, ms in self.matching.items()},
        }

    def write(self, out_dir: str | os.PathLike) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        with open(out / "distances.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tech", "flp_site", "site_site", "km", "common"])
            for tech in sorted(self.matching):
                for m in self.matching[tech]:
                    w.writerow([tech, m.flp_site, m.site_site, repr(m.km), int(m.common)])
        with open(out / "capacities.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tech", "flp_site", "site_site", "flp_mw", "rlp_mw", "common"])
            for row in self.capacity_pairs:
                w.writerow([row["tech"], row["flp_site"], row["site_site"],
                            repr(row["flp_mw"]), repr(row["rlp_mw"]), int(row["common"])])


def _installed(inst: SystemInstance, caps: Mapping[str, float]) -> dict[str, float]:
    return {s.id: s.kappa0 + caps.get(s.id, 0.0) for s in inst.sites}


def capacity_differences(inst: SystemInstance, flp: Mapping, rlp: Mapping) -> dict[str, float]:
    """System-wide installed capacity of the reduced minus the full model.

    Sites and units by technology in MW, storage in MWh, lines by kind in
    TW km (capacity times length).
    """
    fc, rc = flp["capacity"], rlp["capacity"]
    out: dict[str, float] = {}

    def add(key, value):
        out[key] = out.get(key, 0.0) + value

    for s in inst.sites:
        add(s.tech, rc["site"].get(s.id, 0.0) - fc["site"].get(s.id, 0.0))
    for g in inst.generators:
        add(g.tech, rc["generator"].get(g.id, 0.0) - fc["generator"].get(g.id, 0.0))
    for s in inst.storages:
        add(s.tech, rc["storage"].get(s.id, 0.0) - fc["storage"].get(s.id, 0.0))
    for l in inst.lines:
        add(l.kind, (rc["line"].get(l.id, 0.0) - fc["line"].get(l.id, 0.0)) * l.length / 1e6)
    return out


def compare(inst: SystemInstance, flp: Mapping, site: Mapping, rlp: Mapping) -> ComparisonReport:
    """Build the comparison report from run records in their dict form."""
    threshold = site.get("params", {}).get("selection_threshold", 1.0)
    retained = {i for ids in site["retained"].values() for i in ids}
    flp_new = flp["capacity"]["site"]
    flp_sel = selected(inst, flp_new, threshold)
    flp_inst = _installed(inst, flp_new)
    rlp_inst = _installed(inst, rlp["capacity"]["site"])

    gam, alp, matching, unmatched, pairs = {}, {}, {}, {}, []
    for tech in inst.techs():
        sites = {s.id: s for s in inst.sites if s.tech == tech}
        f_r = flp_sel & set(sites)
        s_r = retained & set(sites)
        gam[tech] = gamma(inst, retained, tech)
        alp[tech] = alpha(f_r, s_r)
        common = sorted(f_r & s_r)
        found, left = match_sites([sites[i] for i in f_r - s_r], [sites[i] for i in s_r - f_r])
        matching[tech] = [Match(i, i, 0.0, True) for i in common] + found
        unmatched[tech] = left
        for m in matching[tech]:
            pairs.append({"tech": tech, "flp_site": m.flp_site, "site_site": m.site_site,
                          "flp_mw": flp_inst[m.flp_site], "rlp_mw": rlp_inst[m.site_site],
                          "common": m.common})
    return ComparisonReport(
        gamma=gam,
        alpha=alp,
        matching=matching,
        unmatched=unmatched,
        capacity_pairs=pairs,
        tsce=tsce(flp["objective"], rlp["objective"]),
        deltas=size_deltas(flp, rlp, site),
        pearson=pearson([p["flp_mw"] for p in pairs], [p["rlp_mw"] for p in pairs]),
        capacity_differences=capacity_differences(inst, flp, rlp),
        memory_estimated=bool(flp.get("memory_estimated") or rlp.get("memory_estimated")
                              or site.get("memory_estimated")),
    )
