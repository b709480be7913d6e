import numpy as np
import pytest

from respan.generator import GenSpec, generate
from respan.system import (
    Bus,
    CandidateSite,
    ConventionalGen,
    DemandSeries,
    GlobalParams,
    Line,
    StorageUnit,
    SystemInstance,
)


def site(sid, bus, cf, kmax=100.0, tech="W_on", k0=0.0, cost=(50.0, 10.0, 0.01), lat=50.0, lon=5.0):
    return CandidateSite(sid, bus, tech, lat, lon, k0, kmax, *cost, cf=np.asarray(cf, float))


def one_bus(T=4, cf=None, demand=10.0, kmax=100.0, theta_e=1e3, sites=None, **params):
    cf = np.full(T, 0.5) if cf is None else cf
    sites = [site("m1", "n1", cf, kmax)] if sites is None else sites
    return SystemInstance(
        [Bus("n1", "one")], [], sites, [], [],
        [DemandSeries("n1", np.full(T, float(demand)) if np.isscalar(demand) else demand)],
        GlobalParams(T, theta_e=theta_e, **params),
    )


def two_bus(T=6, storage=True, gen=True, line_cost=0.01, cyclic=False, step_hours=1.0, dark=False):
    """Demand at n2 only; a cheap site at n1, an expensive one at n2.

    With ``dark`` the cheap site produces nothing on half of the steps.
    """
    t = np.arange(T)
    cf1 = 0.4 + 0.4 * np.sin(2 * np.pi * t / T) ** 2
    if dark:
        cf1 = np.where(t % 2 == 0, 0.9, 0.0)
    cf2 = 0.2 + 0.1 * np.cos(2 * np.pi * t / T)
    sites = [
        site("a1", "n1", cf1, 200.0, cost=(40.0, 5.0, 0.001), lat=50.0, lon=4.0),
        site("b2", "n2", cf2, 200.0, "PV_u", cost=(400.0, 50.0, 0.001), lat=51.0, lon=6.0),
    ]
    lines = [Line("l1", "n1", "n2", "AC", 5.0, 80.0, 150.0, 2.0, 1.0, line_cost)]
    gens = [ConventionalGen("g2", "n2", "CCGT", 5.0, 60.0, 60.0, 10.0, 0.05)] if gen else []
    stos = [StorageUnit("s2", "n2", "Li", 0.0, 200.0, 0.25, 0.999, 0.95, 0.95, 15.0, 2.0, 0.002)] \
        if storage else []
    demand = [DemandSeries("n1", np.zeros(T)),
              DemandSeries("n2", (30.0 + 5.0 * np.cos(2 * np.pi * t / T)) * step_hours)]
    return SystemInstance([Bus("n1"), Bus("n2")], lines, sites, gens, stos, demand,
                          GlobalParams(T, step_hours=step_hours, omega=T * step_hours / 8760, theta_e=5.0,
                                       storage_cyclic=cyclic))


def small_instance(seed=1, n_buses=3, wind=4, pv=3, horizon=48, **kw):
    spec = GenSpec(seed=seed, n_buses=n_buses, sites_per_bus={"W_on": wind, "PV_u": pv},
                   horizon=horizon, **kw)
    return generate(spec)


@pytest.fixture
def tiny():
    return two_bus()


@pytest.fixture(scope="session")
def gen_small():
    return small_instance()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
