import dataclasses

import numpy as np
import pytest

from conftest import one_bus, site, two_bus
from respan.flp import build_flp, extract_design
from respan.lp import solve
from respan.system import (
    DemandSeries,
    DimensionError,
    SolvedDesign,
    validate_instance,
    total_cost,
)


def test_well_formed_two_bus_has_no_findings():
    assert validate_instance(two_bus()) == []


def test_cf_out_of_range_reported_once():
    T = 24
    cf = np.full(T, 0.5)
    cf[3] = 1.2
    findings = validate_instance(one_bus(T, cf=cf))
    assert len(findings) == 1
    f = findings[0]
    assert f.entity == "site m1" and f.field == "cf"
    assert "cf out of [0,1]" in f.rule and "t=3" in f.rule


def test_demand_length_mismatch():
    inst = one_bus(24, demand=np.full(23, 5.0))
    rules = [f.rule for f in validate_instance(inst)]
    assert any("length mismatch" in r for r in rules)


def test_capacity_ordering_and_unknown_bus():
    inst = one_bus(4, sites=[site("m1", "nX", np.zeros(4), kmax=-1.0)])
    fields = {(f.field, f.rule) for f in validate_instance(inst)}
    assert ("bus", "unknown bus 'nX'") in fields
    assert any(f == "kappa_max" for f, _ in fields)


def test_duplicate_site_ids():
    cf = np.zeros(4)
    inst = one_bus(4, sites=[site("m1", "n1", cf), site("m1", "n1", cf)])
    assert any(f.rule == "duplicate site id" for f in validate_instance(inst))


def test_instance_is_immutable():
    inst = one_bus()
    with pytest.raises(dataclasses.FrozenInstanceError):
        inst.params = None
    with pytest.raises(ValueError):
        inst.sites[0].cf[0] = 0.3


def test_total_cost_zero_design():
    inst = two_bus()
    assert total_cost(SolvedDesign.zeros(inst), inst) == 0.0


def test_total_cost_single_capacity_term():
    inst = one_bus(4, sites=[site("m1", "n1", np.zeros(4), cost=(90.0, 10.0, 0.0))])
    d = SolvedDesign.zeros(inst)
    d.K_site["m1"] = 10.0
    # 10 MW at 100 k-currency/MW/yr, omega = 1 -> 1000 k = 1.0 M
    assert total_cost(d, inst) == pytest.approx(1000.0)


def test_total_cost_variable_terms_use_absolute_flow_and_storage_throughput():
    inst = two_bus(T=2)
    d = SolvedDesign.zeros(inst)
    d.flow["l1"] = np.array([5.0, -5.0])
    d.p_charge["s2"] = np.array([1.0, 0.0])
    d.p_discharge["s2"] = np.array([0.0, 2.0])
    expected = 0.01 * 10.0 + 0.002 * 3.0
    assert total_cost(d, inst) == pytest.approx(expected)


@pytest.mark.parametrize("inst", [two_bus(), two_bus(cyclic=True), two_bus(step_hours=2.0)])
def test_total_cost_matches_solver_objective(inst):
    lp, vm = build_flp(inst)
    sol = solve(lp, "highs")
    design = extract_design(inst, vm, sol)
    assert total_cost(design, inst) == pytest.approx(sol.objective, rel=1e-6)


def test_total_cost_dimension_mismatch():
    inst = two_bus(T=4)
    d = SolvedDesign.zeros(two_bus(T=3))
    with pytest.raises(DimensionError):
        total_cost(d, inst)


def test_with_sites_keeps_everything_else():
    inst = two_bus()
    sub = inst.with_sites(["a1"])
    assert sub.site_ids == ["a1"]
    assert sub.lines == inst.lines and sub.storages == inst.storages
    assert sub.demands == inst.demands


def test_demand_matrix_zero_for_bus_without_series():
    inst = two_bus(T=3)
    inst = dataclasses.replace(inst, demands=[DemandSeries("n2", np.ones(3))])
    assert np.array_equal(inst.demand_matrix(), [[0, 0, 0], [1, 1, 1]])
