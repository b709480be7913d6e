import dataclasses
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import one_bus, small_instance, two_bus
from respan.flp import (
    InstanceError,
    NotOptimalError,
    build_flp,
    check_design,
    expected_size,
    extract_design,
)
from respan.lp import LpSolution, Status, solve, solve_reference
from respan.system import DemandSeries, validate_instance


def prefix_counts(lp):
    return Counter(n.split(":")[0] for n in lp.row_names), Counter(n.split(":")[0] for n in lp.var_names)


def test_one_bus_one_site_counts():
    lp, _ = build_flp(one_bus(T=2))
    assert lp.size()["variables"] == 5  # K, 2 feed-in, 2 unserved
    assert lp.size()["constraints"] == 5  # 2 balance, 2 availability, 1 cap
    rows, cols = prefix_counts(lp)
    assert rows == {"bal": 2, "avail": 2, "capm": 1}
    assert cols == {"K_m": 1, "p_m": 2, "u_n": 2}


def hand_count(inst):
    """Family-by-family count, independent of the closed form in the module."""
    T = inst.T
    fam_vars = {
        "K_m": len(inst.sites), "p_m": len(inst.sites) * T,
        "K_g": len(inst.generators), "p_g": len(inst.generators) * T,
        "K_s": len(inst.storages), "pc_s": len(inst.storages) * T,
        "pd_s": len(inst.storages) * T, "e_s": len(inst.storages) * T,
        "K_l": len(inst.lines), "fp_l": len(inst.lines) * T, "fn_l": len(inst.lines) * T,
        "u_n": len(inst.buses) * T,
    }
    fam_rows = {
        "bal": len(inst.buses) * T, "avail": len(inst.sites) * T, "capm": len(inst.sites),
        "disp": len(inst.generators) * T, "capg": len(inst.generators),
        "chg": len(inst.storages) * T, "dis": len(inst.storages) * T,
        "soc": len(inst.storages) * T, "rec": len(inst.storages) * T,
        "caps": len(inst.storages), "flow": len(inst.lines) * T, "capl": len(inst.lines),
    }
    return ({k: v for k, v in fam_vars.items() if v},
            {k: v for k, v in fam_rows.items() if v})


@pytest.mark.parametrize("inst", [two_bus(), two_bus(cyclic=True), small_instance(horizon=24),
                                  two_bus(storage=False, gen=False)])
def test_sizes_match_closed_form_and_hand_count(inst):
    lp, _ = build_flp(inst)
    rows, cols = prefix_counts(lp)
    hv, hr = hand_count(inst)
    assert dict(cols) == hv and dict(rows) == hr
    assert lp.size() == expected_size(inst)


def test_nonzero_count_by_row_family():
    inst = two_bus(T=5)
    lp, vm = build_flp(inst)
    a = lp.matrix()
    per_row = np.diff(a.indptr)
    T = inst.T
    nnz = {k: int(per_row[r].sum()) for k, r in vm.rows.items()}
    # storage recursion: first step has no predecessor
    assert nnz["rec"] == 4 * T - 1
    assert nnz["flow"] == 3 * T
    # balance: n1 has site + 2 flow parts + u; n2 site + gen + 2 sto + 2 flow + u
    assert nnz["bal"] == T * (4 + 7)


def test_tight_potentials_zero_upper_bounds():
    inst = two_bus()
    tight = dataclasses.replace(
        inst,
        sites=[dataclasses.replace(s, kappa0=10.0, kappa_max=10.0) for s in inst.sites],
        generators=[dataclasses.replace(g, kappa_max=g.kappa0) for g in inst.generators],
        storages=[dataclasses.replace(s, kappa_max=s.kappa0) for s in inst.storages],
        lines=[dataclasses.replace(l, kappa_max=l.kappa0) for l in inst.lines],
    )
    lp, vm = build_flp(tight)
    for hd in (vm.K_site, vm.K_gen, vm.K_sto, vm.K_line):
        assert np.all(lp.ub[hd] == 0.0)


def test_non_sizable_unit_gets_zero_expansion():
    inst = two_bus()
    fixed = dataclasses.replace(inst, generators=[dataclasses.replace(inst.generators[0], sizable=False)])
    lp, vm = build_flp(fixed)
    assert lp.ub[vm.K_gen[0]] == 0.0


def test_invalid_instance_rejected():
    inst = one_bus(T=3, demand=np.array([1.0, -1.0, 1.0]))
    with pytest.raises(InstanceError) as err:
        build_flp(inst)
    assert err.value.findings == validate_instance(inst)


def test_cheap_remote_site_exports_over_line():
    inst = two_bus(T=4, storage=False, gen=False)
    lp, vm = build_flp(inst)
    sol = solve_reference(lp)
    assert sol.optimal
    d = extract_design(inst, vm, sol)
    assert d.K_site["a1"] > 0
    assert np.all(d.flow["l1"] > 0)  # n1 -> n2
    pos, neg = sol.x[vm.flow_pos[0]], sol.x[vm.flow_neg[0]]
    assert np.all(np.minimum(pos, neg) == 0.0)
    assert sol.objective == pytest.approx(solve(lp, "highs").objective, rel=1e-6)


def test_zero_demand_gives_empty_design():
    inst = two_bus(T=3)
    inst = dataclasses.replace(inst, demands=[DemandSeries(b, np.zeros(3)) for b in inst.bus_ids])
    lp, vm = build_flp(inst)
    d = extract_design(inst, vm, solve(lp, "highs"))
    assert d.objective == pytest.approx(0.0, abs=1e-9)
    for caps in (d.K_site, d.K_gen, d.K_sto, d.K_line):
        assert all(v == pytest.approx(0.0, abs=1e-9) for v in caps.values())


def test_flow_recombined_from_split():
    inst = two_bus(T=1, storage=False, gen=False)
    lp, vm = build_flp(inst)
    x = np.zeros(lp.n_vars)
    x[vm.flow_pos[0, 0]] = 5.0
    d = extract_design(inst, vm, LpSolution(Status.OPTIMAL, x, 0.0))
    assert d.flow["l1"][0] == 5.0


def test_extract_rejects_non_optimal():
    inst = two_bus(T=1)
    lp, vm = build_flp(inst)
    with pytest.raises(NotOptimalError):
        extract_design(inst, vm, LpSolution(Status.INFEASIBLE, np.full(lp.n_vars, np.nan), np.nan))


@pytest.fixture(scope="module")
def solved():
    inst = two_bus(T=8, gen=False, dark=True)
    lp, vm = build_flp(inst)
    sol = solve(lp, "highs")
    assert sol.x[vm.p_discharge].max() > 1.0  # storage shifts energy
    return inst, lp, vm, sol, extract_design(inst, vm, sol)


def test_extracted_design_residuals_small(solved):
    inst, _, _, sol, d = solved
    res = check_design(inst, d)
    assert max(res.values()) <= 1e-6
    assert d.objective == sol.objective


def test_soc_perturbation_residual(solved):
    inst, _, _, _, d = solved
    e = d.soc["s2"].copy()
    d2 = dataclasses.replace(d, soc={"s2": e + np.eye(1, len(e), 3).ravel()})
    assert check_design(inst, d2)["soc_recursion"] == pytest.approx(1.0, abs=1e-6)


def test_unserved_perturbation_balance_residual(solved):
    inst, _, _, _, d = solved
    u = {b: v.copy() for b, v in d.unserved.items()}
    u["n1"][2] += 2.5
    d2 = dataclasses.replace(d, unserved=u)
    assert check_design(inst, d2)["balance"] == pytest.approx(2.5, abs=1e-6)


def test_split_pairs_complementary(solved):
    _, _, vm, sol, _ = solved
    x = sol.x
    for a, b in ((vm.p_charge, vm.p_discharge), (vm.flow_pos, vm.flow_neg)):
        assert np.max(x[a] * x[b], initial=0.0) <= 1e-8


def test_cyclic_storage_links_last_step():
    inst = two_bus(T=6, cyclic=True, dark=True)
    lp, vm = build_flp(inst)
    d = extract_design(inst, vm, solve(lp, "highs"))
    assert check_design(inst, d)["soc_recursion"] <= 1e-6
    ref = solve_reference(lp)
    assert ref.objective == pytest.approx(d.objective, rel=1e-6)


@settings(max_examples=12, deadline=None)
@given(seed=st.integers(0, 10_000), which=st.sampled_from(["site", "line", "storage", "gen"]),
       frac=st.floats(0.0, 0.9))
def test_tightening_potential_never_lowers_objective(seed, which, frac):
    inst = small_instance(seed=seed, n_buses=2, wind=2, pv=1, horizon=24)
    lp, _ = build_flp(inst)
    base = solve(lp, "highs").objective
    attr = {"site": "sites", "line": "lines", "storage": "storages", "gen": "generators"}[which]
    items = list(getattr(inst, attr))
    x = items[0]
    items[0] = dataclasses.replace(x, kappa_max=x.kappa0 + frac * (x.kappa_max - x.kappa0))
    tighter = dataclasses.replace(inst, **{attr: items})
    lp2, _ = build_flp(tighter)
    assert solve(lp2, "highs").objective >= base - 1e-6 * abs(base)


def test_always_feasible_without_any_supply():
    inst = one_bus(T=3, sites=[])
    lp, _ = build_flp(inst)
    sol = solve(lp, "highs")
    assert sol.optimal
    assert sol.objective == pytest.approx(3 * 10.0 * 1e3)
