import pytest
from hypothesis import given, settings, strategies as st

from energyplace.errors import InfeasibleExecution, InfeasibleTransfer
from energyplace.infrastructure import DevicePowerProfile, LoadState, shortest_path
from energyplace.metrics import (
    MarginalMode,
    Objective,
    device_energy_marginal,
    device_energy_overall,
    evaluate_placement,
    execution_time,
    link_energy,
    transmission_time,
    utilization_after,
)
from energyplace.workload import DataflowSpec, FunctionInstance, FunctionSpec, Request

from conftest import device, make_topology, table3_chain

SMALL, BIG = FunctionSpec("F1", 20), FunctionSpec("F2", 200)


def one_link(delay=0.0):
    topo = make_topology(2, [(1, 2, delay)])
    return topo, shortest_path(topo, None, 1, 2)


def at(u):
    return LoadState({1: u}, {})


@pytest.mark.parametrize("size, expected", [(500, 2.0), (1000, 4.0)])
def test_transmission_time_half_loaded_link(size, expected):
    topo, path = one_link()
    load = LoadState.uniform(topo, link_u=0.5)
    assert transmission_time(DataflowSpec(size), path, load) == pytest.approx(expected)


@pytest.mark.parametrize("size, expected", [(500, 0.02), (1000, 0.04)])
def test_link_energy(size, expected):
    topo, path = one_link()
    load = LoadState.uniform(topo, link_u=0.5)
    assert link_energy(DataflowSpec(size), path, load) == pytest.approx(expected)


def test_transfer_adds_propagation_delay_per_hop():
    topo = make_topology(3, [(1, 2, 0.3), (2, 3, 0.7)])
    path = shortest_path(topo, None, 1, 3)
    load = LoadState.uniform(topo)
    assert transmission_time(DataflowSpec(500), path, load) == pytest.approx(0.3 + 1 + 0.7 + 1)
    assert transmission_time(DataflowSpec(0), path, load) == pytest.approx(1.0)


def test_transfer_on_saturated_link():
    topo, path = one_link(0.5)
    load = LoadState.uniform(topo, link_u=1.0)
    with pytest.raises(InfeasibleTransfer):
        transmission_time(DataflowSpec(1), path, load)
    assert transmission_time(DataflowSpec(0), path, load) == 0.5


def test_empty_path_is_free():
    topo, _ = one_link()
    path = shortest_path(topo, None, 1, 1)
    load = LoadState.uniform(topo, link_u=1.0)
    assert transmission_time(DataflowSpec(750), path, load) == 0
    assert link_energy(DataflowSpec(750), path, load) == 0


def test_execution_time():
    assert execution_time(BIG, device(1), at(0.0)) == pytest.approx(6.4)
    assert execution_time(SMALL, device(1), at(0.0)) == pytest.approx(0.64)
    # at u=0.99 only 5 MI/ms are left
    assert execution_time(BIG, device(1), at(0.99)) == pytest.approx(40.0)
    with pytest.raises(InfeasibleExecution):
        execution_time(BIG, device(1), at(1.0))


@pytest.mark.parametrize("u, expected", [(0.0, 0.0625), (0.5, 0.5625), (0.99, 1.0)])
def test_utilization_after(u, expected):
    assert utilization_after(device(1), at(u)) == pytest.approx(expected)


def test_overall_energy():
    assert device_energy_overall(BIG, device(1), at(0.0)) == pytest.approx(0.6844)
    assert device_energy_overall(SMALL, device(1), at(0.0)) == pytest.approx(0.06844)


def test_marginal_energy():
    d = device(1)
    assert device_energy_marginal(BIG, d, at(0.5)) == pytest.approx(0.0572)
    # idle device: the execution pays for switching on, same as overall
    assert device_energy_marginal(BIG, d, at(0.0)) == device_energy_overall(BIG, d, at(0.0))


def test_marginal_modes_differ_on_concave_profile():
    profile = DevicePowerProfile(50.0, (0.0, 60.0, 80.0))
    d = device(1, cores=2, profile=profile)
    # 200 MI on 250 MI/ms -> 0.8 ms, utilization 0.5 -> 1.0
    inc = device_energy_marginal(BIG, d, at(0.5), MarginalMode.INCREMENT)
    lit = device_energy_marginal(BIG, d, at(0.5), MarginalMode.LITERAL)
    assert inc == pytest.approx(20.0 * 0.8e-3)
    assert lit == pytest.approx(60.0 * 0.8e-3)
    assert device_energy_overall(BIG, d, at(0.5)) == pytest.approx(130.0 * 0.8e-3)


@settings(max_examples=100)
@given(st.floats(0, 0.999), st.sampled_from(list(MarginalMode)))
def test_marginal_never_exceeds_overall(u, mode):
    d = device(1)
    assert device_energy_marginal(BIG, d, at(u), mode) <= device_energy_overall(BIG, d, at(u)) + 1e-12


def test_alternating_placement_hand_sum():
    topo = make_topology(2, [(1, 2, 0.8)])
    load = LoadState.uniform(topo)
    chain = table3_chain()
    req = Request(chain, 1, 1, 100)
    placement = tuple(FunctionInstance(d, f) for d, f in zip((2, 1, 2, 1), chain.function_ids))
    ev = evaluate_placement(req, placement, topo, load)
    # transfers 1.3 + 1.8 + 2.3 + 1.8 + 0 ms, executions 0.64 + 6.4 + 6.4 + 0.64 ms
    assert ev.feasible
    assert ev.completion_ms == pytest.approx(7.2 + 14.08)
    link_j = 10 * 7.2e-3
    exec_j = 106.9375 * 14.08e-3
    assert ev.energy_overall_j == pytest.approx(link_j + exec_j)
    assert ev.energy_marginal_j == pytest.approx(ev.energy_overall_j)
    assert ev.energy(Objective.OVERALL) == ev.energy_overall_j


def test_evaluation_reports_infeasibility():
    topo = make_topology(2, [(1, 2, 0.8)])
    chain = table3_chain()
    req = Request(chain, 1, 1, 100)
    placement = tuple(FunctionInstance(2, f) for f in chain.function_ids)
    ev = evaluate_placement(req, placement, topo, LoadState({1: 0, 2: 1.0}, {(1, 2): 0}))
    assert not ev.feasible and ev.cause.startswith("infeasible-execution")
    ev = evaluate_placement(req, placement, topo, LoadState({1: 0, 2: 0}, {(1, 2): 1.0}))
    assert not ev.feasible and ev.cause.startswith("infeasible-transfer")


def test_evaluation_checks_chain_shape():
    topo = make_topology(2, [(1, 2, 0.8)])
    chain = table3_chain()
    req = Request(chain, 1, 1, 100)
    with pytest.raises(ValueError):
        evaluate_placement(req, (FunctionInstance(1, "F1"),), topo, LoadState.uniform(topo))
    swapped = tuple(FunctionInstance(1, f) for f in ("F2", "F1", "F3", "F4"))
    with pytest.raises(ValueError):
        evaluate_placement(req, swapped, topo, LoadState.uniform(topo))
