import pytest

from energyplace.errors import UnknownDeviceError, UnknownFunctionError
from energyplace.workload import (
    DataflowSpec,
    Deployment,
    DeploymentPlan,
    FunctionInstance,
    FunctionSpec,
    Request,
    ServiceChain,
    deploy_instances,
    instances_of,
)

from conftest import make_topology, table3_chain

PLAN = DeploymentPlan({
    1: {"F1": (1,), "F2": (2,), "F3": (3,), "F4": (1,)},
    2: {"F1": (1, 2), "F2": (2, 3), "F3": (3, 1), "F4": (1, 2)},
})


@pytest.fixture
def topo():
    return make_topology(3, [(1, 2, 1.0), (2, 3, 1.0)])


def test_chain_needs_one_more_dataflow_than_functions():
    f = (FunctionSpec("A", 10),)
    with pytest.raises(ValueError):
        ServiceChain(f, (DataflowSpec(1),))
    chain = ServiceChain(f, (DataflowSpec(1), DataflowSpec(2)))
    assert len(chain) == 1 and chain.position("A") == 1


def test_chain_rejects_duplicates_and_bad_sizes():
    with pytest.raises(ValueError):
        ServiceChain((FunctionSpec("A", 1), FunctionSpec("A", 1)), [DataflowSpec(0)] * 3)
    with pytest.raises(ValueError):
        FunctionSpec("A", 0)
    with pytest.raises(ValueError):
        DataflowSpec(-1)


def test_positions_and_lookup(chain):
    assert [chain.position(f) for f in chain.function_ids] == [1, 2, 3, 4]
    with pytest.raises(UnknownFunctionError):
        chain.function("F9")


def test_request_deadline_positive(chain):
    with pytest.raises(ValueError):
        Request(chain, 1, 1, 0)


def test_instances_of_and_unknown_function():
    d = Deployment({FunctionInstance(1, "A"), FunctionInstance(2, "A"), FunctionInstance(1, "B")})
    assert instances_of(d, "A") == {FunctionInstance(1, "A"), FunctionInstance(2, "A")}
    assert d.devices_hosting("A") == [1, 2]
    with pytest.raises(UnknownFunctionError):
        instances_of(d, "C")


def test_deploy_instances_echoes_plan(topo):
    d = deploy_instances(topo, table3_chain(), 2, PLAN)
    assert len(d) == 8
    assert {(i.function, i.device) for i in d.instances} == {
        (f, dev) for f, devs in PLAN.levels[2].items() for dev in devs
    }


def test_larger_counts_nest(topo):
    small = deploy_instances(topo, table3_chain(), 1, PLAN)
    big = deploy_instances(topo, table3_chain(), 2, PLAN)
    assert small <= big and small < big


def test_colocation_adds_every_function(topo):
    d = deploy_instances(topo, table3_chain(), 1, PLAN, colocate_on=3)
    assert all(3 in d.devices_hosting(f) for f in table3_chain().function_ids)
    assert len(d) == 4 + 3  # F3 already lived on device 3


def test_plan_must_nest():
    with pytest.raises(ValueError):
        DeploymentPlan({1: {"F1": (1,)}, 2: {"F1": (2, 3)}})
    with pytest.raises(ValueError):
        DeploymentPlan({2: {"F1": (1, 1)}})


def test_plan_errors(topo):
    with pytest.raises(ValueError):
        deploy_instances(topo, table3_chain(), 3, PLAN)
    bad = DeploymentPlan({1: {"F1": (9,), "F2": (1,), "F3": (1,), "F4": (1,)}})
    with pytest.raises(UnknownDeviceError):
        deploy_instances(topo, table3_chain(), 1, bad)
    partial = DeploymentPlan({1: {"F1": (1,)}})
    with pytest.raises(UnknownFunctionError):
        deploy_instances(topo, table3_chain(), 1, partial)
