import pytest

from energyplace.config import parse_scenario
from energyplace.infrastructure import DevicePowerProfile, EdgeDevice, LoadState, NetworkLink, Topology
from energyplace.workload import DataflowSpec, FunctionSpec, ServiceChain

PARASILO_LIKE = DevicePowerProfile.linear(98.0, 143.0, 16)


def device(i, capacity=500.0, cores=16, profile=PARASILO_LIKE):
    return EdgeDevice(i, capacity, cores, profile)


def link(a, b, delay, bandwidth=500.0, idle=1.0, dyn=9.0):
    return NetworkLink(a, b, delay, bandwidth, idle, dyn)


def make_topology(n, edges, **kw):
    return Topology([device(i, **kw) for i in range(1, n + 1)], [link(*e) for e in edges])


def idle_load(topology):
    return LoadState.uniform(topology)


def table3_chain():
    return ServiceChain(
        tuple(FunctionSpec(f"F{i}", mi) for i, mi in enumerate((20, 200, 200, 20), start=1)),
        tuple(DataflowSpec(s) for s in (250, 500, 750, 500, 250)),
    )


@pytest.fixture(scope="session")
def scenario():
    return parse_scenario()


@pytest.fixture
def chain():
    return table3_chain()


def small_instance(draw, st, max_devices=5, max_functions=4, max_instances=3):
    """Hypothesis helper: a random connected topology, load, deployment and request."""
    from energyplace.solver import build_instance_graph
    from energyplace.workload import Deployment, FunctionInstance, Request

    n = draw(st.integers(2, max_devices))
    edges = [(draw(st.integers(1, i - 1)), i) for i in range(2, n + 1)]
    delays = st.sampled_from([0.0, 0.5, 1.0, 2.0, 5.0])
    topo = make_topology(n, [(a, b, draw(delays)) for a, b in edges])
    util = st.sampled_from([0.0, 0.0, 0.1, 0.3, 0.5, 0.8, 0.95, 1.0])
    load = LoadState(
        {d: draw(util) for d in topo.device_ids},
        {l.key: draw(st.sampled_from([0.0, 0.2, 0.5])) for l in topo.links},
    )
    k = draw(st.integers(1, max_functions))
    chain = ServiceChain(
        tuple(FunctionSpec(f"F{i}", draw(st.sampled_from([20, 50, 200]))) for i in range(1, k + 1)),
        tuple(DataflowSpec(draw(st.sampled_from([0, 250, 500, 750]))) for _ in range(k + 1)),
    )
    instances = set()
    for f in chain.function_ids:
        devs = draw(st.lists(st.integers(1, n), min_size=1, max_size=max_instances, unique=True))
        instances |= {FunctionInstance(d, f) for d in devs}
    begin = draw(st.integers(1, n))
    deadline = draw(st.sampled_from([5.0, 20.0, 40.0, 100.0]))
    req = Request(chain, begin, begin, deadline)
    return build_instance_graph(topo, Deployment(frozenset(instances)), req, load)


ACCEPTANCE = []  # (criterion, passed, detail), filled by test_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
