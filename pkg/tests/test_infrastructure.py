import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from energyplace.errors import NoPathError, UnknownDeviceError, UnknownLinkError
from energyplace.infrastructure import (
    DevicePowerProfile,
    LoadState,
    Topology,
    available_bandwidth,
    available_compute,
    dynamic_power,
    shortest_path,
)

from conftest import PARASILO_LIKE, device, link, make_topology


def brute_force_paths(topology, src, dst):
    """Every simple path as (delay, device sequence), by enumeration."""
    ids = topology.device_ids
    by_pair = {frozenset(l.endpoints): l for l in topology.links}
    found = []
    others = [d for d in ids if d not in (src, dst)]
    for k in range(len(others) + 1):
        for middle in itertools.permutations(others, k):
            seq = (src, *middle, dst)
            pairs = [frozenset(p) for p in zip(seq, seq[1:])]
            if all(p in by_pair for p in pairs):
                found.append((sum(by_pair[p].propagation_delay_ms for p in pairs), seq))
    return found


@pytest.fixture
def triangle():
    return make_topology(3, [(1, 2, 0.5), (2, 3, 0.5), (1, 3, 1.2)])


def test_same_device_is_empty_path(triangle):
    p = shortest_path(triangle, None, 2, 2)
    assert p.hops == () and p.total_delay_ms == 0


def test_triangle_prefers_two_short_hops(triangle):
    p = shortest_path(triangle, None, 1, 3)
    assert [h.key for h in p.hops] == [(1, 2), (2, 3)]
    assert p.total_delay_ms == pytest.approx(1.0)
    delay, seq = min(brute_force_paths(triangle, 1, 3))
    assert p.devices == seq and p.total_delay_ms == pytest.approx(delay)


def test_single_link():
    topo = make_topology(2, [(1, 2, 0.8)])
    p = shortest_path(topo, None, 1, 2)
    assert [h.key for h in p.hops] == [(1, 2)] and p.total_delay_ms == 0.8


def test_unknown_device(triangle):
    with pytest.raises(UnknownDeviceError):
        shortest_path(triangle, None, 1, 9)


def test_disconnected():
    with pytest.raises(NoPathError):
        make_topology(3, [(1, 2, 1.0)])
    topo = Topology([device(1), device(2), device(3)], [link(1, 2, 1.0)], require_connected=False)
    with pytest.raises(NoPathError):
        shortest_path(topo, None, 1, 3)


def test_equal_delay_tie_goes_to_smallest_sequence():
    # 1-2-4 and 1-3-4 both take 2 ms
    topo = make_topology(4, [(1, 3, 1.0), (3, 4, 1.0), (1, 2, 1.0), (2, 4, 1.0)])
    assert shortest_path(topo, None, 1, 4).devices == (1, 2, 4)
    assert shortest_path(topo, None, 4, 1).devices == (4, 2, 1)


@st.composite
def random_topology(draw):
    n = draw(st.integers(2, 6))
    edges = []
    for i in range(2, n + 1):  # spanning tree keeps it connected
        edges.append((draw(st.integers(1, i - 1)), i))
    for a, b in itertools.combinations(range(1, n + 1), 2):
        if (a, b) not in edges and draw(st.booleans()):
            edges.append((a, b))
    delays = st.sampled_from([0.0, 0.25, 0.5, 1.0, 1.5, 2.0])
    return make_topology(n, [(a, b, draw(delays)) for a, b in edges])


@settings(max_examples=60, deadline=None)
@given(random_topology())
def test_paths_match_enumeration_and_triangle_inequality(topo):
    ids = topo.device_ids
    for s, t in itertools.product(ids, ids):
        p = shortest_path(topo, None, s, t)
        assert p.total_delay_ms == pytest.approx(sum(h.propagation_delay_ms for h in p.hops))
        for a, b in zip(p.devices, p.devices[1:]):
            assert {a, b} == set(p.hops[p.devices.index(a)].endpoints)
        if s != t:
            best = min(brute_force_paths(topo, s, t), key=lambda c: (round(c[0], 9), c[1]))
            assert p.devices == best[1]
    for a, b, c in itertools.product(ids, repeat=3):
        assert shortest_path(topo, None, a, c).total_delay_ms <= (
            shortest_path(topo, None, a, b).total_delay_ms
            + shortest_path(topo, None, b, c).total_delay_ms + 1e-9
        )


@pytest.mark.parametrize("u, expected", [(0.0, 500.0), (0.5, 250.0), (1.0, 0.0)])
def test_available_bandwidth(u, expected):
    topo = make_topology(2, [(1, 2, 0.8)])
    load = LoadState.uniform(topo, link_u=u)
    assert available_bandwidth(topo.link((1, 2)), load) == expected


def test_available_bandwidth_unknown_link():
    topo = make_topology(2, [(1, 2, 0.8)])
    with pytest.raises(UnknownLinkError):
        available_bandwidth(topo.link((1, 2)), LoadState({1: 0, 2: 0}, {}))


@pytest.mark.parametrize("u, expected", [(0.0, 31.25), (0.99, 5.0), (1.0, 0.0)])
def test_available_compute(u, expected):
    assert available_compute(device(1), LoadState({1: u}, {})) == pytest.approx(expected)


def test_available_compute_unknown_device():
    with pytest.raises(UnknownDeviceError):
        available_compute(device(1), LoadState({2: 0.0}, {}))


@given(st.floats(0, 1), st.floats(0, 1))
def test_capacities_non_increasing_in_load(u1, u2):
    lo, hi = sorted((u1, u2))
    d = device(1)
    assert available_compute(d, LoadState({1: hi}, {})) <= available_compute(d, LoadState({1: lo}, {}))
    topo = make_topology(2, [(1, 2, 0.8)])
    l = topo.link((1, 2))
    assert available_bandwidth(l, LoadState({}, {(1, 2): hi})) <= available_bandwidth(
        l, LoadState({}, {(1, 2): lo})
    )


def test_dynamic_power_values():
    assert dynamic_power(PARASILO_LIKE, 0.0) == 0.0
    assert dynamic_power(PARASILO_LIKE, 1.0) == pytest.approx(143.0)
    assert dynamic_power(PARASILO_LIKE, 1 / 16) == pytest.approx(8.9375)


def test_dynamic_power_rejects_out_of_range():
    with pytest.raises(ValueError):
        dynamic_power(PARASILO_LIKE, 1.01)
    with pytest.raises(ValueError):
        dynamic_power(PARASILO_LIKE, -0.1)


concave = st.lists(st.floats(0, 50), min_size=1, max_size=8).map(
    lambda steps: DevicePowerProfile(90.0, tuple(np.concatenate([[0.0], np.cumsum(steps)])))
)


@settings(max_examples=80)
@given(concave, st.floats(0, 1))
def test_dynamic_power_matches_interpolation(profile, u):
    k = profile.cores
    expected = np.interp(u, np.arange(k + 1) / k, profile.dyn_breakpoints_w)
    assert dynamic_power(profile, u) == pytest.approx(expected, abs=1e-9)


@settings(max_examples=50)
@given(concave)
def test_dynamic_power_continuous_and_monotone(profile):
    k = profile.cores
    p = profile.dyn_breakpoints_w
    for j in range(1, k):
        u = j / k
        left = (p[j] - p[j - 1]) * k * u + (j * p[j - 1] - (j - 1) * p[j])
        right = (p[j + 1] - p[j]) * k * u + ((j + 1) * p[j] - j * p[j + 1])
        assert left == pytest.approx(right) == pytest.approx(p[j])
    grid = np.linspace(0, 1, 101)
    values = [dynamic_power(profile, u) for u in grid]
    assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))


def test_profile_invariants():
    with pytest.raises(ValueError):
        DevicePowerProfile(98, (1.0, 2.0))
    with pytest.raises(ValueError):
        DevicePowerProfile(98, (0.0, 2.0, 1.0))
    with pytest.raises(ValueError):
        device(1, cores=8)  # 17 breakpoints for 8 cores


def test_load_state_range_checked():
    with pytest.raises(ValueError):
        LoadState({1: 1.2}, {})
