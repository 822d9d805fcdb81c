"""Physical edge infrastructure: devices, links, power profiles and load.

Units used throughout the package: compute in MI, compute capacity in
MI/ms, data in MB, bandwidth in MB/ms, delays in ms, power in W.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Hashable, Mapping

from .errors import NoPathError, UnknownDeviceError, UnknownLinkError

DeviceId = Hashable
LinkKey = tuple  # (a, b) as listed in the topology

# delays that differ by less than this are treated as equal for tie-breaking
DELAY_TOL = 1e-12


@dataclass(frozen=True)
class DevicePowerProfile:
    """Idle power plus a piecewise-linear dynamic power curve.

    ``dyn_breakpoints_w[j]`` is the dynamic power drawn with ``j`` of the
    ``k`` cores busy, so the list has ``k + 1`` entries and starts at 0.
    """

    idle_w: float
    dyn_breakpoints_w: tuple

    def __post_init__(self):
        bp = tuple(float(p) for p in self.dyn_breakpoints_w)
        object.__setattr__(self, "dyn_breakpoints_w", bp)
        if len(bp) < 2:
            raise ValueError("a power profile needs at least two breakpoints")
        if bp[0] != 0.0:
            raise ValueError("dynamic power at zero cores must be 0 W")
        if any(b < a for a, b in zip(bp, bp[1:])):
            raise ValueError("dynamic power breakpoints must be non-decreasing")
        if self.idle_w < 0:
            raise ValueError("idle power must be non-negative")

    @property
    def cores(self):
        return len(self.dyn_breakpoints_w) - 1

    @classmethod
    def linear(cls, idle_w, full_dyn_w, cores):
        return cls(idle_w, tuple(full_dyn_w * j / cores for j in range(cores + 1)))


@dataclass(frozen=True)
class EdgeDevice:
    id: DeviceId
    compute_capacity: float
    cores: int
    power: DevicePowerProfile

    def __post_init__(self):
        if not self.compute_capacity > 0:
            raise ValueError(f"device {self.id!r}: compute capacity must be > 0")
        if int(self.cores) != self.cores or self.cores < 1:
            raise ValueError(f"device {self.id!r}: cores must be a positive integer")
        if self.power.cores != self.cores:
            raise ValueError(
                f"device {self.id!r}: power profile has {self.power.cores + 1} "
                f"breakpoints, expected cores + 1 = {self.cores + 1}"
            )


@dataclass(frozen=True)
class NetworkLink:
    a: DeviceId
    b: DeviceId
    propagation_delay_ms: float
    bandwidth: float
    idle_w: float
    dyn_w: float

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"link {self.key}: self loops are not allowed")
        if self.propagation_delay_ms < 0:
            raise ValueError(f"link {self.key}: negative propagation delay")
        if not self.bandwidth > 0:
            raise ValueError(f"link {self.key}: bandwidth must be > 0")
        if self.idle_w < 0 or self.dyn_w < 0:
            raise ValueError(f"link {self.key}: negative power")

    @property
    def key(self):
        return (self.a, self.b)

    @property
    def endpoints(self):
        return (self.a, self.b)

    def other(self, device):
        return self.b if device == self.a else self.a


@dataclass(frozen=True)
class PathDescriptor:
    """A physical route: the hops taken and the devices visited in order."""

    hops: tuple
    devices: tuple
    total_delay_ms: float

    def __len__(self):
        return len(self.hops)


@dataclass(frozen=True)
class LoadState:
    """Utilization fractions in [0, 1] for every device and link."""

    device_utilization: Mapping
    link_utilization: Mapping

    def __post_init__(self):
        for name, values in (("device", self.device_utilization), ("link", self.link_utilization)):
            for k, u in values.items():
                if not (0.0 <= u <= 1.0) or math.isnan(u):
                    raise ValueError(f"{name} {k!r}: utilization {u} outside [0, 1]")

    def device(self, device_id):
        try:
            return self.device_utilization[device_id]
        except KeyError:
            raise UnknownDeviceError(f"no utilization for device {device_id!r}") from None

    def link(self, link_key):
        try:
            return self.link_utilization[link_key]
        except KeyError:
            raise UnknownLinkError(f"no utilization for link {link_key!r}") from None

    @classmethod
    def uniform(cls, topology, device_u=0.0, link_u=0.0):
        return cls(
            {d: device_u for d in topology.devices},
            {l.key: link_u for l in topology.links},
        )

    def check_covers(self, topology):
        missing = [d for d in topology.devices if d not in self.device_utilization]
        missing += [l.key for l in topology.links if l.key not in self.link_utilization]
        if missing:
            raise ValueError(f"load state has no entry for {missing!r}")


class Topology:
    """Immutable device/link graph with a precomputed shortest-path table.

    Links are traversable in both directions. Paths minimise propagation
    delay only; ties go to the lexicographically smallest device sequence.
    """

    def __init__(self, devices, links, require_connected=True):
        self._devices = {}
        for d in devices:
            if d.id in self._devices:
                raise ValueError(f"duplicate device id {d.id!r}")
            self._devices[d.id] = d
        self._links = {}
        self._adjacent = {d: [] for d in self._devices}
        for l in links:
            for end in l.endpoints:
                if end not in self._devices:
                    raise UnknownDeviceError(f"link {l.key!r} references unknown device {end!r}")
            pair = frozenset(l.endpoints)
            if l.key in self._links or any(frozenset(k) == pair for k in self._links):
                raise ValueError(f"duplicate link between {l.a!r} and {l.b!r}")
            self._links[l.key] = l
            self._adjacent[l.a].append(l)
            self._adjacent[l.b].append(l)
        self._paths = {src: self._dijkstra(src) for src in self._devices}
        unreachable = [
            (s, t) for s in self._devices for t in self._devices if t not in self._paths[s]
        ]
        self._connected = not unreachable
        if require_connected and unreachable:
            s, t = unreachable[0]
            raise NoPathError(f"topology is not connected: no path from {s!r} to {t!r}")

    @property
    def devices(self):
        return self._devices

    @property
    def links(self):
        return tuple(self._links.values())

    @property
    def device_ids(self):
        return tuple(sorted(self._devices))

    @property
    def is_connected(self):
        return self._connected

    def device(self, device_id):
        try:
            return self._devices[device_id]
        except KeyError:
            raise UnknownDeviceError(f"unknown device {device_id!r}") from None

    def link(self, key):
        try:
            return self._links[key]
        except KeyError:
            raise UnknownLinkError(f"unknown link {key!r}") from None

    def _dijkstra(self, src):
        # labels are (delay, device sequence); sequences order the ties
        best = {src: (0.0, (src,), ())}
        heap = [(0.0, (src,))]
        done = set()
        while heap:
            delay, seq = heapq.heappop(heap)
            node = seq[-1]
            if node in done or best[node][1] != seq:
                continue
            hops = best[node][2]
            done.add(node)
            for link in sorted(self._adjacent[node], key=lambda l: l.other(node)):
                nxt = link.other(node)
                if nxt in done:
                    continue
                cand = (delay + link.propagation_delay_ms, seq + (nxt,), hops + (link,))
                cur = best.get(nxt)
                if (
                    cur is None
                    or cand[0] < cur[0] - DELAY_TOL
                    or (abs(cand[0] - cur[0]) <= DELAY_TOL and cand[1] < cur[1])
                ):
                    best[nxt] = cand
                    heapq.heappush(heap, (cand[0], cand[1]))
        return {
            dst: PathDescriptor(hops=hops, devices=seq, total_delay_ms=delay)
            for dst, (delay, seq, hops) in best.items()
        }


def shortest_path(topology, load_state, src, dst):
    """Minimum propagation-delay path from ``src`` to ``dst``.

    ``load_state`` is accepted for interface symmetry; routing ignores load.
    """
    topology.device(src)
    topology.device(dst)
    path = topology._paths[src].get(dst)
    if path is None:
        raise NoPathError(f"no path from {src!r} to {dst!r}")
    return path


def available_bandwidth(link, load_state):
    return (1.0 - load_state.link(link.key)) * link.bandwidth


def available_compute(device, load_state):
    """Capacity a new function instance gets: one core, or whatever is left."""
    u = load_state.device(device.id)
    return min(device.compute_capacity / device.cores, (1.0 - u) * device.compute_capacity)


def dynamic_power(profile, u):
    """Piecewise-linear dynamic power at utilization ``u``."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"utilization {u} outside [0, 1]")
    k = profile.cores
    p = profile.dyn_breakpoints_w
    j = min(int(math.floor(u * k)), k - 1)
    return (p[j + 1] - p[j]) * k * u + ((j + 1) * p[j] - j * p[j + 1])
