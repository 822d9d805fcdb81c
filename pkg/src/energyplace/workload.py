"""Services, requests and where their function instances live."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping

from .errors import UnknownDeviceError, UnknownFunctionError


@dataclass(frozen=True)
class FunctionSpec:
    id: Hashable
    compute_size_mi: float

    def __post_init__(self):
        if not self.compute_size_mi > 0:
            raise ValueError(f"function {self.id!r}: compute size must be > 0")


@dataclass(frozen=True)
class DataflowSpec:
    data_size_mb: float

    def __post_init__(self):
        if self.data_size_mb < 0:
            raise ValueError("dataflow size must be >= 0")


@dataclass(frozen=True)
class ServiceChain:
    """Ordered functions with one dataflow before each and one at the end.

    ``dataflows[i]`` feeds ``functions[i]``; the last dataflow carries the
    result back to the request's end device.
    """

    functions: tuple
    dataflows: tuple

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "dataflows", tuple(self.dataflows))
        if len(self.dataflows) != len(self.functions) + 1:
            raise ValueError(
                f"a chain of {len(self.functions)} functions needs "
                f"{len(self.functions) + 1} dataflows, got {len(self.dataflows)}"
            )
        ids = [f.id for f in self.functions]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate function ids in chain: {ids}")

    @property
    def function_ids(self):
        return tuple(f.id for f in self.functions)

    def function(self, function_id):
        for f in self.functions:
            if f.id == function_id:
                return f
        raise UnknownFunctionError(f"unknown function {function_id!r}")

    def position(self, function_id):
        """1-based position of a function in the chain."""
        return self.function_ids.index(self.function(function_id).id) + 1

    def __len__(self):
        return len(self.functions)


@dataclass(frozen=True)
class Request:
    service: ServiceChain
    begin_device: Hashable
    end_device: Hashable
    deadline_ms: float
    arrival_ms: float = 0.0  # bookkeeping only; placement is a single decision point

    def __post_init__(self):
        if not self.deadline_ms > 0:
            raise ValueError("deadline must be > 0 ms")


@dataclass(frozen=True, order=True)
class FunctionInstance:
    device: Hashable
    function: Hashable


@dataclass(frozen=True)
class Deployment:
    instances: frozenset

    def __post_init__(self):
        object.__setattr__(self, "instances", frozenset(self.instances))

    def __contains__(self, inst):
        return inst in self.instances

    def __len__(self):
        return len(self.instances)

    def __le__(self, other):
        return self.instances <= other.instances

    def __lt__(self, other):
        return self.instances < other.instances

    def devices_hosting(self, function_id):
        return sorted(i.device for i in self.instances if i.function == function_id)

    def with_instances(self, extra):
        return Deployment(self.instances | frozenset(extra))


def instances_of(deployment, function_id):
    found = {i for i in deployment.instances if i.function == function_id}
    if not found:
        raise UnknownFunctionError(f"no instance deployed for function {function_id!r}")
    return found


@dataclass(frozen=True)
class DeploymentPlan:
    """Explicit device lists per instance count: ``levels[count][function]``.

    Lists are cumulative: the devices for a larger count start with the
    devices of every smaller count, so growing the count never moves an
    already deployed instance.
    """

    levels: Mapping

    def __post_init__(self):
        counts = sorted(self.levels)
        for lo, hi in zip(counts, counts[1:]):
            for f, devs in self.levels[lo].items():
                if f not in self.levels[hi]:
                    raise ValueError(f"plan level {hi} drops function {f!r}")
                if not set(devs) <= set(self.levels[hi][f]):
                    raise ValueError(
                        f"plan level {hi} moves instances of {f!r} deployed at level {lo}"
                    )
        for count, table in self.levels.items():
            for f, devs in table.items():
                if len(set(devs)) != len(devs):
                    raise ValueError(f"plan level {count}: duplicate device for {f!r}")

    @property
    def counts(self):
        return tuple(sorted(self.levels))


def deploy_instances(topology, chain, count_per_function, plan, colocate_on=None):
    """Instantiate the plan's ``count_per_function`` level for ``chain``.

    ``colocate_on`` adds an instance of every chain function on that device
    (no-op for functions already hosted there).
    """
    if count_per_function not in plan.levels:
        raise ValueError(
            f"plan has no level for {count_per_function} instances per function "
            f"(available: {list(plan.counts)})"
        )
    table = plan.levels[count_per_function]
    instances = set()
    for f in chain.function_ids:
        if f not in table:
            raise UnknownFunctionError(f"plan level {count_per_function} has no devices for {f!r}")
        for dev in table[f]:
            if dev not in topology.devices:
                raise UnknownDeviceError(f"plan places {f!r} on unknown device {dev!r}")
            inst = FunctionInstance(dev, f)
            if inst in instances:
                raise ValueError(f"duplicate instance {inst}")
            instances.add(inst)
    for f in table:
        if f not in chain.function_ids:
            raise UnknownFunctionError(f"plan references function {f!r} not in the chain")
    if colocate_on is not None:
        topology.device(colocate_on)
        instances |= {FunctionInstance(colocate_on, f) for f in chain.function_ids}
    return Deployment(frozenset(instances))
