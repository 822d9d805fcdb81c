"""Completion time and energy of transfers, executions and placements.

Durations are kept in ms and energies are returned in J (W x s).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import Infeasible, InfeasibleExecution, InfeasibleTransfer
from .infrastructure import available_bandwidth, available_compute, dynamic_power, shortest_path

MS_TO_S = 1e-3


class MarginalMode(str, Enum):
    # power added by the execution: P(u_after) - P(u_before)
    INCREMENT = "increment"
    # power curve evaluated at the utilization delta: P(u_after - u_before)
    LITERAL = "literal"


def _joules(watts, duration_ms):
    return watts * duration_ms * MS_TO_S


def transmission_time(dataflow, path, load_state):
    total = 0.0
    for hop in path.hops:
        total += _hop_time(dataflow, hop, load_state)
    return total


def _hop_time(dataflow, hop, load_state):
    size = dataflow.data_size_mb
    if size == 0:
        return hop.propagation_delay_ms
    bw = available_bandwidth(hop, load_state)
    if bw <= 0:
        raise InfeasibleTransfer(f"link {hop.key!r} has no available bandwidth")
    return hop.propagation_delay_ms + size / bw


def link_energy(dataflow, path, load_state):
    total = 0.0
    for hop in path.hops:
        total += _joules(hop.idle_w + hop.dyn_w, _hop_time(dataflow, hop, load_state))
    return total


def execution_time(function, device, load_state):
    cap = available_compute(device, load_state)
    if cap <= 0:
        raise InfeasibleExecution(f"device {device.id!r} has no available compute")
    return function.compute_size_mi / cap


def utilization_after(device, load_state):
    """Utilization once one more core is busy with the new instance."""
    u = load_state.device(device.id)
    if u >= 1.0:
        raise InfeasibleExecution(f"device {device.id!r} is fully utilized")
    return min(1.0, u + 1.0 / device.cores)


def device_energy_overall(function, device, load_state):
    duration = execution_time(function, device, load_state)
    watts = device.power.idle_w + dynamic_power(device.power, utilization_after(device, load_state))
    return _joules(watts, duration)


def device_energy_marginal(function, device, load_state, mode=MarginalMode.INCREMENT):
    u = load_state.device(device.id)
    if u == 0.0:
        return device_energy_overall(function, device, load_state)
    duration = execution_time(function, device, load_state)
    u_after = utilization_after(device, load_state)
    if MarginalMode(mode) is MarginalMode.LITERAL:
        watts = dynamic_power(device.power, u_after - u)
    else:
        watts = dynamic_power(device.power, u_after) - dynamic_power(device.power, u)
    return _joules(watts, duration)


@dataclass(frozen=True)
class PlacementEvaluation:
    feasible: bool
    completion_ms: float = float("nan")
    energy_overall_j: float = float("nan")
    energy_marginal_j: float = float("nan")
    cause: str | None = None

    def energy(self, objective):
        return self.energy_overall_j if Objective(objective) is Objective.OVERALL else self.energy_marginal_j


class Objective(str, Enum):
    OVERALL = "overall"
    MARGINAL = "marginal"


def evaluate_placement(request, placement, topology, load_state, marginal_mode=MarginalMode.INCREMENT):
    """Completion time and both energy totals of one placement.

    ``placement`` lists one function instance per chain function, in chain
    order. Every term is computed against the pre-request load state.
    """
    chain = request.service
    if len(placement) != len(chain.functions):
        raise ValueError(
            f"placement has {len(placement)} instances for a chain of {len(chain.functions)}"
        )
    for inst, f in zip(placement, chain.functions):
        if inst.function != f.id:
            raise ValueError(f"instance {inst} does not run function {f.id!r}")

    route = [request.begin_device] + [i.device for i in placement] + [request.end_device]
    completion = 0.0
    link_j = 0.0
    exec_overall = 0.0
    exec_marginal = 0.0
    try:
        for src, dst, flow in zip(route, route[1:], chain.dataflows):
            path = shortest_path(topology, load_state, src, dst)
            completion += transmission_time(flow, path, load_state)
            link_j += link_energy(flow, path, load_state)
        for inst, f in zip(placement, chain.functions):
            dev = topology.device(inst.device)
            completion += execution_time(f, dev, load_state)
            exec_overall += device_energy_overall(f, dev, load_state)
            exec_marginal += device_energy_marginal(f, dev, load_state, marginal_mode)
    except Infeasible as exc:
        return PlacementEvaluation(feasible=False, cause=f"{exc.cause}: {exc}")
    return PlacementEvaluation(
        feasible=True,
        completion_ms=completion,
        energy_overall_j=link_j + exec_overall,
        energy_marginal_j=link_j + exec_marginal,
    )
