"""Exact request placement over the function-instance graph.

The instance graph has one node per deployed function instance plus a
virtual begin and end node. Arcs only join instances of consecutive chain
functions, so every begin-to-end path is a candidate placement and the
search is a resource-constrained shortest path over the chain's layers,
solved here by depth-first branch and bound.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum

from .errors import ConsistencyError, Infeasible, OracleCapExceeded
from .infrastructure import shortest_path
from .metrics import (
    MarginalMode,
    Objective,
    PlacementEvaluation,
    device_energy_marginal,
    device_energy_overall,
    evaluate_placement,
    execution_time,
    link_energy,
    transmission_time,
)
from .workload import FunctionInstance

BEGIN = "<begin>"
END = "<end>"

# absolute tolerance (J) under which two objective values count as tied
ENERGY_TOL = 1e-9
ORACLE_TOL = 1e-9
DEFAULT_ORACLE_CAP = 10**6


class Status(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


class Category(str, Enum):
    INFEASIBLE = "infeasible"
    SAME = "same"
    DIFFERENT = "different"


@dataclass(frozen=True)
class PlacementOutcome:
    status: Status
    objective: Objective
    placement: tuple = ()
    evaluation: PlacementEvaluation | None = None
    objective_value: float = float("nan")
    solver_time_ms: float = 0.0
    cause: str | None = None

    @property
    def feasible(self):
        return self.status is Status.FEASIBLE

    @property
    def devices(self):
        return tuple(i.device for i in self.placement)


@dataclass
class InstanceGraph:
    request: object
    topology: object
    load_state: object
    deployment: object
    marginal_mode: MarginalMode
    begin: FunctionInstance
    end: FunctionInstance
    layers: tuple
    arc_latency: dict = field(default_factory=dict)
    arc_energy: dict = field(default_factory=dict)
    node_latency: dict = field(default_factory=dict)
    node_energy_overall: dict = field(default_factory=dict)
    node_energy_marginal: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)
    infeasible_function: object = None

    @property
    def chain(self):
        return self.request.service

    @property
    def nodes(self):
        return (self.begin,) + tuple(itertools.chain.from_iterable(self.layers)) + (self.end,)

    @property
    def instance_nodes(self):
        return tuple(itertools.chain.from_iterable(self.layers))

    @property
    def arcs(self):
        return tuple(self.arc_latency)

    @property
    def beta(self):
        return len(self.chain.functions) + 2

    def order(self, function_id):
        return self.chain.position(function_id)

    def membership(self, node, function_id):
        return int(node.function == function_id)

    def node_energy(self, objective):
        if Objective(objective) is Objective.OVERALL:
            return self.node_energy_overall
        return self.node_energy_marginal

    def without(self, node):
        """Copy of the graph with one instance node and its arcs removed."""
        layers = tuple(tuple(n for n in layer if n != node) for layer in self.layers)
        g = InstanceGraph(
            self.request, self.topology, self.load_state, self.deployment, self.marginal_mode,
            self.begin, self.end, layers,
            {a: v for a, v in self.arc_latency.items() if node not in a},
            {a: v for a, v in self.arc_energy.items() if node not in a},
            {n: v for n, v in self.node_latency.items() if n != node},
            {n: v for n, v in self.node_energy_overall.items() if n != node},
            {n: v for n, v in self.node_energy_marginal.items() if n != node},
            {**self.excluded, node: "removed"},
            self.infeasible_function,
        )
        if g.infeasible_function is None:
            for f, layer in zip(self.chain.function_ids, layers):
                if not layer:
                    g.infeasible_function = f
                    break
        return g


def build_instance_graph(topology, deployment, request, load_state, marginal_mode=MarginalMode.INCREMENT):
    chain = request.service
    begin = FunctionInstance(request.begin_device, BEGIN)
    end = FunctionInstance(request.end_device, END)
    g = InstanceGraph(
        request, topology, load_state, deployment, MarginalMode(marginal_mode), begin, end, ()
    )
    layers = []
    for f in chain.functions:
        layer = []
        for dev_id in deployment.devices_hosting(f.id):
            node = FunctionInstance(dev_id, f.id)
            dev = topology.device(dev_id)
            try:
                g.node_latency[node] = execution_time(f, dev, load_state)
                g.node_energy_overall[node] = device_energy_overall(f, dev, load_state)
                g.node_energy_marginal[node] = device_energy_marginal(
                    f, dev, load_state, g.marginal_mode
                )
            except Infeasible as exc:
                g.excluded[node] = exc.cause
                for d in (g.node_latency, g.node_energy_overall, g.node_energy_marginal):
                    d.pop(node, None)
                continue
            layer.append(node)
        if not layer and g.infeasible_function is None:
            g.infeasible_function = f.id
        layers.append(tuple(layer))
    g.layers = tuple(layers)

    stages = [(begin,)] + layers + [(end,)]
    for flow, froms, tos in zip(chain.dataflows, stages, stages[1:]):
        for a in froms:
            for b in tos:
                path = shortest_path(topology, load_state, a.device, b.device)
                try:
                    lat = transmission_time(flow, path, load_state)
                    energy = link_energy(flow, path, load_state)
                except Infeasible as exc:
                    g.excluded[(a, b)] = exc.cause
                    continue
                g.arc_latency[(a, b)] = lat
                g.arc_energy[(a, b)] = energy
    return g


def _infeasible(objective, cause, started):
    return PlacementOutcome(
        status=Status.INFEASIBLE,
        objective=Objective(objective),
        solver_time_ms=(time.perf_counter() - started) * 1e3,
        cause=cause,
    )


def _pick(candidates, tol):
    """Lexicographically smallest device sequence among the optimal ones."""
    best = min(v for v, _ in candidates)
    tied = [p for v, p in candidates if v <= best + tol]
    chosen = min(tied, key=lambda p: tuple(i.device for i in p))
    value = next(v for v, p in candidates if p == chosen)
    return chosen, value


def solve_exact(graph, objective, deadline_ms=None, tol=None):
    """Minimum-energy placement meeting the deadline, by branch and bound.

    Ties within ``tol`` J are broken by the smallest device-id sequence.
    """
    started = time.perf_counter()
    objective = Objective(objective)
    tol = ENERGY_TOL if tol is None else tol
    deadline = graph.request.deadline_ms if deadline_ms is None else deadline_ms
    if graph.infeasible_function is not None:
        return _infeasible(objective, f"no usable instance of {graph.infeasible_function!r}", started)

    node_cost = graph.node_energy(objective)
    arc_e = graph.arc_energy
    arc_l = graph.arc_latency
    node_l = graph.node_latency
    layers = graph.layers
    n = len(layers)
    end = graph.end

    # cheapest cost and shortest latency from each node to the end, excluding the node itself
    cost_to_go = {end: 0.0}
    lat_to_go = {end: 0.0}
    nxt = (end,)
    for layer in reversed(layers):
        for a in layer:
            best_c = best_l = math.inf
            for b in nxt:
                if (a, b) not in arc_e:
                    continue
                extra_c = 0.0 if b is end else node_cost[b]
                extra_l = 0.0 if b is end else node_l[b]
                best_c = min(best_c, arc_e[(a, b)] + extra_c + cost_to_go[b])
                best_l = min(best_l, arc_l[(a, b)] + extra_l + lat_to_go[b])
            cost_to_go[a] = best_c
            lat_to_go[a] = best_l
        nxt = layer

    incumbent = [math.inf]
    candidates = []

    def descend(i, prev, cost, lat, partial):
        if i == n:
            key = (prev, end)
            if key not in arc_e:
                return
            c = cost + arc_e[key]
            l = lat + arc_l[key]
            if l <= deadline and c <= incumbent[0] + tol:
                candidates.append((c, tuple(partial)))
                incumbent[0] = min(incumbent[0], c)
            return
        for node in layers[i]:
            key = (prev, node)
            if key not in arc_e:
                continue
            c = cost + arc_e[key] + node_cost[node]
            l = lat + arc_l[key] + node_l[node]
            if l + lat_to_go[node] > deadline:
                continue
            if c + cost_to_go[node] > incumbent[0] + tol:
                continue
            partial.append(node)
            descend(i + 1, node, c, l, partial)
            partial.pop()

    descend(0, graph.begin, 0.0, 0.0, [])
    if not candidates:
        return _infeasible(objective, "no placement meets the deadline", started)
    placement, value = _pick(candidates, tol)
    elapsed = (time.perf_counter() - started) * 1e3
    evaluation = evaluate_placement(
        graph.request, placement, graph.topology, graph.load_state, graph.marginal_mode
    )
    return PlacementOutcome(
        status=Status.FEASIBLE,
        objective=objective,
        placement=placement,
        evaluation=evaluation,
        objective_value=value,
        solver_time_ms=elapsed,
    )


def _oracle_candidates(graph, cap):
    per_function = [
        sorted(FunctionInstance(d, f) for d in graph.deployment.devices_hosting(f))
        for f in graph.chain.function_ids
    ]
    count = math.prod(len(c) for c in per_function)
    if count > cap:
        raise OracleCapExceeded(f"{count} candidate placements exceed the oracle cap of {cap}")
    return per_function, count


def enumerate_oracle_all(graph, deadline_ms=None, cap=DEFAULT_ORACLE_CAP):
    """Evaluate every instance combination once and return the optimum per objective."""
    started = time.perf_counter()
    deadline = graph.request.deadline_ms if deadline_ms is None else deadline_ms
    per_function, _ = _oracle_candidates(graph, cap)
    feasible = []
    for combo in itertools.product(*per_function):
        ev = evaluate_placement(
            graph.request, combo, graph.topology, graph.load_state, graph.marginal_mode
        )
        if ev.feasible and ev.completion_ms <= deadline:
            feasible.append((combo, ev))
    elapsed = (time.perf_counter() - started) * 1e3
    out = {}
    for objective in Objective:
        if not feasible:
            out[objective] = PlacementOutcome(
                status=Status.INFEASIBLE, objective=objective, solver_time_ms=elapsed,
                cause="no placement meets the deadline",
            )
            continue
        placement, value = _pick([(ev.energy(objective), p) for p, ev in feasible], ORACLE_TOL)
        out[objective] = PlacementOutcome(
            status=Status.FEASIBLE,
            objective=objective,
            placement=placement,
            evaluation=dict(feasible)[placement],
            objective_value=value,
            solver_time_ms=elapsed,
        )
    return out


def enumerate_oracle(graph, objective, deadline_ms=None, cap=DEFAULT_ORACLE_CAP):
    """Exhaustive reference solver: evaluates every placement from scratch."""
    return enumerate_oracle_all(graph, deadline_ms, cap)[Objective(objective)]


def categorize(outcome_overall, outcome_marginal):
    if outcome_overall.status is not outcome_marginal.status:
        raise ConsistencyError(
            "feasibility differs between objectives "
            f"({outcome_overall.status.value} vs {outcome_marginal.status.value})"
        )
    if not outcome_overall.feasible:
        return Category.INFEASIBLE
    if outcome_overall.placement == outcome_marginal.placement:
        return Category.SAME
    return Category.DIFFERENT


CONSTRAINT_FAMILIES = (
    "arc_support",
    "flow_conservation",
    "one_instance_per_function",
    "selected_on_path",
    "single_visit",
    "order_bounds",
    "order_propagation",
    "chain_order",
    "deadline",
    "no_self_loop",
    "binary_domains",
)


def realize(graph, placement):
    """x/y/o assignment of the placement's route begin -> instances -> end."""
    route = [graph.begin, *placement, graph.end]
    beta = graph.beta
    x, o = {}, {}
    for k, arc in enumerate(zip(route, route[1:])):
        x[arc] = x.get(arc, 0) + 1
        o[arc] = o.get(arc, 0) + beta - 1 - k
    y = {node: 1 for node in placement}
    return x, y, o


def validate_placement(graph, outcome, deadline_ms=None):
    """Check the placement against every family of the integer program's constraints.

    Returns ``{family: passed}``; diagnostic only, never raises.
    """
    placement = tuple(outcome.placement)
    deadline = graph.request.deadline_ms if deadline_ms is None else deadline_ms
    x, y, o = realize(graph, placement)
    beta = graph.beta
    begin, end = graph.begin, graph.end
    instances = set(graph.instance_nodes) | set(placement)

    def into(node, vals=x, skip=()):
        return sum(v for (a, b), v in vals.items() if b == node and a not in skip)

    def out(node, vals=x):
        return sum(v for (a, b), v in vals.items() if a == node)

    v = {}
    v["arc_support"] = all(arc in graph.arc_latency for arc in x)
    v["flow_conservation"] = (
        all(into(n) == out(n) for n in instances)
        and into(begin) + 1 == out(begin)
        and into(end) == out(end) + 1
    )
    v["one_instance_per_function"] = all(
        sum(y.get(n, 0) * graph.membership(n, f) for n in instances) == 1
        for f in graph.chain.function_ids
    )
    v["selected_on_path"] = all(out(n) - y.get(n, 0) == 0 for n in instances)
    v["single_visit"] = all(into(n) <= 1 and out(n) <= 1 for n in instances | {begin, end})
    v["order_bounds"] = all(0 <= o.get(a, 0) <= beta * x[a] for a in x)
    v["order_propagation"] = all(
        into(n, o) == out(n, o) + out(n) for n in instances
    ) and into(begin, o) + beta == out(begin, o) + out(begin)

    chain_ok = True
    fids = graph.chain.function_ids
    for f, k in zip(fids, fids[1:]):
        for phi in (n for n in instances if n.function == f):
            for psi in (n for n in instances if n.function == k):
                if phi == psi:
                    continue
                lhs = into(phi, o, skip=(end,)) - x.get((phi, psi), 0) - beta * y.get(phi, 0) + beta
                rhs = into(psi, o, skip=(end,)) - beta * y.get(psi, 0) + beta * into(psi, x, skip=(end,))
                if lhs < rhs:
                    chain_ok = False
    v["chain_order"] = chain_ok

    if v["arc_support"] and all(n in graph.node_latency for n in placement):
        total = sum(graph.arc_latency[a] * c for a, c in x.items())
        total += sum(graph.node_latency[n] for n in placement)
        v["deadline"] = total <= deadline
    else:
        v["deadline"] = False
    v["no_self_loop"] = all(a != b for a, b in x)
    v["binary_domains"] = (
        all(c in (0, 1) for c in x.values())
        and all(c in (0, 1) for c in y.values())
        and all(isinstance(c, int) and 0 <= c <= beta for c in o.values())
    )
    return {name: bool(v[name]) for name in CONSTRAINT_FAMILIES}
