"""The placement problem as an explicit integer linear program.

Variables are arc selections ``x``, node selections ``y`` and arc visiting
orders ``o`` over the instance graph. Rows are grouped into the same
constraint families that :func:`energyplace.solver.validate_placement`
reports on. :func:`solve_ilp` hands the model to scipy's MILP interface
(HiGHS); it is an alternative backend, the branch and bound in
:mod:`energyplace.solver` remains the reference.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import lil_matrix

from .metrics import Objective, evaluate_placement
from .solver import PlacementOutcome, Status, realize


@dataclass
class IlpModel:
    arcs: tuple
    nodes: tuple  # instance nodes only, the virtual begin/end carry no y
    beta: int
    c: np.ndarray
    integrality: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    families: dict  # name -> (A, row_lo, row_hi)

    @property
    def n_vars(self):
        return 2 * len(self.arcs) + len(self.nodes)

    def x_index(self, arc):
        return self._arc_pos[arc]

    def y_index(self, node):
        return len(self.arcs) + self._node_pos[node]

    def o_index(self, arc):
        return len(self.arcs) + len(self.nodes) + self._arc_pos[arc]

    def __post_init__(self):
        self._arc_pos = {a: i for i, a in enumerate(self.arcs)}
        self._node_pos = {n: i for i, n in enumerate(self.nodes)}

    def vector(self, graph, placement):
        """Variable vector realizing ``placement`` (its arcs must exist in the model)."""
        x, y, o = realize(graph, placement)
        z = np.zeros(self.n_vars)
        for arc, v in x.items():
            z[self.x_index(arc)] = v
        for node, v in y.items():
            z[self.y_index(node)] = v
        for arc, v in o.items():
            z[self.o_index(arc)] = v
        return z

    def check(self, z, atol=1e-6):
        """``{family: satisfied}`` for an assignment vector."""
        out = {}
        for name, (A, lo, hi) in self.families.items():
            r = A @ z
            out[name] = bool(np.all(r >= lo - atol) and np.all(r <= hi + atol))
        return out


def build_ilp(graph, objective, deadline_ms=None):
    deadline = graph.request.deadline_ms if deadline_ms is None else deadline_ms
    arcs = graph.arcs
    nodes = graph.instance_nodes
    beta = graph.beta
    nA, nN = len(arcs), len(nodes)
    nv = 2 * nA + nN
    model = IlpModel(
        arcs=arcs, nodes=nodes, beta=beta,
        c=np.zeros(nv), integrality=np.ones(nv), lb=np.zeros(nv), ub=np.ones(nv),
        families={},
    )
    node_cost = graph.node_energy(objective)
    for a in arcs:
        model.c[model.x_index(a)] = graph.arc_energy[a]
        model.ub[model.o_index(a)] = beta
    for n in nodes:
        model.c[model.y_index(n)] = node_cost[n]

    in_arcs = {n: [] for n in graph.nodes}
    out_arcs = {n: [] for n in graph.nodes}
    for a in arcs:
        out_arcs[a[0]].append(a)
        in_arcs[a[1]].append(a)

    def family(rows):
        A = lil_matrix((len(rows), nv))
        lo = np.empty(len(rows))
        hi = np.empty(len(rows))
        for r, (coeffs, l, h) in enumerate(rows):
            for j, v in coeffs:
                A[r, j] += v
            lo[r], hi[r] = l, h
        return A.tocsr(), lo, hi

    X, Y, O = model.x_index, model.y_index, model.o_index
    begin, end = graph.begin, graph.end

    rows = []
    for n in nodes:
        rows.append(([(X(a), 1) for a in in_arcs[n]] + [(X(a), -1) for a in out_arcs[n]], 0, 0))
    rows.append(([(X(a), 1) for a in in_arcs[begin]] + [(X(a), -1) for a in out_arcs[begin]], -1, -1))
    rows.append(([(X(a), 1) for a in in_arcs[end]] + [(X(a), -1) for a in out_arcs[end]], 1, 1))
    model.families["flow_conservation"] = family(rows)

    rows = []
    for f in graph.chain.function_ids:
        rows.append(([(Y(n), graph.membership(n, f)) for n in nodes], 1, 1))
    model.families["one_instance_per_function"] = family(rows)

    rows = [([(X(a), 1) for a in out_arcs[n]] + [(Y(n), -1)], 0, 0) for n in nodes]
    model.families["selected_on_path"] = family(rows)

    rows = []
    for n in graph.nodes:
        rows.append(([(X(a), 1) for a in in_arcs[n]], -np.inf, 1))
        rows.append(([(X(a), 1) for a in out_arcs[n]], -np.inf, 1))
    model.families["single_visit"] = family(rows)

    rows = [([(O(a), 1), (X(a), -beta)], -np.inf, 0) for a in arcs]
    model.families["order_bounds"] = family(rows)

    rows = []
    for n in nodes:
        coeffs = [(O(a), 1) for a in in_arcs[n]]
        coeffs += [(O(a), -1) for a in out_arcs[n]] + [(X(a), -1) for a in out_arcs[n]]
        rows.append((coeffs, 0, 0))
    coeffs = [(O(a), 1) for a in in_arcs[begin]]
    coeffs += [(O(a), -1) for a in out_arcs[begin]] + [(X(a), -1) for a in out_arcs[begin]]
    rows.append((coeffs, -beta, -beta))
    model.families["order_propagation"] = family(rows)

    rows = []
    fids = graph.chain.function_ids
    arc_set = set(arcs)
    for f, k in zip(fids, fids[1:]):
        for phi in (n for n in nodes if n.function == f):
            for psi in (n for n in nodes if n.function == k):
                if phi == psi:
                    continue
                coeffs = [(O(a), 1) for a in in_arcs[phi] if a[0] != end]
                if (phi, psi) in arc_set:
                    coeffs.append((X((phi, psi)), -1))
                coeffs.append((Y(phi), -beta))
                coeffs += [(O(a), -1) for a in in_arcs[psi] if a[0] != end]
                coeffs.append((Y(psi), beta))
                coeffs += [(X(a), -beta) for a in in_arcs[psi] if a[0] != end]
                rows.append((coeffs, -beta, np.inf))
    if rows:
        model.families["chain_order"] = family(rows)

    coeffs = [(X(a), graph.arc_latency[a]) for a in arcs]
    coeffs += [(Y(n), graph.node_latency[n]) for n in nodes]
    model.families["deadline"] = family([(coeffs, -np.inf, deadline)])

    loops = [a for a in arcs if a[0] == a[1]]
    if loops:
        model.families["no_self_loop"] = family([([(X(a), 1) for a in loops], 0, 0)])
    return model


def solve_ilp(graph, objective, deadline_ms=None):
    """Solve the integer program with HiGHS. Ties are broken by the backend."""
    started = time.perf_counter()
    objective = Objective(objective)
    if graph.infeasible_function is not None:
        return PlacementOutcome(
            status=Status.INFEASIBLE, objective=objective,
            cause=f"no usable instance of {graph.infeasible_function!r}",
        )
    model = build_ilp(graph, objective, deadline_ms)
    constraints = [LinearConstraint(A, lo, hi) for A, lo, hi in model.families.values()]
    res = milp(
        model.c,
        constraints=constraints,
        integrality=model.integrality,
        bounds=Bounds(model.lb, model.ub),
    )
    elapsed = (time.perf_counter() - started) * 1e3
    if res.status != 0 or res.x is None:
        return PlacementOutcome(
            status=Status.INFEASIBLE, objective=objective, solver_time_ms=elapsed,
            cause=res.message,
        )
    chosen = {n for n in model.nodes if res.x[model.y_index(n)] > 0.5}
    placement = tuple(
        next(n for n in layer if n in chosen) for layer in graph.layers
    )
    evaluation = evaluate_placement(
        graph.request, placement, graph.topology, graph.load_state, graph.marginal_mode
    )
    return PlacementOutcome(
        status=Status.FEASIBLE,
        objective=objective,
        placement=placement,
        evaluation=evaluation,
        objective_value=float(res.fun),
        solver_time_ms=elapsed,
    )
