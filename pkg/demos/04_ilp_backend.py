"""Solve the same request with the integer program and the branch and bound.

The integer program goes through scipy's HiGHS interface. Both should agree on
the optimal energy; when several placements tie the ILP may return a
different one.
"""
import time

from energyplace.config import parse_scenario
from energyplace.experiments import Normal, generate_load
from energyplace.ilp import build_ilp, solve_ilp
from energyplace.solver import build_instance_graph, solve_exact, validate_placement
from energyplace.workload import Request, deploy_instances

sc = parse_scenario()
load = generate_load(sc.topology, Normal(60, 30), None, seed=11)
deployment = deploy_instances(sc.topology, sc.chain, 4, sc.plan)
graph = build_instance_graph(
    sc.topology, deployment, Request(sc.chain, sc.begin_device, sc.begin_device, sc.deadline_ms), load
)
model = build_ilp(graph, "marginal")
rows = sum(A.shape[0] for A, _, _ in model.families.values())
print(f"ILP: {model.n_vars} variables, {rows} rows in {len(model.families)} families")

for name, solve in (("branch and bound", solve_exact), ("ILP (HiGHS)", solve_ilp)):
    started = time.perf_counter()
    out = solve(graph, "marginal")
    ms = (time.perf_counter() - started) * 1e3
    print(f"{name:>17}: {out.objective_value:.6f} J in {ms:7.2f} ms  "
          + " ".join(f"{i.function}@{i.device}" for i in out.placement))
    failed = [k for k, ok in validate_placement(graph, out).items() if not ok]
    print(" " * 19 + ("all constraint families hold" if not failed else f"violated: {failed}"))
