"""Place one request on the bundled Abilene scenario under both objectives.

Draws one load state (devices around 50 % busy), builds the instance graph
for two instances per function and solves it twice. Run from the repo root:

    python3 demos/01_single_placement.py
"""
import numpy as np

from energyplace.config import parse_scenario
from energyplace.experiments import Normal, generate_load
from energyplace.solver import build_instance_graph, categorize, solve_exact
from energyplace.workload import Request, deploy_instances

sc = parse_scenario()
load = generate_load(sc.topology, Normal(50, 10), None, seed=1)
print("device utilization:", {d: round(u, 2) for d, u in load.device_utilization.items()})

deployment = deploy_instances(sc.topology, sc.chain, 2, sc.plan)
request = Request(sc.chain, sc.begin_device, sc.begin_device, sc.deadline_ms)
graph = build_instance_graph(sc.topology, deployment, request, load)
print(f"instance graph: {len(graph.nodes)} nodes, {len(graph.arcs)} arcs")

outcomes = {}
for objective in ("overall", "marginal"):
    out = solve_exact(graph, objective)
    outcomes[objective] = out
    ev = out.evaluation
    print(f"\n{objective:>8}: " + " -> ".join(f"{i.function}@{i.device}" for i in out.placement))
    print(f"          completion {ev.completion_ms:.2f} ms, "
          f"E^O {ev.energy_overall_j:.4f} J, E^M {ev.energy_marginal_j:.4f} J")
    busy = np.mean([load.device(d) for d in out.devices])
    print(f"          mean utilization of chosen devices {busy:.2f}")

print("\ncategory:", categorize(outcomes["overall"], outcomes["marginal"]).value)
