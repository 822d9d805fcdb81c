"""Run a reduced version of two experiment groups and write the report tables.

Group 2 draws device loads from Normal(level, 10), group 4 from
Normal(level, 30). Wider spread means more runs where the two objectives
disagree. Output goes to ./demo_results.
"""
from dataclasses import replace
from pathlib import Path

from energyplace.config import parse_scenario
from energyplace.experiments import aggregate, run_group
from energyplace.reporting import write_records, write_report

sc = parse_scenario()
out = Path("demo_results")
out.mkdir(exist_ok=True)

groups = {g: replace(sc.groups[g], runs_per_cell=10) for g in (2, 4)}
records = []
for g, spec in groups.items():
    recs = run_group(spec, sc.topology, sc.chain, sc.plan, sc.base_seed, sc.deadline_ms)
    write_records(out / f"group_{g}.csv", recs)
    records += recs

tables = aggregate(records, groups)
for g in groups:
    print(f"group {g}  level  infeasible same different")
    for level, counts in sorted(tables.categorization[g].items()):
        print(f"        {level:5}  {counts.get('infeasible', 0):10} {counts.get('same', 0):4} "
              f"{counts.get('different', 0):9}")

for p in write_report(records, out, groups):
    print("wrote", p)
