"""Command line: ``energyplace {solve,experiment,verify,report}``.

Exit codes: 0 success, 1 configuration or internal error, 2 infeasible
placement (solve), 3 oracle mismatch (verify).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import parse_scenario
from .errors import EnergyPlaceError, OracleCapExceeded
from .experiments import (
    Experiment,
    Fixed,
    Normal,
    _draw_load,
    run_group,
    total_runs,
    verify_group,
)
from .metrics import Objective
from .reporting import SchemaError, read_records, write_records, write_report, write_summary
from .solver import DEFAULT_ORACLE_CAP, build_instance_graph, solve_exact
from .workload import Request, deploy_instances

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_MISMATCH = 0, 1, 2, 3


def _load_spec(text):
    """``none``, ``fixed:LEVEL`` or ``normal:MEAN:STD`` (percent)."""
    parts = text.lower().split(":")
    try:
        if parts == ["none"]:
            return None
        if parts[0] == "fixed" and len(parts) == 2:
            return Fixed(float(parts[1]))
        if parts[0] == "normal" and len(parts) == 3:
            return Normal(float(parts[1]), float(parts[2]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"bad load spec {text!r} (none | fixed:L | normal:M:S)")


def _groups_arg(text):
    try:
        return [int(g) for g in text.split(",") if g]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad group list {text!r}") from None


def _selected_groups(scenario, wanted):
    if not wanted:
        return [scenario.groups[g] for g in sorted(scenario.groups)]
    missing = [g for g in wanted if g not in scenario.groups]
    if missing:
        raise EnergyPlaceError(f"unknown group ids {missing}")
    return [scenario.groups[g] for g in wanted]


def _fmt_outcome(outcome):
    lines = [f"status: {outcome.status.value}", f"objective: {outcome.objective.value}"]
    if outcome.feasible:
        ev = outcome.evaluation
        lines += [
            "placement: " + " ".join(f"{i.function}@{i.device}" for i in outcome.placement),
            f"completion_ms: {ev.completion_ms:.6f}",
            f"energy_overall_j: {ev.energy_overall_j:.9f}",
            f"energy_marginal_j: {ev.energy_marginal_j:.9f}",
        ]
    else:
        lines.append(f"cause: {outcome.cause}")
    return "\n".join(lines)


def cmd_solve(args):
    sc = parse_scenario(args.scenario)
    if args.group is not None:
        group = _selected_groups(sc, [args.group])[0]
        exp = Experiment(sc.topology, sc.chain, sc.plan, sc.base_seed, sc.deadline_ms, sc.marginal_mode)
        _, _, begin, graph = exp.run_inputs(group, args.level, args.run_index)
    else:
        seed = sc.base_seed if args.seed is None else args.seed
        begin = sc.begin_device if args.begin is None else args.begin
        if begin not in sc.topology.devices:
            raise EnergyPlaceError(f"unknown begin device {begin!r}")
        load = _draw_load(np.random.default_rng(seed), sc.topology, args.device_load, args.link_load)
        deployment = deploy_instances(
            sc.topology, sc.chain, args.instances, sc.plan,
            colocate_on=begin if args.colocate else None,
        )
        request = Request(sc.chain, begin, begin, sc.deadline_ms)
        graph = build_instance_graph(sc.topology, deployment, request, load, sc.marginal_mode)
    outcome = solve_exact(graph, args.objective)
    print(f"begin_device: {begin}")
    print(_fmt_outcome(outcome))
    print(f"solver_ms: {outcome.solver_time_ms:.3f}", file=sys.stderr)
    return EXIT_OK if outcome.feasible else EXIT_INFEASIBLE


def cmd_experiment(args):
    sc = parse_scenario(args.scenario)
    groups = _selected_groups(sc, args.group)
    out = Path(args.out) if args.out else sc.output_dir
    out.mkdir(parents=True, exist_ok=True)
    written = []
    all_records = []
    try:
        for g in groups:
            records = run_group(g, sc.topology, sc.chain, sc.plan, sc.base_seed, sc.deadline_ms,
                                sc.marginal_mode, jobs=args.jobs)
            path = out / f"group_{g.group_id}.csv"
            written.append(path)
            write_records(path, records, timings=args.timings)
            all_records += records
            counts = {c: sum(r.category.value == c for r in records)
                      for c in ("infeasible", "same", "different")}
            print(f"group {g.group_id}: {len(records)} runs "
                  + " ".join(f"{k}={v}" for k, v in counts.items()))
        path = out / "summary.json"
        written.append(path)
        write_summary(path, all_records, sc.groups)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    print(f"total: {len(all_records)} runs ({2 * len(all_records)} solves) -> {out}")
    return EXIT_OK


def cmd_verify(args):
    sc = parse_scenario(args.scenario)
    groups = _selected_groups(sc, args.group)
    total = 0
    try:
        for g in groups:
            problems = verify_group(g, sc.topology, sc.chain, sc.plan, sc.base_seed, sc.deadline_ms,
                                    sc.marginal_mode, cap=args.oracle_cap, jobs=args.jobs)
            total += len(problems)
            print(f"group {g.group_id}: {g.n_runs} runs, {len(problems)} mismatches")
            for p in problems[:10]:
                print(f"  {p}")
    except OracleCapExceeded as exc:
        print(f"refusing to verify: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"mismatches: {total} over {total_runs(groups)} runs")
    return EXIT_MISMATCH if total else EXIT_OK


def cmd_report(args):
    sc = parse_scenario(args.scenario)
    src = Path(args.records) if args.records else sc.output_dir
    files = sorted(src.glob("group_*.csv"))
    if not files:
        raise EnergyPlaceError(f"no group_*.csv record files in {src}")
    records = []
    for f in files:
        try:
            records += read_records(f)
        except (SchemaError, KeyError, ValueError) as exc:
            raise EnergyPlaceError(f"corrupt record file {f}: {exc}") from None
    out = Path(args.out) if args.out else src
    groups = {g: s for g, s in sc.groups.items() if any(r.group_id == g for r in records)}
    for p in write_report(records, out, groups):
        print(p)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="energyplace", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--scenario", default=None, help="scenario JSON (default: bundled)")

    s = sub.add_parser("solve", help="place one request and print the outcome")
    common(s)
    s.add_argument("--objective", choices=[o.value for o in Objective], default="overall")
    s.add_argument("--seed", type=int, default=None, help="load draw seed (default: base_seed)")
    s.add_argument("--begin", type=int, default=None, help="beginning/end device id")
    s.add_argument("--instances", type=int, default=2)
    s.add_argument("--colocate", action="store_true", help="add every function on the begin device")
    s.add_argument("--device-load", type=_load_spec, default=Normal(50, 10))
    s.add_argument("--link-load", type=_load_spec, default=None)
    s.add_argument("--group", type=int, default=None, help="replay a run of this group instead")
    s.add_argument("--level", type=int, default=50)
    s.add_argument("--run-index", type=int, default=0)
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("experiment", help="run groups and write one CSV per group")
    common(e)
    e.add_argument("--group", type=_groups_arg, default=None, help="comma separated ids (default: all)")
    e.add_argument("--out", default=None)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--timings", action="store_true", help="record solver times (output no longer reproducible)")
    e.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", help="cross-check every run against the exhaustive oracle")
    common(v)
    v.add_argument("--group", type=_groups_arg, default=None)
    v.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    v.add_argument("--jobs", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="turn record CSVs into plot-ready tables")
    common(r)
    r.add_argument("--records", default=None, help="directory with group_*.csv")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (EnergyPlaceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
