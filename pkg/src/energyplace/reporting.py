"""CSV record files and plot-ready report tables."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .experiments import RANDOM, RunRecord, aggregate, percentile_rows
from .metrics import Objective, PlacementEvaluation
from .solver import Category, PlacementOutcome, Status

RECORD_SCHEMA = "run-records"
REPORT_SCHEMA = "report"
SCHEMA_VERSION = 1
NA = "NA"

RECORD_COLUMNS = (
    "group_id", "load_level", "run_index", "seed", "begin_device", "category", "status",
    "completion_overall_ms", "completion_marginal_ms",
    "e_overall_of_overall_j", "e_overall_of_marginal_j",
    "e_marginal_of_overall_j", "e_marginal_of_marginal_j",
    "reldiff_overall_pct", "reldiff_marginal_pct",
    "util_mean_overall", "util_mean_marginal",
    "solver_ms_overall", "solver_ms_marginal",
)


class SchemaError(ValueError):
    pass


def _fmt(value):
    if value is None:
        return NA
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _num(text):
    if text == NA:
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def _header(kind):
    return f"# energyplace {kind} v{SCHEMA_VERSION}\n"


def _check_header(line, kind, path):
    expected = _header(kind).strip()
    if line.strip() != expected:
        raise SchemaError(f"{path}: unsupported schema line {line.strip()!r}, expected {expected!r}")


def record_row(r, timings=False):
    o, m = r.overall, r.marginal
    ok = r.feasible
    return {
        "group_id": r.group_id,
        "load_level": r.load_level,
        "run_index": r.run_index,
        "seed": r.seed,
        "begin_device": r.begin_device,
        "category": r.category.value,
        "status": o.status.value,
        "completion_overall_ms": o.evaluation.completion_ms if ok else None,
        "completion_marginal_ms": m.evaluation.completion_ms if ok else None,
        "e_overall_of_overall_j": o.evaluation.energy_overall_j if ok else None,
        "e_overall_of_marginal_j": m.evaluation.energy_overall_j if ok else None,
        "e_marginal_of_overall_j": o.evaluation.energy_marginal_j if ok else None,
        "e_marginal_of_marginal_j": m.evaluation.energy_marginal_j if ok else None,
        "reldiff_overall_pct": r.reldiff_overall_pct,
        "reldiff_marginal_pct": r.reldiff_marginal_pct,
        "util_mean_overall": r.util_mean_overall,
        "util_mean_marginal": r.util_mean_marginal,
        "solver_ms_overall": o.solver_time_ms if timings else None,
        "solver_ms_marginal": m.solver_time_ms if timings else None,
    }


def records_csv(records, timings=False):
    buf = io.StringIO()
    buf.write(_header(RECORD_SCHEMA))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        row = record_row(r, timings)
        w.writerow([_fmt(row[c]) for c in RECORD_COLUMNS])
    return buf.getvalue()


def write_records(path, records, timings=False):
    Path(path).write_text(records_csv(records, timings))


def _outcome(objective, status, completion, e_over, e_marg, solver_ms):
    if status is Status.INFEASIBLE:
        return PlacementOutcome(status=status, objective=objective)
    ev = PlacementEvaluation(True, completion, e_over, e_marg)
    return PlacementOutcome(
        status=status, objective=objective, evaluation=ev,
        objective_value=ev.energy(objective), solver_time_ms=solver_ms or 0.0,
    )


def read_records(path):
    """Records from a CSV file; placements themselves are not stored and come back empty."""
    path = Path(path)
    with path.open() as fh:
        _check_header(fh.readline(), RECORD_SCHEMA, path)
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RECORD_COLUMNS:
            raise SchemaError(f"{path}: unexpected columns {reader.fieldnames}")
        out = []
        for row in reader:
            v = {k: (row[k] if k in ("category", "status") else _num(row[k])) for k in RECORD_COLUMNS}
            status = Status(v["status"])
            out.append(RunRecord(
                group_id=v["group_id"],
                load_level=v["load_level"],
                run_index=v["run_index"],
                seed=v["seed"],
                begin_device=v["begin_device"],
                overall=_outcome(Objective.OVERALL, status, v["completion_overall_ms"],
                                 v["e_overall_of_overall_j"], v["e_marginal_of_overall_j"],
                                 v["solver_ms_overall"]),
                marginal=_outcome(Objective.MARGINAL, status, v["completion_marginal_ms"],
                                  v["e_overall_of_marginal_j"], v["e_marginal_of_marginal_j"],
                                  v["solver_ms_marginal"]),
                category=Category(v["category"]),
                reldiff_overall_pct=v["reldiff_overall_pct"],
                reldiff_marginal_pct=v["reldiff_marginal_pct"],
                util_mean_overall=v["util_mean_overall"],
                util_mean_marginal=v["util_mean_marginal"],
            ))
    return out


def _write_csv(path, columns, rows):
    buf = io.StringIO()
    buf.write(_header(REPORT_SCHEMA))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    Path(path).write_text(buf.getvalue())


def availability_groups(groups, random_begin):
    """Groups that make up one availability table: normal device load with
    std 10, idle links, no forced co-location, and the given begin-device mode."""
    out = []
    for g in groups.values():
        if (
            g.device_load.kind == "normal"
            and g.device_load.std == 10
            and g.link_load is None
            and not g.colocate_all_on_begin
            and (g.begin_device == RANDOM) == random_begin
        ):
            out.append(g.group_id)
    return sorted(out)


def write_report(records, out_dir, groups=None):
    """Write the per-group and percentile CSVs; returns the list of files written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    groups = groups or {}
    tables = aggregate(records, groups)
    written = []

    for g, levels in sorted(tables.categorization.items()):
        p = out_dir / f"categorization_{g}.csv"
        rows = [
            (lv, c.get("infeasible", 0), c.get("same", 0), c.get("different", 0))
            for lv, c in sorted(levels.items())
        ]
        _write_csv(p, ("level", "infeasible", "same", "different"), rows)
        written.append(p)
        p = out_dir / f"utilization_{g}.csv"
        _write_csv(p, ("level", "run_index", "util_mean_overall", "util_mean_marginal"),
                   tables.utilization.get(g, []))
        written.append(p)
        p = out_dir / f"completion_{g}.csv"
        rows = [
            (lv, obj, ms)
            for lv, per in sorted(tables.completion.get(g, {}).items())
            for obj in (o.value for o in Objective)
            for ms in per[obj]
        ]
        _write_csv(p, ("level", "objective", "completion_ms"), rows)
        written.append(p)

    availability_of = {g: s.instances_per_function for g, s in groups.items()}
    for name, random_begin in (("percentiles.csv", False), ("percentiles_random.csv", True)):
        chosen = set(availability_groups(groups, random_begin))
        subset = [r for r in records if r.group_id in chosen]
        if not subset:
            if random_begin:
                continue
            subset = records  # no availability groups present: pool whatever was given
        p = out_dir / name
        _write_csv(p, ("availability", "metric", "p10", "p90"), percentile_rows(subset, availability_of))
        written.append(p)
    return written


def summary(records, groups=None):
    tables = aggregate(records, groups)
    return {
        "schema": f"energyplace summary v{SCHEMA_VERSION}",
        "runs": len(records),
        "solves": 2 * len(records),
        "groups": {
            str(g): {
                "runs": sum(cnt.values()),
                "categories": {
                    c.value: sum(lv.get(c.value, 0) for lv in tables.categorization[g].values())
                    for c in Category
                },
            }
            for g, cnt in sorted(tables.runs_per_cell.items())
        },
    }


def write_summary(path, records, groups=None):
    Path(path).write_text(json.dumps(summary(records, groups), indent=2, sort_keys=True) + "\n")
