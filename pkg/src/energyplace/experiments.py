"""Seeded load scenarios, run groups and their aggregation into report tables."""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .infrastructure import LoadState
from .metrics import MarginalMode, Objective
from .solver import (
    DEFAULT_ORACLE_CAP,
    ENERGY_TOL,
    Category,
    build_instance_graph,
    categorize,
    enumerate_oracle_all,
    solve_exact,
)
from .workload import Request, deploy_instances

RANDOM = "random"
DEFAULT_LEVELS = tuple(range(0, 101, 10))


@dataclass(frozen=True)
class Fixed:
    level: float  # percent


@dataclass(frozen=True)
class Normal:
    mean: float  # percent
    std: float


@dataclass(frozen=True)
class LoadPattern:
    """Load distribution of a group with the mean left open for the level sweep."""

    kind: str  # "fixed" or "normal"
    std: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "normal"):
            raise ValueError(f"unknown load kind {self.kind!r}")
        if self.std < 0:
            raise ValueError("standard deviation must be >= 0")

    def at(self, level):
        return Fixed(level) if self.kind == "fixed" else Normal(level, self.std)


@dataclass(frozen=True)
class GroupSpec:
    group_id: int
    device_load: LoadPattern
    link_load: LoadPattern | None = None
    instances_per_function: int = 2
    begin_device: object = None  # device id or RANDOM
    colocate_all_on_begin: bool = False
    runs_per_cell: int = 40
    levels: tuple = DEFAULT_LEVELS
    name: str = ""

    def __post_init__(self):
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be >= 1")
        if any(not 0 <= lv <= 100 for lv in self.levels):
            raise ValueError("load levels must lie in [0, 100] percent")
        if self.begin_device is None:
            raise ValueError(f"group {self.group_id}: begin device not set")

    @property
    def n_runs(self):
        return len(self.levels) * self.runs_per_cell


def _draw(rng, spec, n):
    if spec is None:
        return np.zeros(n)
    if isinstance(spec, Fixed):
        values = np.full(n, float(spec.level))
    else:
        values = rng.normal(spec.mean, spec.std, size=n)
    return np.clip(values, 0.0, 100.0) / 100.0


def _draw_load(rng, topology, device_spec, link_spec):
    devices = topology.device_ids
    links = sorted(l.key for l in topology.links)
    du = _draw(rng, device_spec, len(devices))
    lu = _draw(rng, link_spec, len(links))
    return LoadState(
        {d: float(u) for d, u in zip(devices, du)},
        {k: float(u) for k, u in zip(links, lu)},
    )


def generate_load(topology, device_spec, link_spec, seed):
    """One independent draw per device and link, clamped to [0, 100] %, stored as fractions."""
    return _draw_load(np.random.default_rng(seed), topology, device_spec, link_spec)


def derive_seed(base_seed, group_id, load_level, run_index):
    """Stable per-run seed so a single run can be replayed on its own."""
    ss = np.random.SeedSequence([int(base_seed), int(group_id), int(load_level), int(run_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def relative_difference(value_alt, value_opt, tol=ENERGY_TOL):
    """Percent by which ``value_alt`` exceeds the optimum ``value_opt``."""
    if not value_opt > 0:
        raise ValueError(f"optimal value must be > 0, got {value_opt}")
    if value_alt < value_opt - tol:
        raise ValueError(f"alternative {value_alt} is below the optimum {value_opt}")
    return 100.0 * (value_alt - value_opt) / value_opt


def percentile(values, q):
    """Nearest-rank percentile."""
    values = sorted(values)
    if not values:
        raise ValueError("percentile of an empty list")
    rank = math.ceil(Fraction(q) * len(values) / 100)
    return values[max(rank, 1) - 1]


@dataclass(frozen=True)
class RunRecord:
    group_id: int
    load_level: float
    run_index: int
    seed: int
    begin_device: object
    overall: object  # PlacementOutcome
    marginal: object  # PlacementOutcome
    category: Category
    reldiff_overall_pct: float | None = None
    reldiff_marginal_pct: float | None = None
    util_mean_overall: float | None = None
    util_mean_marginal: float | None = None

    @property
    def feasible(self):
        return self.category is not Category.INFEASIBLE

    def outcome(self, objective):
        return self.overall if Objective(objective) is Objective.OVERALL else self.marginal


@dataclass
class Experiment:
    """Everything a run needs besides its group and coordinates."""

    topology: object
    chain: object
    plan: object
    base_seed: int = 0
    deadline_ms: float = 100.0
    marginal_mode: MarginalMode = MarginalMode.INCREMENT
    _deployments: dict = field(default_factory=dict, repr=False)

    def deployment(self, group, begin):
        key = (group.instances_per_function, begin if group.colocate_all_on_begin else None)
        if key not in self._deployments:
            self._deployments[key] = deploy_instances(
                self.topology, self.chain, group.instances_per_function, self.plan,
                colocate_on=key[1],
            )
        return self._deployments[key]

    def run_inputs(self, group, level, index):
        seed = derive_seed(self.base_seed, group.group_id, level, index)
        rng = np.random.default_rng(seed)
        link_spec = group.link_load.at(level) if group.link_load is not None else None
        load = _draw_load(rng, self.topology, group.device_load.at(level), link_spec)
        if group.begin_device == RANDOM:
            ids = self.topology.device_ids
            begin = ids[int(rng.integers(len(ids)))]
        else:
            begin = group.begin_device
        request = Request(self.chain, begin, begin, self.deadline_ms)
        graph = build_instance_graph(
            self.topology, self.deployment(group, begin), request, load, self.marginal_mode
        )
        return seed, load, begin, graph

    def run_one(self, group, level, index):
        seed, load, begin, graph = self.run_inputs(group, level, index)
        over = solve_exact(graph, Objective.OVERALL)
        marg = solve_exact(graph, Objective.MARGINAL)
        category = categorize(over, marg)
        extra = {}
        if category is not Category.INFEASIBLE:
            extra["util_mean_overall"] = _mean_util(over, load)
            extra["util_mean_marginal"] = _mean_util(marg, load)
        if category is Category.DIFFERENT:
            extra["reldiff_overall_pct"] = relative_difference(
                marg.evaluation.energy_overall_j, over.evaluation.energy_overall_j
            )
            extra["reldiff_marginal_pct"] = relative_difference(
                over.evaluation.energy_marginal_j, marg.evaluation.energy_marginal_j
            )
        return RunRecord(group.group_id, level, index, seed, begin, over, marg, category, **extra)

    def verify_one(self, group, level, index, cap=DEFAULT_ORACLE_CAP, tol=ENERGY_TOL):
        """Mismatches between the branch and bound and the exhaustive oracle for one run."""
        _, _, _, graph = self.run_inputs(group, level, index)
        oracle = enumerate_oracle_all(graph, cap=cap)
        problems = []
        for objective in Objective:
            got = solve_exact(graph, objective)
            ref = oracle[objective]
            where = dict(group_id=group.group_id, load_level=level, run_index=index,
                         objective=objective.value)
            if got.status is not ref.status:
                problems.append(dict(where, field="status", solver=got.status.value, oracle=ref.status.value))
            elif got.feasible:
                if abs(got.objective_value - ref.objective_value) > tol:
                    problems.append(dict(where, field="objective", solver=got.objective_value,
                                         oracle=ref.objective_value))
                if got.placement != ref.placement:
                    problems.append(dict(where, field="placement", solver=got.devices, oracle=ref.devices))
        return problems


def _mean_util(outcome, load):
    return sum(load.device(d) for d in outcome.devices) / len(outcome.devices)


def _cells(group):
    return [(lv, i) for lv in group.levels for i in range(group.runs_per_cell)]


def _run_chunk(args):
    exp, group, cells, verify, cap = args
    if verify:
        return [p for lv, i in cells for p in exp.verify_one(group, lv, i, cap)]
    return [exp.run_one(group, lv, i) for lv, i in cells]


def _map_cells(exp, group, verify, jobs, cap=DEFAULT_ORACLE_CAP):
    cells = _cells(group)
    if jobs <= 1:
        return _run_chunk((exp, group, cells, verify, cap))
    chunks = [cells[k::jobs] for k in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, [(exp, group, c, verify, cap) for c in chunks]))
    out = [r for part in parts for r in part]
    if verify:
        return sorted(out, key=lambda p: (p["load_level"], p["run_index"], p["objective"]))
    return sorted(out, key=lambda r: (r.load_level, r.run_index))


def run_group(group_spec, topology, chain, plan, base_seed, deadline_ms=100.0,
              marginal_mode=MarginalMode.INCREMENT, jobs=1):
    """Solve every (level, run) cell of a group under both objectives.

    Both solves of a run share one load state. The output depends only on
    the arguments, not on ``jobs``.
    """
    exp = Experiment(topology, chain, plan, base_seed, deadline_ms, MarginalMode(marginal_mode))
    return _map_cells(exp, group_spec, verify=False, jobs=jobs)


def verify_group(group_spec, topology, chain, plan, base_seed, deadline_ms=100.0,
                 marginal_mode=MarginalMode.INCREMENT, cap=DEFAULT_ORACLE_CAP, jobs=1):
    """Re-solve every run with the exhaustive oracle; returns the list of mismatches."""
    exp = Experiment(topology, chain, plan, base_seed, deadline_ms, MarginalMode(marginal_mode))
    return _map_cells(exp, group_spec, verify=True, jobs=jobs, cap=cap)


@dataclass
class ReportTables:
    categorization: dict  # group -> level -> Counter(category value)
    percentiles: list  # rows (availability, metric, p10, p90); p None when undefined
    utilization: dict  # group -> [(level, run_index, util_overall, util_marginal)], Different runs
    completion: dict  # group -> level -> objective -> [ms]
    runs_per_cell: dict  # group -> level -> run count

    @property
    def percentiles_defined(self):
        return any(r[2] is not None for r in self.percentiles)


def percentile_rows(records, availability_of=None, qs=(10, 90)):
    """Pooled percentiles of the relative differences of Different runs, per availability."""
    availability_of = availability_of or {}
    pooled = defaultdict(lambda: {Objective.OVERALL: [], Objective.MARGINAL: []})
    keys = set()
    for r in records:
        key = availability_of.get(r.group_id, r.group_id)
        keys.add(key)
        if r.category is Category.DIFFERENT:
            pooled[key][Objective.OVERALL].append(r.reldiff_overall_pct)
            pooled[key][Objective.MARGINAL].append(r.reldiff_marginal_pct)
    rows = []
    for key in sorted(keys):
        for metric in Objective:
            vals = pooled[key][metric]
            rows.append((key, metric.value, *(percentile(vals, q) if vals else None for q in qs)))
    return rows


def aggregate(records, groups=None):
    """Summarise run records into categorization, percentile, utilization and completion tables.

    ``groups`` maps group ids to their :class:`GroupSpec`; when given,
    percentile rows are pooled by instances per function instead of by group.
    """
    availability_of = {g: s.instances_per_function for g, s in (groups or {}).items()}
    categorization = defaultdict(lambda: defaultdict(Counter))
    runs = defaultdict(Counter)
    utilization = defaultdict(list)
    completion = defaultdict(lambda: defaultdict(lambda: {o.value: [] for o in Objective}))
    for r in sorted(records, key=lambda r: (r.group_id, r.load_level, r.run_index)):
        categorization[r.group_id][r.load_level][r.category.value] += 1
        runs[r.group_id][r.load_level] += 1
        if r.category is Category.DIFFERENT:
            utilization[r.group_id].append(
                (r.load_level, r.run_index, r.util_mean_overall, r.util_mean_marginal)
            )
        if r.feasible:
            for o in Objective:
                completion[r.group_id][r.load_level][o.value].append(
                    r.outcome(o).evaluation.completion_ms
                )
    return ReportTables(
        categorization={g: {lv: dict(c) for lv, c in v.items()} for g, v in categorization.items()},
        percentiles=percentile_rows(records, availability_of),
        utilization=dict(utilization),
        completion={g: {lv: dict(v) for lv, v in lvs.items()} for g, lvs in completion.items()},
        runs_per_cell={g: dict(c) for g, c in runs.items()},
    )


def total_runs(groups):
    """Number of placement runs (one request, both objectives) over ``groups``."""
    return sum(g.n_runs for g in groups)
