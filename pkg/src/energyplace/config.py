"""JSON configuration files: topology, service, deployment plan, groups, scenario.

Every loader raises :class:`~energyplace.errors.ConfigError` naming the
file and field (or JSON line) at fault.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .experiments import RANDOM, GroupSpec, LoadPattern
from .infrastructure import DevicePowerProfile, EdgeDevice, NetworkLink, Topology
from .metrics import MarginalMode
from .workload import DataflowSpec, DeploymentPlan, FunctionSpec, ServiceChain

DEFAULT_DEADLINE_MS = 100.0


def bundled(name):
    """Path of a config file shipped with the package."""
    return Path(str(resources.files("energyplace") / "data" / name))


def _read_json(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError("file not found", where=str(path))
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", where=f"{path}:{exc.lineno}:{exc.colno}") from None


def _get(obj, key, where, default=..., kind=None):
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", where=where)
    if key not in obj:
        if default is ...:
            raise ConfigError(f"missing required field '{key}'", where=where)
        return default
    value = obj[key]
    if kind is not None and (not isinstance(value, kind) or (isinstance(value, bool) and kind is not bool)):
        raise ConfigError(f"field '{key}' has the wrong type ({type(value).__name__})", where=where)
    return value


_NUM = (int, float)


def load_topology(path):
    path = Path(path)
    doc = _read_json(path)
    where = str(path)
    scale = _get(doc, "delay_scale", where, 1.0, _NUM)
    dd = _get(doc, "device_defaults", where, {}, dict)
    ld = _get(doc, "link_defaults", where, {}, dict)
    devices = []
    for i, raw in enumerate(_get(doc, "devices", where, kind=list)):
        w = f"{where}: devices[{i}]"
        entry = {**dd, **raw} if isinstance(raw, dict) else raw
        try:
            cores = _get(entry, "cores", w, kind=int)
            bps = _get(entry, "dyn_breakpoints_w", w, kind=list)
            profile = DevicePowerProfile(_get(entry, "idle_w", w, kind=_NUM), tuple(bps))
            devices.append(EdgeDevice(_get(entry, "id", w, kind=(int, str)),
                                      _get(entry, "capacity_mi_ms", w, kind=_NUM), cores, profile))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), where=w) from None
    ids = {d.id for d in devices}
    links = []
    for i, raw in enumerate(_get(doc, "links", where, kind=list)):
        w = f"{where}: links[{i}]"
        entry = {**ld, **raw} if isinstance(raw, dict) else raw
        a, b = _get(entry, "a", w), _get(entry, "b", w)
        for end in (a, b):
            if end not in ids:
                raise ConfigError(f"unknown device id {end!r}", where=w)
        try:
            links.append(NetworkLink(
                a, b,
                _get(entry, "delay_ms", w, kind=_NUM) * scale,
                _get(entry, "bandwidth_mb_ms", w, kind=_NUM),
                _get(entry, "idle_w", w, kind=_NUM),
                _get(entry, "dyn_w", w, kind=_NUM),
            ))
        except ValueError as exc:
            raise ConfigError(str(exc), where=w) from None
    try:
        return Topology(devices, links)
    except Exception as exc:
        raise ConfigError(str(exc), where=where) from None


@dataclass(frozen=True)
class ServiceConfig:
    chain: ServiceChain
    deadline_ms: float


def load_service(path):
    path = Path(path)
    doc = _read_json(path)
    where = str(path)
    deadline = _get(doc, "deadline_ms", where, DEFAULT_DEADLINE_MS, _NUM)
    try:
        functions = [
            FunctionSpec(_get(f, "id", f"{where}: functions[{i}]", kind=(int, str)),
                         _get(f, "mi", f"{where}: functions[{i}]", kind=_NUM))
            for i, f in enumerate(_get(doc, "functions", where, kind=list))
        ]
        flows = [DataflowSpec(s) for s in _get(doc, "dataflows_mb", where, kind=list)]
        chain = ServiceChain(tuple(functions), tuple(flows))
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), where=where) from None
    if not deadline > 0:
        raise ConfigError("deadline_ms must be > 0", where=f"{where}: deadline_ms")
    return ServiceConfig(chain, float(deadline))


def load_plan(path, topology=None, chain=None):
    path = Path(path)
    doc = _read_json(path)
    where = str(path)
    if not isinstance(doc, dict):
        raise ConfigError("expected an object keyed by instance count", where=where)
    levels = {}
    for count, table in doc.items():
        w = f"{where}: {count}"
        try:
            n = int(count)
        except ValueError:
            raise ConfigError("instance count keys must be integers", where=w) from None
        if not isinstance(table, dict):
            raise ConfigError("expected an object of function -> device list", where=w)
        for f, devs in table.items():
            if not isinstance(devs, list):
                raise ConfigError("expected a list of device ids", where=f"{w}.{f}")
            if len(devs) != n:
                raise ConfigError(f"{len(devs)} devices listed for {n} instances", where=f"{w}.{f}")
            if topology is not None:
                for d in devs:
                    if d not in topology.devices:
                        raise ConfigError(f"dangling device id {d!r}", where=f"{w}.{f}")
            if chain is not None and f not in chain.function_ids:
                raise ConfigError(f"dangling function id {f!r}", where=f"{w}.{f}")
        levels[n] = {f: tuple(devs) for f, devs in table.items()}
    try:
        return DeploymentPlan(levels)
    except ValueError as exc:
        raise ConfigError(str(exc), where=where) from None


def _pattern(raw, where):
    if raw is None:
        return None
    kind = _get(raw, "kind", where, kind=str)
    try:
        return LoadPattern(kind, float(_get(raw, "std", where, 0.0, _NUM)))
    except ValueError as exc:
        raise ConfigError(str(exc), where=where) from None


def load_groups(path, default_begin=None):
    path = Path(path)
    doc = _read_json(path)
    where = str(path)
    levels = tuple(_get(doc, "levels", where, list(range(0, 101, 10)), list))
    runs = _get(doc, "runs_per_cell", where, 40, int)
    groups = {}
    for i, raw in enumerate(_get(doc, "groups", where, kind=list)):
        w = f"{where}: groups[{i}]"
        gid = _get(raw, "id", w, kind=int)
        begin = _get(raw, "begin_device", w, "fixed")
        if begin == "fixed":
            begin = default_begin
        elif begin != RANDOM and not isinstance(begin, (int, str)):
            raise ConfigError("begin_device must be 'fixed', 'random' or a device id", where=w)
        try:
            groups[gid] = GroupSpec(
                group_id=gid,
                name=_get(raw, "name", w, "", str),
                device_load=_pattern(_get(raw, "device_load", w, kind=dict), f"{w}.device_load"),
                link_load=_pattern(_get(raw, "link_load", w, None), f"{w}.link_load"),
                instances_per_function=_get(raw, "instances_per_function", w, 2, int),
                begin_device=begin,
                colocate_all_on_begin=_get(raw, "colocate_all_on_begin", w, False, bool),
                runs_per_cell=_get(raw, "runs_per_cell", w, runs, int),
                levels=tuple(_get(raw, "levels", w, levels, list)),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), where=w) from None
    return groups


@dataclass(frozen=True)
class ScenarioConfig:
    path: Path
    topology: Topology
    service: ServiceConfig
    plan: DeploymentPlan
    groups: dict
    begin_device: object
    base_seed: int
    output_dir: Path
    marginal_mode: MarginalMode

    @property
    def chain(self):
        return self.service.chain

    @property
    def deadline_ms(self):
        return self.service.deadline_ms


def parse_scenario(path=None):
    """Load and cross-check a scenario file; ``None`` gives the bundled default."""
    path = bundled("scenario.json") if path is None else Path(path)
    doc = _read_json(path)
    where = str(path)
    base = path.parent

    def ref(key):
        name = _get(doc, key, where, None, str)
        if name is None:
            return bundled(f"{'abilene' if key == 'topology' else key}.json")
        p = Path(name)
        return p if p.is_absolute() else base / p

    refs = {k: ref(k) for k in ("topology", "service", "deployment")}
    groups_name = _get(doc, "groups", where, None, str)
    groups_path = bundled("groups.json") if groups_name is None else base / groups_name
    topology = load_topology(refs["topology"])
    service = load_service(refs["service"])
    plan = load_plan(refs["deployment"], topology, service.chain)
    begin = _get(doc, "begin_device", where, topology.device_ids[0])
    if begin not in topology.devices:
        raise ConfigError(f"dangling device id {begin!r}", where=f"{where}: begin_device")
    groups = load_groups(groups_path, default_begin=begin)
    for g in groups.values():
        w = f"{groups_path}: group {g.group_id}"
        if g.begin_device != RANDOM and g.begin_device not in topology.devices:
            raise ConfigError(f"dangling device id {g.begin_device!r}", where=w)
        if g.instances_per_function not in plan.levels:
            raise ConfigError(
                f"deployment plan has no level for {g.instances_per_function} instances", where=w
            )
        missing = set(service.chain.function_ids) - set(plan.levels[g.instances_per_function])
        if missing:
            raise ConfigError(f"deployment plan misses functions {sorted(missing)}", where=w)
    try:
        mode = MarginalMode(_get(doc, "marginal_mode", where, "increment", str))
    except ValueError:
        raise ConfigError("marginal_mode must be 'increment' or 'literal'", where=where) from None
    out = Path(_get(doc, "output_dir", where, "results", str))
    return ScenarioConfig(
        path=path,
        topology=topology,
        service=service,
        plan=plan,
        groups=groups,
        begin_device=begin,
        base_seed=_get(doc, "base_seed", where, 0, int),
        output_dir=out if out.is_absolute() else Path.cwd() / out,
        marginal_mode=mode,
    )
