"""Topologies, workload generation and the analytics-provision-time experiment."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, TextIO

from .engine import LinkModel, Rng, Simulator
from .nodes import ROOT, BaselineNode, CacheStats, LeafNode, NFNode, RootNode, ServiceTimes
from .protocol import (
    DEFAULT_MODEL_SIZE,
    AnalyticsRequest,
    AnalyticsSubscribe,
    ModelCatalog,
    ModelKind,
    leaf_name,
)

FRAMEWORKS = ("HNDAF", "CONV", "MULTI")
CADENCES = ("global", "per_nf")
REQUEST, SUBSCRIBE = "request", "subscribe"

LINK_NAMES = {
    "nf_leaf": frozenset({"NF", "LEAF"}),
    "leaf_root": frozenset({"LEAF", "ROOT"}),
    "nf_nwdaf": frozenset({"NF", "NWDAF"}),
}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


def _default_links() -> dict[str, LinkModel]:
    return {
        "nf_leaf": LinkModel(100e6, 0.001),
        "leaf_root": LinkModel(100e6, 0.010, serialized=True),
        "nf_nwdaf": LinkModel(100e6, 0.010),
    }


@dataclass(frozen=True)
class ScenarioConfig:
    framework: str = "HNDAF"
    n_nfs: int = 9
    nfs_per_multi_nwdaf: int = 3
    n_total: int = 10
    alpha: float = 0.5
    beta: float = 0.5
    request_interval_s: float = 5.0
    cadence: str = "global"
    model_size_bytes: int = DEFAULT_MODEL_SIZE
    leaf_capacity_bytes: int = 100_000_000
    pretrained: bool = True
    service_times: ServiceTimes = ServiceTimes()
    links: dict[str, LinkModel] = field(default_factory=_default_links)
    delivery_period_s: float = 5.0
    # periodic retraining at the NWDAF holding each subscribed model;
    # calibrated so the N_T=30/N_T=10 growth ratios land near the reference ones
    model_update_period_s: float = 66.0
    horizon_s: float = math.inf
    seed: int = 0

    def validate(self) -> "ScenarioConfig":
        if self.framework not in FRAMEWORKS:
            raise ConfigError("framework", f"must be one of {FRAMEWORKS}, got {self.framework!r}")
        if self.cadence not in CADENCES:
            raise ConfigError("cadence", f"must be one of {CADENCES}, got {self.cadence!r}")
        for name in ("n_nfs", "nfs_per_multi_nwdaf", "n_total", "model_size_bytes", "leaf_capacity_bytes"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                raise ConfigError(name, f"must be a positive integer, got {value!r}")
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(name, f"must lie in [0, 1], got {value!r}")
        for name in ("request_interval_s", "delivery_period_s", "model_update_period_s", "horizon_s"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, f"must be positive, got {getattr(self, name)!r}")
        if self.framework == "MULTI" and self.n_nfs % self.nfs_per_multi_nwdaf:
            raise ConfigError(
                "n_nfs",
                f"MULTI needs n_nfs divisible by {self.nfs_per_multi_nwdaf}, got {self.n_nfs}",
            )
        missing = set(LINK_NAMES) - set(self.links)
        if missing:
            raise ConfigError("links", f"missing link models {sorted(missing)}")
        return self

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "service_times":
                value = asdict(value)
            elif f.name == "links":
                value = {k: asdict(v) for k, v in value.items()}
            elif isinstance(value, float) and math.isinf(value):
                value = None
            d["N_T" if f.name == "n_total" else f.name] = value
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        if "N_T" in data:
            data["n_total"] = data.pop("N_T")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        if "service_times" in data:
            try:
                data["service_times"] = ServiceTimes(**data["service_times"])
            except (TypeError, ValueError) as exc:
                raise ConfigError("service_times", str(exc)) from None
        if "links" in data:
            links = _default_links()
            for name, spec in data["links"].items():
                if name not in LINK_NAMES:
                    raise ConfigError("links", f"unknown link {name!r}")
                try:
                    links[name] = LinkModel(**spec)
                except (TypeError, ValueError) as exc:
                    raise ConfigError(f"links.{name}", str(exc)) from None
            data["links"] = links
        for name in ("model_update_period_s", "horizon_s"):
            if name in data and data[name] is None:
                data[name] = math.inf
        for name in ("alpha", "beta", "request_interval_s", "delivery_period_s"):
            if name in data and not isinstance(data[name], (int, float)):
                raise ConfigError(name, f"must be a number, got {data[name]!r}")
        return cls(**data).validate()

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("file", f"invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("file", "top level must be a JSON object")
        return cls.from_dict(data)

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def sim_links(self) -> dict[frozenset, LinkModel]:
        return {LINK_NAMES[k]: v for k, v in self.links.items()}


@dataclass(frozen=True)
class WorkloadEvent:
    event_id: int
    issue_time: float
    nf_id: int
    method: str
    type_id: int


def serving_domain(config: ScenarioConfig, nf_id: int) -> int:
    """Index of the store domain whose history drives model reuse for ``nf_id``."""
    if config.framework == "CONV":
        return 0
    if config.framework == "MULTI":
        return nf_id // config.nfs_per_multi_nwdaf
    return nf_id


def generate_workload(
    config: ScenarioConfig, rng: Rng, catalog: ModelCatalog | None = None
) -> list[WorkloadEvent]:
    """Draw the analytics events of one run.

    Every event consumes exactly three draws, in this order: method
    (request with probability beta), reuse (with probability alpha) and a
    selection index among the domain's previously used types.  Fixed
    consumption keeps the method sequence identical for every alpha.
    """
    catalog = ModelCatalog() if catalog is None else catalog
    used: dict[int, list[int]] = {}
    events = []
    for i in range(config.n_total):
        nf = i % config.n_nfs
        if config.cadence == "global":
            t = i * config.request_interval_s
        else:
            t = (i // config.n_nfs) * config.request_interval_s
        u_method, u_reuse, u_pick = rng.random(), rng.random(), rng.random()
        method = REQUEST if u_method < config.beta else SUBSCRIBE
        history = used.setdefault(serving_domain(config, nf), [])
        if u_reuse < config.alpha and history:
            type_id = history[int(u_pick * len(history))]
        else:
            type_id = catalog.new_type(config.model_size_bytes)
            history.append(type_id)
        events.append(WorkloadEvent(i, t, nf, method, type_id))
    return events


@dataclass
class Topology:
    nfs: list[NFNode]
    leaves: list[LeafNode] = field(default_factory=list)
    root: RootNode | None = None
    nwdafs: list[BaselineNode] = field(default_factory=list)

    @property
    def nodes(self):
        yield from self.nfs
        yield from self.leaves
        if self.root is not None:
            yield self.root
        yield from self.nwdafs


def build_topology(config: ScenarioConfig, catalog: ModelCatalog | None = None) -> Topology:
    config.validate()
    catalog = ModelCatalog() if catalog is None else catalog
    times = config.service_times
    n = config.n_nfs
    if config.framework == "HNDAF":
        root = RootNode(catalog, times, config.pretrained, config.model_update_period_s)
        leaves = [
            LeafNode(k, [k], config.leaf_capacity_bytes, times, config.delivery_period_s, ROOT)
            for k in range(n)
        ]
        nfs = [NFNode(k, leaf_name(k)) for k in range(n)]
        return Topology(nfs, leaves=leaves, root=root)
    group = n if config.framework == "CONV" else config.nfs_per_multi_nwdaf
    nwdafs = [
        BaselineNode(
            j,
            list(range(j * group, (j + 1) * group)),
            catalog,
            times,
            config.pretrained,
            config.delivery_period_s,
            config.model_update_period_s,
        )
        for j in range(n // group)
    ]
    nfs = [NFNode(k, f"NWDAF{k // group}") for k in range(n)]
    return Topology(nfs, nwdafs=nwdafs)


@dataclass(frozen=True)
class EventRecord:
    event_id: int
    issue_time: float
    first_response_time: float | None


class IncompleteRunError(RuntimeError):
    pass


def provision_time(records: Iterable[EventRecord]) -> float:
    """Time from the first issued event until the last first-response."""
    records = list(records)
    if not records:
        raise ValueError("no event records")
    missing = [r.event_id for r in records if r.first_response_time is None]
    if missing:
        raise IncompleteRunError(f"{len(missing)} events never answered, first {missing[0]}")
    return max(r.first_response_time for r in records) - min(r.issue_time for r in records)


@dataclass
class MetricsReport:
    config: ScenarioConfig
    records: list[EventRecord]
    provision_time_s: float
    complete: bool
    final_time: float
    cache_stats: dict[str, CacheStats]
    utilization: dict[str, tuple[int, int, int]]
    log_lines: list[str]
    log_path: str | None = None

    @property
    def totals(self) -> CacheStats:
        total = CacheStats()
        for s in self.cache_stats.values():
            total.hits += s.hits
            total.misses += s.misses
            total.evictions += s.evictions
            total.rejections += s.rejections
        return total

    def csv_row(self) -> dict:
        c, t = self.config, self.totals
        return {
            "framework": c.framework,
            "n_nfs": c.n_nfs,
            "N_T": c.n_total,
            "alpha": c.alpha,
            "beta": c.beta,
            "capacity_bytes": c.leaf_capacity_bytes,
            "seed": c.seed,
            "provision_time_s": format_time(self.provision_time_s),
            "hits": t.hits,
            "misses": t.misses,
            "evictions": t.evictions,
            "rejections": t.rejections,
        }


RESULT_COLUMNS = [
    "framework", "n_nfs", "N_T", "alpha", "beta", "capacity_bytes", "seed",
    "provision_time_s", "hits", "misses", "evictions", "rejections",
]  # fmt: skip


def format_time(t: float) -> str:
    return "inf" if math.isinf(t) else f"{t:.9f}"


def run_experiment(
    config: ScenarioConfig,
    log: TextIO | None = None,
    workload: list[WorkloadEvent] | None = None,
    warm: Iterable[tuple[int, int]] = (),
) -> MetricsReport:
    """Run one scenario to completion (or its horizon).

    ``warm`` lists ``(leaf_index, type_id)`` pairs placed in the leaf stores
    as requested models before the first event.
    """
    config.validate()
    catalog = ModelCatalog()
    if workload is None:
        workload = generate_workload(config, Rng(config.seed), catalog)
    else:
        for _ in range(max((e.type_id for e in workload), default=-1) + 1):
            catalog.new_type(config.model_size_bytes)
    topo = build_topology(config, catalog)
    sim = Simulator(config.sim_links(), log=log)
    for node in topo.nodes:
        sim.add(node)
    for leaf_index, type_id in warm:
        if not topo.leaves:
            raise ConfigError("warm", f"{config.framework} has no leaf stores")
        topo.leaves[leaf_index].store.insert(catalog[type_id], ModelKind.REQUESTED, 0.0)

    for ev in workload:
        nf = topo.nfs[ev.nf_id]
        cls = AnalyticsRequest if ev.method == REQUEST else AnalyticsSubscribe
        nf.issue(sim, cls(ev.event_id, ev.nf_id, ev.type_id), ev.issue_time)

    pending = {ev.event_id for ev in workload}

    def watch(d, now):
        if d.msg.__class__.__name__ == "AnalyticsResponse":
            pending.discard(d.msg.event_id)

    sim.observers.append(watch)
    result = sim.run(horizon=config.horizon_s, stop=lambda: not pending)

    answered = {}
    for nf in topo.nfs:
        answered.update(nf.first_response)
    records = [EventRecord(ev.event_id, ev.issue_time, answered.get(ev.event_id)) for ev in workload]
    complete = not pending
    pt = provision_time(records) if complete and records else math.inf
    return MetricsReport(
        config=config,
        records=records,
        provision_time_s=pt,
        complete=complete,
        final_time=result.final_time,
        cache_stats={leaf.name: leaf.stats for leaf in topo.leaves},
        utilization={leaf.name: leaf.store.utilization() for leaf in topo.leaves},
        log_lines=sim.log_lines,
    )


# -- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    config: ScenarioConfig
    rep: int
    report_row: dict
    provision_time_s: float


def _run_cell(config: ScenarioConfig) -> tuple[dict, float]:
    report = run_experiment(config)
    return report.csv_row(), report.provision_time_s


def sweep(
    configs: list[ScenarioConfig], repetitions: int = 20, jobs: int = 1
) -> tuple[list[SweepRow], list[tuple[ScenarioConfig, float, list[float]]]]:
    """Run every config ``repetitions`` times with seeds ``seed + rep``.

    Returns the per-run rows (ordered by config, then rep) and one
    ``(config, mean, per_seed_values)`` summary per config.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    cells = [(c, r, c.with_(seed=c.seed + r)) for c in configs for r in range(repetitions)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, [cell[2] for cell in cells], chunksize=4))
    else:
        results = [_run_cell(cell[2]) for cell in cells]
    rows = [SweepRow(c, r, row, pt) for (c, r, _), (row, pt) in zip(cells, results)]
    summary = []
    for i, c in enumerate(configs):
        values = [row.provision_time_s for row in rows[i * repetitions : (i + 1) * repetitions]]
        summary.append((c, sum(values) / len(values), values))
    return rows, summary


def write_results_csv(rows: Iterable[dict], out: TextIO) -> None:
    writer = csv.DictWriter(out, fieldnames=RESULT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def results_csv_text(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    write_results_csv(rows, buf)
    return buf.getvalue()
