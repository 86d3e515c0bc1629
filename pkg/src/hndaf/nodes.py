"""NWDAF state machines: leaf (cache + inference), root (training + model
distribution) and the monolithic baseline used by CONV and MULTI.

Nodes react to messages and timers by calling ``sim.send`` / ``sim.set_timer``.
Every compute resource is a :class:`SerialServer`: jobs are served one at a
time in submission order.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Any

from .protocol import (
    AnalyticsRequest,
    AnalyticsResponse,
    AnalyticsSubscribe,
    AnalyticsUnsubscribe,
    Message,
    ModelCatalog,
    ModelDescriptor,
    ModelKind,
    ModelRequest,
    ModelSubscribe,
    ModelTransfer,
    ModelUnsubscribe,
    ProtocolError,
    leaf_name,
    nf_name,
)
from .store import InsertStatus, ModelStore

log = logging.getLogger(__name__)

ROOT = "ROOT"


@dataclass(frozen=True)
class ServiceTimes:
    inference_s: float = 0.05
    training_s: float = 30.0
    root_proc_s: float = 0.01

    def __post_init__(self):
        for name in ("inference_s", "training_s", "root_proc_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SerialServer:
    busy_until: float = 0.0
    busy_time: float = 0.0

    def reserve(self, now: float, duration: float) -> float:
        """Queue a job of ``duration`` seconds; return its completion time."""
        start = max(now, self.busy_until)
        self.busy_until = start + duration
        self.busy_time += duration
        return self.busy_until


@dataclass
class CacheStats:
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    rejections: int = 0


@dataclass
class Subscription:
    event_id: int
    # workload events still waiting for their first delivery
    waiting: list[int] = field(default_factory=list)
    armed: bool = False


class NFNode:
    """An analytics consumer; remembers when each event was first answered."""

    def __init__(self, nf_id: int, server: str):
        self.nf_id = nf_id
        self.name = nf_name(nf_id)
        self.server = server
        self.first_response: dict[int, float] = {}
        self.errors: list[int] = []

    def issue(self, sim, msg: Message, at: float) -> None:
        sim.set_timer(self.name, at, ("issue", msg))

    def on_timer(self, sim, key: Any, now: float) -> None:
        _, msg = key
        sim.send(msg, self.name, self.server)

    def on_message(self, sim, msg: Message, src: str, now: float) -> None:
        if isinstance(msg, AnalyticsResponse):
            self.first_response.setdefault(msg.event_id, now)
        elif isinstance(msg, ProtocolError):
            self.errors.append(msg.event_id)


class LeafNode:
    """Leaf NWDAF: analytics served from a capacity-limited model store."""

    def __init__(
        self,
        leaf_id: int,
        attached_nf_ids: list[int],
        capacity_bytes: int,
        times: ServiceTimes = ServiceTimes(),
        delivery_period_s: float = 5.0,
        root: str = ROOT,
    ):
        self.leaf_id = leaf_id
        self.name = leaf_name(leaf_id)
        self.attached_nf_ids = list(attached_nf_ids)
        self.store = ModelStore(capacity_bytes)
        self.times = times
        self.delivery_period_s = delivery_period_s
        self.root = root
        self.server = SerialServer()
        self.subscriptions: dict[tuple[int, int], Subscription] = {}
        # type_id -> FIFO of (nf_id, event_ids) waiting for a ModelTransfer
        self.pending_fetches: dict[int, deque] = {}
        self.stats = CacheStats()

    # -- helpers ------------------------------------------------------------

    def _subscribed(self, type_id: int) -> bool:
        return any(t == type_id for _, t in self.subscriptions)

    def _infer(self, sim, now: float, nf_id: int, type_id: int, event_ids) -> None:
        done = self.server.reserve(now, self.times.inference_s)
        sim.set_timer(self.name, done, ("respond", nf_id, type_id, tuple(event_ids)))

    def _fetch(self, sim, type_id: int, nf_id: int, event_ids, request: bool = True) -> None:
        queue = self.pending_fetches.get(type_id)
        if queue is None:
            queue = self.pending_fetches[type_id] = deque()
            if request:
                sim.send(ModelRequest(self.leaf_id, type_id), self.name, self.root)
        queue.append((nf_id, tuple(event_ids)))

    def _arm(self, sim, nf_id: int, type_id: int, at: float) -> None:
        sim.set_timer(self.name, at, ("deliver", nf_id, type_id))

    # -- message handlers -----------------------------------------------------

    def on_message(self, sim, msg: Message, src: str, now: float) -> None:
        if isinstance(msg, AnalyticsRequest):
            self.handle_analytics_request(sim, msg, now)
        elif isinstance(msg, AnalyticsSubscribe):
            self.handle_subscribe(sim, msg, now)
        elif isinstance(msg, AnalyticsUnsubscribe):
            self.handle_unsubscribe(sim, msg, now)
        elif isinstance(msg, ModelTransfer):
            self.handle_model_transfer(sim, msg, now)
        else:
            log.warning("%s ignoring unexpected %s from %s", self.name, type(msg).__name__, src)

    def _reject_unattached(self, sim, msg) -> bool:
        if msg.nf_id in self.attached_nf_ids:
            return False
        log.warning("%s: NF%d is not attached", self.name, msg.nf_id)
        sim.send(ProtocolError(msg.event_id, msg.nf_id, msg.type_id), self.name, nf_name(msg.nf_id))
        return True

    def handle_analytics_request(self, sim, msg: AnalyticsRequest, now: float) -> None:
        if self._reject_unattached(sim, msg):
            return
        self.store.record_use(msg.type_id, now)
        if msg.type_id in self.store:
            self.stats.hits += 1
            self._infer(sim, now, msg.nf_id, msg.type_id, [msg.event_id])
        else:
            self.stats.misses += 1
            self._fetch(sim, msg.type_id, msg.nf_id, [msg.event_id])

    def handle_subscribe(self, sim, msg: AnalyticsSubscribe, now: float) -> None:
        if self._reject_unattached(sim, msg):
            return
        key = (msg.nf_id, msg.type_id)
        self.store.record_use(msg.type_id, now)
        resident = self.store.lookup(msg.type_id)
        if resident is not None:
            self.stats.hits += 1
        else:
            self.stats.misses += 1

        sub = self.subscriptions.get(key)
        if sub is not None:
            # idempotent: no new root traffic
            if resident is not None:
                self._infer(sim, now, msg.nf_id, msg.type_id, [msg.event_id])
            else:
                sub.waiting.append(msg.event_id)
            return

        sub = self.subscriptions[key] = Subscription(msg.event_id)
        sim.send(ModelSubscribe(self.leaf_id, msg.type_id), self.name, self.root)
        if resident is not None:
            self.store.insert(resident.descriptor, ModelKind.SUBSCRIBED, now)
            sub.armed = True
            self._infer(sim, now, msg.nf_id, msg.type_id, [msg.event_id])
            self._arm(sim, msg.nf_id, msg.type_id, now + self.delivery_period_s)
        else:
            # the ModelSubscribe doubles as this leaf's outstanding fetch
            sub.waiting.append(msg.event_id)
            if msg.type_id not in self.pending_fetches:
                self.pending_fetches[msg.type_id] = deque()

    def handle_unsubscribe(self, sim, msg: AnalyticsUnsubscribe, now: float) -> None:
        key = (msg.nf_id, msg.type_id)
        if self.subscriptions.pop(key, None) is None:
            log.warning("%s: unsubscribe for unknown subscription %s", self.name, key)
            return
        if not self._subscribed(msg.type_id):
            self.store.remove(msg.type_id)
            sim.send(ModelUnsubscribe(self.leaf_id, msg.type_id), self.name, self.root)

    def handle_model_transfer(self, sim, msg: ModelTransfer, now: float) -> None:
        type_id = msg.type_id
        subscribed = self._subscribed(type_id)
        queue = self.pending_fetches.pop(type_id, deque())
        if not queue and not subscribed:
            return  # stale push after unsubscription
        kind = ModelKind.SUBSCRIBED if subscribed else ModelKind.REQUESTED
        outcome = self.store.insert(msg.descriptor, kind, now)
        if outcome.status is InsertStatus.STORED_AFTER_EVICTION:
            self.stats.evictions += len(outcome.evicted)
        elif outcome.status is InsertStatus.REJECTED_TRANSIENT:
            self.stats.rejections += 1

        # drained work is served with the transferred copy even if rejected
        for nf_id, event_ids in queue:
            self._infer(sim, now, nf_id, type_id, event_ids)
        for (nf_id, t), sub in self.subscriptions.items():
            if t != type_id:
                continue
            if sub.waiting:
                self._infer(sim, now, nf_id, type_id, sub.waiting)
                sub.waiting = []
            if not sub.armed:
                sub.armed = True
                self._arm(sim, nf_id, type_id, now + self.delivery_period_s)

    # -- timers ---------------------------------------------------------------

    def on_timer(self, sim, key: Any, now: float) -> None:
        if key[0] == "respond":
            _, nf_id, type_id, event_ids = key
            for ev in event_ids:
                sim.send(AnalyticsResponse(ev, nf_id, type_id), self.name, nf_name(nf_id))
        elif key[0] == "deliver":
            self.on_delivery_timer(sim, key[1], key[2], now)

    def on_delivery_timer(self, sim, nf_id: int, type_id: int, now: float) -> None:
        sub = self.subscriptions.get((nf_id, type_id))
        if sub is None:
            return
        self._arm(sim, nf_id, type_id, now + self.delivery_period_s)
        self.store.record_use(type_id, now)
        if type_id in self.store:
            self._infer(sim, now, nf_id, type_id, sub.waiting or [sub.event_id])
            sub.waiting = []
        elif type_id in self.pending_fetches:
            if not sub.waiting:
                sub.waiting.append(sub.event_id)
        else:
            # transient mode: the model did not fit, fetch it again for this use
            sub.waiting = sub.waiting or [sub.event_id]
            self.pending_fetches[type_id] = deque()
            sim.send(ModelRequest(self.leaf_id, type_id), self.name, self.root)


class RootNode:
    """Root NWDAF: trains models and ships them to leaves.

    Message handling and the model store sit on one server; training (MTLF)
    runs on its own server, so a request for an already trained model never
    waits behind a training job.
    """

    def __init__(
        self,
        catalog: ModelCatalog,
        times: ServiceTimes = ServiceTimes(),
        pretrained: bool = True,
        model_update_period_s: float = math.inf,
        name: str = ROOT,
    ):
        self.name = name
        self.catalog = catalog
        self.times = times
        self.model_update_period_s = model_update_period_s
        self.trained_models: dict[int, ModelDescriptor] = (
            dict(catalog.registry) if pretrained else {}
        )
        self.model_subscriptions: dict[int, set[str]] = defaultdict(set)
        self.proc = SerialServer()
        self.mtlf = SerialServer()
        self.training: dict[int, list[str]] = {}
        self._update_armed: set[int] = set()

    @property
    def busy_until(self) -> float:
        return max(self.proc.busy_until, self.mtlf.busy_until)

    def on_message(self, sim, msg: Message, src: str, now: float) -> None:
        if isinstance(msg, (ModelRequest, ModelSubscribe)):
            self.handle_model_request(sim, msg, src, now)
        elif isinstance(msg, ModelUnsubscribe):
            self.model_subscriptions[msg.type_id].discard(src)
        else:
            log.warning("root ignoring unexpected %s from %s", type(msg).__name__, src)

    def handle_model_request(self, sim, msg, src: str, now: float) -> None:
        if isinstance(msg, ModelSubscribe):
            self.model_subscriptions[msg.type_id].add(src)
            period = self.model_update_period_s
            if math.isfinite(period) and msg.type_id not in self._update_armed:
                self._update_armed.add(msg.type_id)
                sim.set_timer(self.name, now + period, ("update", msg.type_id))
        done = self.proc.reserve(now, self.times.root_proc_s)
        sim.set_timer(self.name, done, ("serve", msg.type_id, src))

    def _train(self, sim, type_id: int, now: float, key: str) -> None:
        done = self.mtlf.reserve(now, self.times.training_s)
        sim.set_timer(self.name, done, (key, type_id))

    def on_timer(self, sim, key: Any, now: float) -> None:
        kind, type_id = key[0], key[1]
        if kind == "serve":
            leaf = key[2]
            if type_id in self.trained_models:
                sim.send(ModelTransfer(self.trained_models[type_id]), self.name, leaf)
            elif type_id in self.training:
                self.training[type_id].append(leaf)
            else:
                self.training[type_id] = [leaf]
                self._train(sim, type_id, now, "trained")
        elif kind == "trained":
            desc = self.catalog[type_id]
            self.trained_models[type_id] = desc
            for leaf in self.training.pop(type_id):
                sim.send(ModelTransfer(desc), self.name, leaf)
        elif kind == "update":
            if not self.model_subscriptions[type_id]:
                self._update_armed.discard(type_id)
                return
            self._train(sim, type_id, now, "updated")
            sim.set_timer(self.name, now + self.model_update_period_s, ("update", type_id))
        elif kind == "updated":
            desc = self.trained_models.get(type_id, self.catalog[type_id]).bumped()
            self.trained_models[type_id] = desc
            for leaf in sorted(self.model_subscriptions[type_id]):
                sim.send(ModelTransfer(desc), self.name, leaf)


class BaselineNode:
    """A full, monolithic NWDAF (CONV, or one MULTI instance).

    Message handling, training and inference share a single server.  Each
    analytics subscription is tracked on its own (keyed by event id) with a
    periodic delivery and, when enabled, a periodic model update.
    """

    def __init__(
        self,
        index: int,
        nf_ids: list[int],
        catalog: ModelCatalog,
        times: ServiceTimes = ServiceTimes(),
        pretrained: bool = True,
        delivery_period_s: float = 5.0,
        model_update_period_s: float = math.inf,
    ):
        self.index = index
        self.name = f"NWDAF{index}"
        self.nf_ids = list(nf_ids)
        self.catalog = catalog
        self.times = times
        self.delivery_period_s = delivery_period_s
        self.model_update_period_s = model_update_period_s
        self.trained: set[int] = set(catalog.registry) if pretrained else set()
        self.server = SerialServer()
        # event_id -> (nf_id, type_id)
        self.subscriptions: dict[int, tuple[int, int]] = {}

    @property
    def busy_until(self) -> float:
        return self.server.busy_until

    def _serve(self, sim, now: float, nf_id: int, type_id: int, event_id: int, proc: bool) -> float:
        if proc:
            self.server.reserve(now, self.times.root_proc_s)
        if type_id not in self.trained:
            self.trained.add(type_id)
            self.server.reserve(now, self.times.training_s)
        done = self.server.reserve(now, self.times.inference_s)
        sim.set_timer(self.name, done, ("respond", nf_id, type_id, event_id))
        return done

    def on_message(self, sim, msg: Message, src: str, now: float) -> None:
        if isinstance(msg, (AnalyticsRequest, AnalyticsSubscribe)):
            self.handle_analytics_direct(sim, msg, now)
        elif isinstance(msg, AnalyticsUnsubscribe):
            for ev, key in list(self.subscriptions.items()):
                if key == (msg.nf_id, msg.type_id):
                    del self.subscriptions[ev]
        else:
            log.warning("%s ignoring unexpected %s from %s", self.name, type(msg).__name__, src)

    def handle_analytics_direct(self, sim, msg, now: float) -> None:
        if msg.nf_id not in self.nf_ids:
            log.warning("%s: NF%d is not served here", self.name, msg.nf_id)
            sim.send(ProtocolError(msg.event_id, msg.nf_id, msg.type_id), self.name, nf_name(msg.nf_id))
            return
        self._serve(sim, now, msg.nf_id, msg.type_id, msg.event_id, proc=True)
        if isinstance(msg, AnalyticsSubscribe):
            self.subscriptions[msg.event_id] = (msg.nf_id, msg.type_id)
            sim.set_timer(self.name, now + self.delivery_period_s, ("deliver", msg.event_id))
            if math.isfinite(self.model_update_period_s):
                sim.set_timer(self.name, now + self.model_update_period_s, ("update", msg.event_id))

    def on_timer(self, sim, key: Any, now: float) -> None:
        kind = key[0]
        if kind == "respond":
            _, nf_id, type_id, event_id = key
            sim.send(AnalyticsResponse(event_id, nf_id, type_id), self.name, nf_name(nf_id))
            return
        event_id = key[1]
        if event_id not in self.subscriptions:
            return
        nf_id, type_id = self.subscriptions[event_id]
        if kind == "deliver":
            self._serve(sim, now, nf_id, type_id, event_id, proc=False)
            sim.set_timer(self.name, now + self.delivery_period_s, key)
        elif kind == "update":
            self.server.reserve(now, self.times.training_s)
            sim.set_timer(self.name, now + self.model_update_period_s, key)
