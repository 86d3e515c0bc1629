"""Deterministic discrete-event core: event queue, link model and RNG."""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, TextIO

from .protocol import Message, encode_message, kind_of

MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 (Steele, Lea & Flood 2014), the seeding generator of xoshiro.

    Reference: seed 0 yields 0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4,
    0x06C45D188009454F.  Pure integer arithmetic, so the stream is identical
    on every platform.
    """

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.state = self.seed

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) by multiply-shift (bias < n / 2**64)."""
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        # Box-Muller, one draw per call so the stream position is predictable
        u1 = 1.0 - self.random()
        u2 = self.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


Rng = SplitMix64


@dataclass(frozen=True)
class LinkModel:
    bandwidth_bps: float
    latency_s: float = 0.0
    # transfers with a payload queue FIFO on the sender's egress for this link
    serialized: bool = False

    def __post_init__(self):
        if not self.bandwidth_bps > 0:
            raise ValueError("bandwidth_bps must be positive")
        if self.latency_s < 0:
            raise ValueError("latency_s must be non-negative")


def transfer_delay(size_bytes: int, link: LinkModel) -> float:
    if size_bytes < 0:
        raise ValueError("size_bytes must be non-negative")
    return link.latency_s + size_bytes * 8 / link.bandwidth_bps


def node_class(name: str) -> str:
    return name.rstrip("0123456789")


def default_links() -> dict[frozenset, LinkModel]:
    return {
        frozenset({"NF", "LEAF"}): LinkModel(100e6, 0.001),
        frozenset({"LEAF", "ROOT"}): LinkModel(100e6, 0.010),
        frozenset({"NF", "NWDAF"}): LinkModel(100e6, 0.010),
    }


@dataclass(frozen=True)
class Deliver:
    msg: Message
    src: str
    dst: str
    sent_at: float


@dataclass(frozen=True)
class Timer:
    node: str
    key: Any


@dataclass(order=True)
class Event:
    time: float
    seq: int
    payload: Any = field(compare=False)


class SchedulingError(RuntimeError):
    pass


class EventQueue:
    """Min-heap on (time, seq); seq breaks ties in scheduling order."""

    def __init__(self):
        self._heap: list[Event] = []
        self._seq = itertools.count()
        self.now = 0.0

    def __len__(self):
        return len(self._heap)

    def schedule(self, time: float, payload: Any) -> Event:
        if time < self.now:
            raise SchedulingError(f"cannot schedule at t={time} before now={self.now}")
        ev = Event(time, next(self._seq), payload)
        heapq.heappush(self._heap, ev)
        return ev

    def peek(self) -> Event | None:
        return self._heap[0] if self._heap else None

    def pop(self) -> Event:
        ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev


class Node(Protocol):
    name: str

    def on_message(self, sim: "Simulator", msg: Message, src: str, now: float) -> None: ...

    def on_timer(self, sim: "Simulator", key: Any, now: float) -> None: ...


@dataclass
class RunResult:
    final_time: float
    horizon_reached: bool
    live_events: int


class Simulator:
    """Dispatches events to nodes and records every delivered message."""

    def __init__(self, links: dict[frozenset, LinkModel] | None = None, log: TextIO | None = None):
        self.links = default_links() if links is None else dict(links)
        self.queue = EventQueue()
        self.nodes: dict[str, Node] = {}
        self.log = log
        self.log_lines: list[str] = []
        self.deliveries: list[Deliver] = []
        self.observers: list[Callable[[Deliver, float], None]] = []
        self._egress_free: dict[tuple[str, frozenset], float] = {}

    @property
    def now(self) -> float:
        return self.queue.now

    def add(self, node: Node) -> Node:
        if node.name in self.nodes:
            raise ValueError(f"duplicate node {node.name}")
        self.nodes[node.name] = node
        return node

    def link_for(self, src: str, dst: str) -> LinkModel:
        key = frozenset({node_class(src), node_class(dst)})
        try:
            return self.links[key]
        except KeyError:
            raise KeyError(f"no link model between {src} and {dst}") from None

    def send(self, msg: Message, src: str, dst: str, at: float | None = None) -> float:
        """Emit ``msg`` at time ``at`` (default now); return its delivery time."""
        sent = self.now if at is None else at
        link = self.link_for(src, dst)
        size = getattr(getattr(msg, "descriptor", None), "size_bytes", 0)
        if link.serialized and size > 0:
            key = (src, frozenset({node_class(src), node_class(dst)}))
            start = max(sent, self._egress_free.get(key, 0.0))
            tx = size * 8 / link.bandwidth_bps
            self._egress_free[key] = start + tx
            arrive = start + tx + link.latency_s
        else:
            arrive = sent + transfer_delay(size, link)
        self.queue.schedule(arrive, Deliver(msg, src, dst, sent))
        return arrive

    def set_timer(self, node: str, at: float, key: Any) -> None:
        self.queue.schedule(at, Timer(node, key))

    def run(
        self,
        horizon: float | None = None,
        stop: Callable[[], bool] | None = None,
    ) -> RunResult:
        last = 0.0
        while self.queue:
            if stop is not None and stop():
                break
            nxt = self.queue.peek()
            if horizon is not None and nxt.time > horizon:
                return RunResult(last, True, len(self.queue))
            ev = self.queue.pop()
            last = ev.time
            payload = ev.payload
            if isinstance(payload, Deliver):
                line = encode_message(payload.msg, ev.time, payload.src, payload.dst)
                self.log_lines.append(line)
                if self.log is not None:
                    self.log.write(line + "\n")
                self.deliveries.append(payload)
                for obs in self.observers:
                    obs(payload, ev.time)
                self.nodes[payload.dst].on_message(self, payload.msg, payload.src, ev.time)
            else:
                self.nodes[payload.node].on_timer(self, payload.key, ev.time)
        return RunResult(last, False, len(self.queue))

