"""Capacity-bounded model store kept by every leaf NWDAF.

Subscribed models outrank requested ones.  Among requested models the one
used least often is evicted first; ties go to the entry used longest ago and
then to the smaller type id.  Use counts survive eviction in a per-store
"ghost" table, so a model that comes back is judged on its full history.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .protocol import ModelDescriptor, ModelKind


@dataclass
class StoreEntry:
    descriptor: ModelDescriptor
    kind: ModelKind
    frequency: int
    stored_at: float
    last_used: float

    @property
    def type_id(self) -> int:
        return self.descriptor.type_id

    @property
    def size_bytes(self) -> int:
        return self.descriptor.size_bytes


class InsertStatus(enum.Enum):
    STORED = "stored"
    STORED_AFTER_EVICTION = "stored_after_eviction"
    REJECTED_TRANSIENT = "rejected_transient"


@dataclass(frozen=True)
class InsertOutcome:
    status: InsertStatus
    evicted: tuple[int, ...] = ()

    def __post_init__(self):
        if (self.status is InsertStatus.STORED_AFTER_EVICTION) != bool(self.evicted):
            raise ValueError("evictions are reported only with STORED_AFTER_EVICTION")

    @property
    def stored(self) -> bool:
        return self.status is not InsertStatus.REJECTED_TRANSIENT


STORED = InsertOutcome(InsertStatus.STORED)
REJECTED = InsertOutcome(InsertStatus.REJECTED_TRANSIENT)


def eviction_key(entry: StoreEntry) -> tuple[int, float, int]:
    return entry.frequency, entry.last_used, entry.type_id


@dataclass
class ModelStore:
    capacity_bytes: int
    entries: dict[int, StoreEntry] = field(default_factory=dict)
    ghost_frequency: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.capacity_bytes <= 0:
            raise ValueError(f"capacity_bytes must be positive, got {self.capacity_bytes}")

    @property
    def used_bytes(self) -> int:
        return sum(e.size_bytes for e in self.entries.values())

    def __contains__(self, type_id: int) -> bool:
        return type_id in self.entries

    def lookup(self, type_id: int) -> StoreEntry | None:
        return self.entries.get(type_id)

    def record_use(self, type_id: int, now: float) -> int:
        freq = self.ghost_frequency.get(type_id, 0) + 1
        self.ghost_frequency[type_id] = freq
        entry = self.entries.get(type_id)
        if entry is not None:
            entry.frequency = freq
            entry.last_used = now
        return freq

    def insert(self, descriptor: ModelDescriptor, kind: ModelKind, now: float) -> InsertOutcome:
        type_id = descriptor.type_id
        if descriptor.size_bytes > self.capacity_bytes:
            return REJECTED

        entry = self.entries.get(type_id)
        if entry is not None:
            if descriptor.version > entry.descriptor.version:
                entry.descriptor = descriptor
            if kind is ModelKind.SUBSCRIBED:
                entry.kind = ModelKind.SUBSCRIBED
            return STORED

        free = self.capacity_bytes - self.used_bytes
        if descriptor.size_bytes <= free:
            self._place(descriptor, kind, now)
            return STORED

        requested = sorted(
            (e for e in self.entries.values() if e.kind is ModelKind.REQUESTED),
            key=eviction_key,
        )
        if kind is ModelKind.REQUESTED:
            # admission: only strictly less popular models may make room
            f_new = self.ghost_frequency.get(type_id, 0)
            requested = [e for e in requested if e.frequency < f_new]

        victims = []
        for e in requested:
            if descriptor.size_bytes <= free:
                break
            victims.append(e.type_id)
            free += e.size_bytes
        if descriptor.size_bytes > free:
            return REJECTED

        for victim in victims:
            del self.entries[victim]
        self._place(descriptor, kind, now)
        return InsertOutcome(InsertStatus.STORED_AFTER_EVICTION, tuple(victims))

    def _place(self, descriptor: ModelDescriptor, kind: ModelKind, now: float) -> None:
        freq = max(1, self.ghost_frequency.get(descriptor.type_id, 0))
        self.ghost_frequency[descriptor.type_id] = freq
        self.entries[descriptor.type_id] = StoreEntry(descriptor, kind, freq, now, now)

    def remove(self, type_id: int) -> StoreEntry | None:
        return self.entries.pop(type_id, None)

    def utilization(self) -> tuple[int, int, int]:
        return self.used_bytes, self.capacity_bytes, len(self.entries)
