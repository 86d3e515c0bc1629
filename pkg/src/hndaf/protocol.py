"""Model catalog, protocol messages and the text event-log codec.

Every log line has seven ``|``-separated columns::

    time|src|dst|kind|type_id|event_id|size_bytes

with ``-`` for an absent field and time printed with six decimals.  NF and
leaf identities are not repeated in the payload columns: they are recovered
from the ``NF<k>`` / ``LEAF<k>`` endpoint of the line.  For ``MXFER`` lines
the sixth column carries the model version (``-`` for version 0).
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Union

DEFAULT_MODEL_SIZE = 15_000_000


class ModelKind(enum.Enum):
    SUBSCRIBED = "subscribed"
    REQUESTED = "requested"


@dataclass(frozen=True)
class ModelDescriptor:
    type_id: int
    size_bytes: int = DEFAULT_MODEL_SIZE
    version: int = 0

    def __post_init__(self):
        if self.type_id < 0:
            raise ValueError(f"type_id must be non-negative, got {self.type_id}")
        if self.size_bytes <= 0:
            raise ValueError(f"size_bytes must be positive, got {self.size_bytes}")
        if self.version < 0:
            raise ValueError(f"version must be non-negative, got {self.version}")

    def bumped(self) -> "ModelDescriptor":
        return ModelDescriptor(self.type_id, self.size_bytes, self.version + 1)


@dataclass
class ModelCatalog:
    """Issues dense model type ids and remembers their descriptors."""

    next_id: int = 0
    registry: dict[int, ModelDescriptor] = field(default_factory=dict)

    def new_type(self, size_bytes: int = DEFAULT_MODEL_SIZE) -> int:
        if size_bytes <= 0:
            raise ValueError(f"size_bytes must be positive, got {size_bytes}")
        type_id = self.next_id
        self.registry[type_id] = ModelDescriptor(type_id, size_bytes)
        self.next_id += 1
        return type_id

    def __len__(self) -> int:
        return self.next_id

    def __getitem__(self, type_id: int) -> ModelDescriptor:
        return self.registry[type_id]


def catalog_new_type(catalog: ModelCatalog, size_bytes: int = DEFAULT_MODEL_SIZE) -> int:
    return catalog.new_type(size_bytes)


# -- messages ---------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticsRequest:
    event_id: int
    nf_id: int
    type_id: int


@dataclass(frozen=True)
class AnalyticsResponse:
    event_id: int
    nf_id: int
    type_id: int


@dataclass(frozen=True)
class AnalyticsSubscribe:
    event_id: int
    nf_id: int
    type_id: int


@dataclass(frozen=True)
class AnalyticsUnsubscribe:
    nf_id: int
    type_id: int


@dataclass(frozen=True)
class ModelRequest:
    leaf_id: int
    type_id: int


@dataclass(frozen=True)
class ModelSubscribe:
    leaf_id: int
    type_id: int


@dataclass(frozen=True)
class ModelUnsubscribe:
    leaf_id: int
    type_id: int


@dataclass(frozen=True)
class ModelTransfer:
    descriptor: ModelDescriptor

    @property
    def type_id(self) -> int:
        return self.descriptor.type_id


@dataclass(frozen=True)
class ProtocolError:
    """Negative reply to an analytics message the receiver cannot serve."""

    event_id: int
    nf_id: int
    type_id: int


Message = Union[
    AnalyticsRequest,
    AnalyticsResponse,
    AnalyticsSubscribe,
    AnalyticsUnsubscribe,
    ModelRequest,
    ModelSubscribe,
    ModelUnsubscribe,
    ModelTransfer,
    ProtocolError,
]

KIND_OF: dict[type, str] = {
    AnalyticsRequest: "AREQ",
    AnalyticsResponse: "ARSP",
    AnalyticsSubscribe: "ASUB",
    AnalyticsUnsubscribe: "AUNSUB",
    ModelRequest: "MREQ",
    ModelSubscribe: "MSUB",
    ModelUnsubscribe: "MUNSUB",
    ModelTransfer: "MXFER",
    ProtocolError: "PERR",
}
CLASS_OF = {kind: cls for cls, kind in KIND_OF.items()}

# Which endpoint carries the NF / leaf identity, per kind.
_NF_FROM_SRC = {"AREQ", "ASUB", "AUNSUB"}
_NF_FROM_DST = {"ARSP", "PERR"}
_LEAF_FROM_SRC = {"MREQ", "MSUB", "MUNSUB"}

_ENDPOINT = re.compile(r"^(NF|LEAF|ROOT|NWDAF)(\d*)$")


class LogParseError(ValueError):
    def __init__(self, field_name: str, value: str, line: str):
        super().__init__(f"bad {field_name} field {value!r} in log line {line!r}")
        self.field_name = field_name


def nf_name(nf_id: int) -> str:
    return f"NF{nf_id}"


def leaf_name(leaf_id: int) -> str:
    return f"LEAF{leaf_id}"


def _endpoint_index(name: str, prefix: str) -> int | None:
    m = _ENDPOINT.match(name)
    if m is None or m.group(1) != prefix or not m.group(2):
        return None
    return int(m.group(2))


def kind_of(msg: Message) -> str:
    return KIND_OF[type(msg)]


def encode_message(msg: Message, time: float, src: str, dst: str) -> str:
    kind = kind_of(msg)
    if kind in _NF_FROM_SRC and src != nf_name(msg.nf_id):
        raise ValueError(f"{kind} from {src} does not name NF{msg.nf_id}")
    if kind in _NF_FROM_DST and dst != nf_name(msg.nf_id):
        raise ValueError(f"{kind} to {dst} does not name NF{msg.nf_id}")
    if kind in _LEAF_FROM_SRC and src != leaf_name(msg.leaf_id):
        raise ValueError(f"{kind} from {src} does not name LEAF{msg.leaf_id}")

    event_id = getattr(msg, "event_id", None)
    size = "-"
    if isinstance(msg, ModelTransfer):
        size = str(msg.descriptor.size_bytes)
        event_id = msg.descriptor.version or None
    ev = "-" if event_id is None else str(event_id)
    return f"{time:.6f}|{src}|{dst}|{kind}|{msg.type_id}|{ev}|{size}"


def _int_field(name: str, text: str, line: str, optional: bool = False) -> int | None:
    if text == "-":
        if optional:
            return None
        raise LogParseError(name, text, line)
    if not text.isdigit():
        raise LogParseError(name, text, line)
    return int(text)


def decode_message(line: str) -> tuple[Message, float, str, str]:
    """Parse one log line back into ``(message, time, src, dst)``."""
    parts = line.rstrip("\n").split("|")
    if len(parts) != 7:
        raise LogParseError("column count", str(len(parts)), line)
    t_text, src, dst, kind, type_text, ev_text, size_text = parts
    try:
        time = float(t_text)
    except ValueError:
        raise LogParseError("time", t_text, line) from None
    for name, endpoint in (("src", src), ("dst", dst)):
        if not _ENDPOINT.match(endpoint):
            raise LogParseError(name, endpoint, line)
    if kind not in CLASS_OF:
        raise LogParseError("kind", kind, line)
    type_id = _int_field("type_id", type_text, line)

    if kind == "MXFER":
        version = _int_field("event_id", ev_text, line, optional=True) or 0
        size = _int_field("size_bytes", size_text, line)
        return ModelTransfer(ModelDescriptor(type_id, size, version)), time, src, dst
    if size_text != "-":
        raise LogParseError("size_bytes", size_text, line)

    if kind in _LEAF_FROM_SRC:
        leaf = _endpoint_index(src, "LEAF")
        if leaf is None:
            raise LogParseError("src", src, line)
        if ev_text != "-":
            raise LogParseError("event_id", ev_text, line)
        return CLASS_OF[kind](leaf, type_id), time, src, dst

    nf_endpoint = src if kind in _NF_FROM_SRC else dst
    nf = _endpoint_index(nf_endpoint, "NF")
    if nf is None:
        raise LogParseError("src" if kind in _NF_FROM_SRC else "dst", nf_endpoint, line)
    if kind == "AUNSUB":
        if ev_text != "-":
            raise LogParseError("event_id", ev_text, line)
        return AnalyticsUnsubscribe(nf, type_id), time, src, dst
    event_id = _int_field("event_id", ev_text, line)
    return CLASS_OF[kind](event_id, nf, type_id), time, src, dst


def log_sort_key(line: str) -> tuple[float, str, str, str]:
    t, src, dst, kind = line.split("|", 4)[:4]
    return float(t), src, dst, kind
