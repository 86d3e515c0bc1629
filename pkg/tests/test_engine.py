import pytest
from hypothesis import given
from hypothesis import strategies as st

from hndaf.engine import (
    Deliver,
    EventQueue,
    LinkModel,
    SchedulingError,
    Simulator,
    SplitMix64,
    Timer,
    transfer_delay,
)
from hndaf.protocol import ModelDescriptor, ModelRequest, ModelTransfer


def test_pop_order_by_time():
    q = EventQueue()
    q.schedule(5.0, "b")
    q.schedule(3.0, "a")
    assert [q.pop().payload for _ in range(2)] == ["a", "b"]


def test_ties_pop_in_scheduling_order():
    q = EventQueue()
    for name in "xyz":
        q.schedule(5.0, name)
    assert [q.pop().payload for _ in range(3)] == list("xyz")


def test_scheduling_in_the_past_fails():
    q = EventQueue()
    q.schedule(2.0, None)
    q.pop()
    with pytest.raises(SchedulingError):
        q.schedule(1.0, None)


@given(st.lists(st.floats(0, 1e6, allow_nan=False), max_size=60))
def test_time_never_decreases(ts):
    q = EventQueue()
    for t in ts:
        q.schedule(t, None)
    seen = [q.pop() for _ in range(len(ts))]
    assert [e.time for e in seen] == sorted(ts)
    keys = [(e.time, e.seq) for e in seen]
    assert keys == sorted(keys)


@pytest.mark.parametrize(
    "size, bw, lat, expected",
    [(15_000_000, 100e6, 0.01, 1.21), (0, 100e6, 0.01, 0.01), (15_000_000, 400e6, 0.01, 0.31)],
)
def test_transfer_delay_examples(size, bw, lat, expected):
    assert transfer_delay(size, LinkModel(bw, lat)) == pytest.approx(expected, abs=1e-12)


def test_link_validation():
    with pytest.raises(ValueError):
        LinkModel(0)
    with pytest.raises(ValueError):
        LinkModel(1.0, -1)
    with pytest.raises(ValueError):
        transfer_delay(-1, LinkModel(1.0))


def test_splitmix64_reference_outputs():
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
    ]


@given(st.integers(0, 2**64 - 1))
def test_rng_same_seed_same_stream(seed):
    a, b = SplitMix64(seed), SplitMix64(seed)
    assert [a.random() for _ in range(5)] == [b.random() for _ in range(5)]


@given(st.integers(0, 2**64 - 1), st.integers(1, 1000))
def test_rng_ranges(seed, n):
    rng = SplitMix64(seed)
    assert 0.0 <= rng.random() < 1.0
    assert 0 <= rng.randbelow(n) < n


class Echo:
    def __init__(self, name, peer=None):
        self.name, self.peer, self.got, self.ticks = name, peer, [], []

    def on_message(self, sim, msg, src, now):
        self.got.append((now, msg))
        if self.peer and isinstance(msg, ModelRequest):
            sim.send(ModelTransfer(ModelDescriptor(msg.type_id)), self.name, src)

    def on_timer(self, sim, key, now):
        self.ticks.append((now, key))


def test_empty_run_returns_zero():
    res = Simulator().run()
    assert res.final_time == 0.0 and not res.horizon_reached


def test_request_and_transfer_delays():
    sim = Simulator()
    leaf, root = Echo("LEAF0"), Echo("ROOT", peer=True)
    sim.add(leaf)
    sim.add(root)
    sim.send(ModelRequest(0, 3), "LEAF0", "ROOT")
    res = sim.run()
    assert root.got[0][0] == pytest.approx(0.01)
    assert res.final_time == pytest.approx(1.22)
    assert sim.log_lines[1] == "1.220000|ROOT|LEAF0|MXFER|3|-|15000000"


def test_serialized_egress_queues_payloads():
    link = LinkModel(100e6, 0.01, serialized=True)
    sim = Simulator({frozenset({"LEAF", "ROOT"}): link})
    for k in range(2):
        sim.add(Echo(f"LEAF{k}"))
    a = sim.send(ModelTransfer(ModelDescriptor(0)), "ROOT", "LEAF0")
    b = sim.send(ModelTransfer(ModelDescriptor(1)), "ROOT", "LEAF1")
    c = sim.send(ModelRequest(0, 0), "LEAF0", "ROOT")
    assert (a, b, c) == pytest.approx((1.21, 2.41, 0.01))


def test_causality_on_plain_links():
    sim = Simulator()
    sim.add(Echo("LEAF0"))
    sim.add(Echo("ROOT", peer=True))
    for t in range(3):
        sim.send(ModelRequest(0, t), "LEAF0", "ROOT", at=float(t))
    sim.run()
    for d, line in zip(sim.deliveries, sim.log_lines):
        size = getattr(getattr(d.msg, "descriptor", None), "size_bytes", 0)
        arrived = float(line.split("|")[0])
        assert arrived == pytest.approx(d.sent_at + transfer_delay(size, sim.link_for(d.src, d.dst)), abs=1e-6)


def test_horizon_stops_with_live_timers():
    sim = Simulator()
    node = sim.add(Echo("ROOT"))
    sim.set_timer("ROOT", 1.0, "a")
    sim.set_timer("ROOT", 10.0, "b")
    res = sim.run(horizon=5.0)
    assert res.horizon_reached and res.live_events == 1
    assert node.ticks == [(1.0, "a")]


def test_unknown_link_is_an_error():
    with pytest.raises(KeyError):
        Simulator().link_for("NF0", "ROOT")


def test_duplicate_node_name():
    sim = Simulator()
    sim.add(Echo("ROOT"))
    with pytest.raises(ValueError):
        sim.add(Echo("ROOT"))


def test_payload_types_are_values():
    assert Timer("A", 1) == Timer("A", 1)
    assert Deliver(None, "a", "b", 0.0) == Deliver(None, "a", "b", 0.0)
