import pytest

from hndaf.engine import Simulator
from hndaf.nodes import BaselineNode, LeafNode, NFNode, RootNode, SerialServer, ServiceTimes
from hndaf.protocol import (
    AnalyticsRequest,
    AnalyticsSubscribe,
    AnalyticsUnsubscribe,
    ModelCatalog,
    ModelKind,
    ModelRequest,
    ModelTransfer,
)

from conftest import kinds

MB = 1_000_000


def hndaf(n_types=4, capacity=100 * MB, pretrained=True, nfs=(0,), update=float("inf")):
    cat = ModelCatalog()
    for _ in range(n_types):
        cat.new_type()
    sim = Simulator()
    root = sim.add(RootNode(cat, pretrained=pretrained, model_update_period_s=update))
    leaf = sim.add(LeafNode(0, list(nfs), capacity))
    nf = {k: sim.add(NFNode(k, "LEAF0")) for k in nfs}
    return sim, root, leaf, nf, cat


def resp_times(sim):
    return [float(c[0]) for c in kinds(sim, "ARSP")]


def test_serial_server_reserves_back_to_back():
    s = SerialServer()
    assert s.reserve(0.0, 1.0) == 1.0
    assert s.reserve(0.5, 1.0) == 2.0
    assert s.reserve(5.0, 1.0) == 6.0


def test_service_times_must_be_positive():
    with pytest.raises(ValueError):
        ServiceTimes(inference_s=0)


def test_hit_answers_locally():
    sim, root, leaf, nf, cat = hndaf()
    leaf.store.insert(cat[0], ModelKind.REQUESTED, 0.0)
    nf[0].issue(sim, AnalyticsRequest(0, 0, 0), 0.0)
    sim.run()
    assert resp_times(sim) == pytest.approx([0.052])
    assert not kinds(sim, "MREQ")
    assert leaf.stats.hits == 1


def test_miss_fetches_once_for_back_to_back_requests():
    sim, root, leaf, nf, cat = hndaf()
    nf[0].issue(sim, AnalyticsRequest(0, 0, 1), 0.0)
    nf[0].issue(sim, AnalyticsRequest(1, 0, 1), 0.0)
    sim.run()
    assert len(kinds(sim, "MREQ")) == 1
    # transfer lands at 1.231, then two serial inferences
    assert resp_times(sim) == pytest.approx([1.282, 1.332])
    assert leaf.store.lookup(1).kind is ModelKind.REQUESTED


def test_transfer_drains_queue_serially():
    sim, root, leaf, nf, cat = hndaf()
    leaf._fetch(sim, 2, 0, [10])
    leaf._fetch(sim, 2, 0, [11])
    sim.queue.schedule(3.0, None)  # advance the clock to 3.0
    sim.queue.pop()
    leaf.handle_model_transfer(sim, ModelTransfer(cat[2]), 3.0)
    timers = sorted((e.time, e.payload.key) for e in sim.queue._heap if hasattr(e.payload, "key"))
    assert [t for t, _ in timers] == pytest.approx([3.05, 3.10])
    assert [k[3] for _, k in timers] == [(10,), (11,)]


def test_rejected_transfer_still_serves_queue():
    sim, root, leaf, nf, cat = hndaf(capacity=15 * MB)
    leaf.store.insert(cat[0], ModelKind.SUBSCRIBED, 0.0)
    nf[0].issue(sim, AnalyticsRequest(0, 0, 1), 0.0)
    sim.run()
    assert resp_times(sim) == pytest.approx([1.282])
    assert 1 not in leaf.store
    assert leaf.stats.rejections == 1


def test_fresh_subscribe_sends_msub_and_first_delivery_after_transfer():
    sim, root, leaf, nf, cat = hndaf()
    nf[0].issue(sim, AnalyticsSubscribe(0, 0, 2), 0.0)
    sim.run(horizon=11.5)
    assert len(kinds(sim, "MSUB")) == 1
    assert leaf.store.lookup(2).kind is ModelKind.SUBSCRIBED
    assert resp_times(sim) == pytest.approx([1.282, 6.282, 11.282])


def test_duplicate_subscribe_sends_nothing_upstream():
    sim, root, leaf, nf, cat = hndaf()
    nf[0].issue(sim, AnalyticsSubscribe(0, 0, 2), 0.0)
    nf[0].issue(sim, AnalyticsSubscribe(1, 0, 2), 3.0)
    sim.run(horizon=4.0)
    assert len(kinds(sim, "MSUB")) == 1
    assert not kinds(sim, "MREQ")
    assert [int(c[5]) for c in kinds(sim, "ARSP")] == [0, 1]


def test_subscribe_upgrades_resident_requested_model():
    sim, root, leaf, nf, cat = hndaf()
    nf[0].issue(sim, AnalyticsRequest(0, 0, 1), 0.0)
    nf[0].issue(sim, AnalyticsSubscribe(1, 0, 1), 5.0)
    sim.run(horizon=5.5)
    assert len(kinds(sim, "MSUB")) == 1
    assert leaf.store.lookup(1).kind is ModelKind.SUBSCRIBED
    assert resp_times(sim)[-1] == pytest.approx(5.052)


def test_last_subscriber_unsubscribe_removes_model():
    sim, root, leaf, nf, cat = hndaf(nfs=(0, 1))
    nf[0].issue(sim, AnalyticsSubscribe(0, 0, 3), 0.0)
    nf[1].issue(sim, AnalyticsSubscribe(1, 1, 3), 0.0)
    nf[0].issue(sim, AnalyticsUnsubscribe(0, 3), 2.0)
    sim.run(horizon=2.5)
    assert 3 in leaf.store and not kinds(sim, "MUNSUB")
    nf[1].issue(sim, AnalyticsUnsubscribe(1, 3), 3.0)
    sim.run(horizon=3.5)
    assert 3 not in leaf.store
    assert len(kinds(sim, "MUNSUB")) == 1
    assert not root.model_subscriptions[3]


def test_unknown_unsubscribe_is_noop():
    sim, root, leaf, nf, cat = hndaf()
    nf[0].issue(sim, AnalyticsUnsubscribe(0, 1), 0.0)
    sim.run()
    assert not kinds(sim, "MUNSUB") and not leaf.store.entries


def test_unattached_nf_gets_protocol_error():
    sim, root, leaf, nf, cat = hndaf()
    stray = sim.add(NFNode(5, "LEAF0"))
    stray.issue(sim, AnalyticsRequest(0, 5, 0), 0.0)
    sim.run()
    assert stray.errors == [0]
    assert len(kinds(sim, "PERR")) == 1


def test_transient_mode_refetches_each_period():
    sim, root, leaf, nf, cat = hndaf(capacity=15 * MB)
    leaf.store.insert(cat[0], ModelKind.SUBSCRIBED, 0.0)
    nf[0].issue(sim, AnalyticsSubscribe(0, 0, 1), 0.0)
    sim.run(horizon=12.0)
    assert 1 not in leaf.store
    # MSUB then one MREQ per delivery period, each paying a transfer
    assert len(kinds(sim, "MREQ")) == 2
    times = resp_times(sim)
    assert times[0] == pytest.approx(1.282)
    assert times[1] - 6.231 == pytest.approx(1.282 - 0.001)


def test_root_trained_model_departs_after_proc():
    sim, root, leaf, nf, cat = hndaf()
    root.on_message(sim, ModelRequest(0, 0), "LEAF0", 0.0)
    sim.run()
    assert [float(c[0]) for c in kinds(sim, "MXFER")] == pytest.approx([0.01 + 1.21])


def test_root_untrained_models_train_serially():
    sim, root, leaf, nf, cat = hndaf(pretrained=False)
    root.on_message(sim, ModelRequest(0, 0), "LEAF0", 0.0)
    root.on_message(sim, ModelRequest(0, 1), "LEAF0", 0.0)
    sim.run()
    xfer = [float(c[0]) for c in kinds(sim, "MXFER")]
    assert xfer[0] == pytest.approx(0.01 + 30 + 1.21)
    # the second waits behind the first training job
    assert xfer[1] == pytest.approx(xfer[0] + 30)


def test_root_update_pushes_new_version_to_subscribers():
    sim, root, leaf, nf, cat = hndaf(update=60.0)
    nf[0].issue(sim, AnalyticsSubscribe(0, 0, 0), 0.0)
    sim.run(horizon=100.0)
    xfer = kinds(sim, "MXFER")
    assert [c[5] for c in xfer] == ["-", "1"]
    assert float(xfer[1][0]) == pytest.approx(0.011 + 60 + 30 + 1.21)
    assert leaf.store.lookup(0).descriptor.version == 1


def test_root_never_answers_analytics():
    sim, root, leaf, nf, cat = hndaf()
    nf[0].issue(sim, AnalyticsRequest(0, 0, 0), 0.0)
    sim.run()
    assert all(c[1] != "ROOT" for c in kinds(sim, "ARSP"))


def baseline(n_nfs=3, pretrained=True, update=float("inf")):
    cat = ModelCatalog()
    for _ in range(4):
        cat.new_type()
    sim = Simulator()
    node = sim.add(BaselineNode(0, list(range(n_nfs)), cat, pretrained=pretrained, model_update_period_s=update))
    nfs = [sim.add(NFNode(k, "NWDAF0")) for k in range(n_nfs)]
    return sim, node, nfs


def test_baseline_single_request():
    sim, node, nfs = baseline()
    nfs[0].issue(sim, AnalyticsRequest(0, 0, 0), 0.0)
    sim.run()
    assert resp_times(sim) == pytest.approx([0.08])


def test_baseline_simultaneous_requests_queue():
    sim, node, nfs = baseline()
    for k in range(3):
        nfs[k].issue(sim, AnalyticsRequest(k, k, k), 0.0)
    sim.run()
    assert resp_times(sim) == pytest.approx([0.01 + k * 0.06 + 0.01 for k in (1, 2, 3)])
    assert not kinds(sim, "MXFER")


def test_baseline_untrained_pays_training():
    sim, node, nfs = baseline(pretrained=False)
    nfs[0].issue(sim, AnalyticsRequest(0, 0, 0), 0.0)
    sim.run()
    assert resp_times(sim) == pytest.approx([0.01 + 0.01 + 30 + 0.05 + 0.01])


def test_baseline_subscription_delivers_periodically():
    sim, node, nfs = baseline()
    nfs[0].issue(sim, AnalyticsSubscribe(0, 0, 1), 0.0)
    sim.run(horizon=11.0)
    assert resp_times(sim) == pytest.approx([0.08, 5.07, 10.07])


def test_baseline_unsubscribe_stops_deliveries():
    sim, node, nfs = baseline()
    nfs[0].issue(sim, AnalyticsSubscribe(0, 0, 1), 0.0)
    nfs[0].issue(sim, AnalyticsUnsubscribe(0, 1), 6.0)
    sim.run(horizon=30.0)
    assert len(resp_times(sim)) == 2
