"""Scripted UE-throughput-prediction walkthrough on a one-leaf H-NDAF.

The root collects data and trains a predictor, the PCF's leaf fetches the
model on its first request, infers locally and hands the result to the PCF,
whose policy hook only logs what it would do.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .engine import Rng, Simulator
from .nodes import LeafNode, NFNode, RootNode, ServiceTimes
from .predictor import FeatureSet, generate_synthetic_dataset, predict, train
from .protocol import AnalyticsRequest, ModelCatalog

log = logging.getLogger(__name__)

PCF = 0
STEP_TITLES = {
    1: "root collects UE location (AMF), RAN status (OAM) and UE ID (AF)",
    2: "MTLF trains the UE throughput prediction model",
    3: "trained model saved in the root model store",
    4: "leaf of PCF requests the model and the root transmits it",
    5: "leaf AnLF derives the analytics by inference",
    6: "analytics delivered to the collocated PCF",
    7: "PCF updates the policy for UE data flows (no-op)",
}
LINE_STEP = {"AREQ": 4, "MREQ": 4, "MXFER": 4, "ARSP": 6}


@dataclass
class TraceStep:
    step: int
    time: float
    detail: str
    lines: list[str] = field(default_factory=list)

    def render(self) -> list[str]:
        out = [f"[{self.step}] {self.time:.6f} {STEP_TITLES[self.step]} :: {self.detail}"]
        out += [f"      {line}" for line in self.lines]
        return out


def policy_update(predicted_mbps: float, current_mbps: float) -> str:
    """PCF hook: report the decision it would take, change nothing."""
    action = "raise QoS level" if predicted_mbps < current_mbps else "keep QoS level"
    log.info("PCF policy hook: %s (predicted %.2f Mbps)", action, predicted_mbps)
    return action


def run_usecase(
    seed: int = 0,
    n_samples: int = 1000,
    times: ServiceTimes = ServiceTimes(),
    collection_s: float = 1.0,
    request_at: float = 35.0,
    pcf_policy_s: float = 0.001,
) -> list[TraceStep]:
    rng = Rng(seed)
    steps: list[TraceStep] = []

    data = generate_synthetic_dataset(n_samples, rng)
    steps.append(TraceStep(1, collection_s, f"{len(data.samples)} samples from {data.n_ues} UEs"))

    model = train(data, FeatureSet.D5, ridge_lambda=1e-6)
    t_trained = collection_s + times.training_s
    steps.append(TraceStep(2, t_trained, f"D5 ridge model, {len(model.weights)} weights"))

    catalog = ModelCatalog()
    type_id = catalog.new_type()
    root = RootNode(catalog, times, pretrained=False)
    root.trained_models[type_id] = catalog[type_id]
    t_stored = t_trained + times.root_proc_s
    steps.append(
        TraceStep(3, t_stored, f"type {type_id}, {catalog[type_id].size_bytes} B "
                  f"(predictor payload {model.serialized_size()} B)")
    )

    sim = Simulator()
    pcf = NFNode(PCF, "LEAF0")
    leaf = LeafNode(0, [PCF], 100_000_000, times)
    for node in (pcf, leaf, root):
        sim.add(node)
    pcf.issue(sim, AnalyticsRequest(0, PCF, type_id), max(request_at, t_stored))
    sim.run()

    grouped: dict[int, list[str]] = {4: [], 6: []}
    times_by_kind = {}
    for line in sim.log_lines:
        kind = line.split("|")[3]
        grouped[LINE_STEP[kind]].append(line)
        times_by_kind[kind] = float(line.split("|")[0])

    sample = data.test[0]
    predicted = predict(model, sample, FeatureSet.D5)
    t_xfer = times_by_kind["MXFER"]
    t_resp = times_by_kind["ARSP"]
    steps.append(TraceStep(4, t_xfer, f"model type {type_id} stored at LEAF0", grouped[4]))
    steps.append(
        TraceStep(5, t_xfer + times.inference_s,
                  f"UE {sample.ue_id}: predicted {predicted:.2f} Mbps")
    )
    steps.append(TraceStep(6, t_resp, "analytics response to PCF", grouped[6]))
    action = policy_update(predicted, sample.past_throughput[0])
    steps.append(TraceStep(7, t_resp + pcf_policy_s, action))
    return steps


def render_trace(steps: list[TraceStep]) -> str:
    return "\n".join(line for s in steps for line in s.render()) + "\n"
