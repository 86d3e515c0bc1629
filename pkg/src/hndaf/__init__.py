"""Hierarchical network data analytics: a discrete-event simulator of root and
leaf NWDAFs with CONV and MULTI baselines, plus a small throughput predictor."""

from .engine import LinkModel, Rng, Simulator, transfer_delay
from .protocol import ModelCatalog, ModelDescriptor, ModelKind, decode_message, encode_message
from .scenario import ScenarioConfig, generate_workload, provision_time, run_experiment, sweep
from .store import InsertStatus, ModelStore

__version__ = "0.1.0"
