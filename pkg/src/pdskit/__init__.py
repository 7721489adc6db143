"""pdskit: decentralized personal data storage toolkit.

Content-addressed storage over simulated or remote DFS backends, a
Tangle-style ledger with encrypted owner-signed channels, ACL-contract
access control, and a trace-driven benchmark harness.
"""

__version__ = "0.1.0"

from .addressing import ContentAddress, compute_address
from .bench import (
    Measurement,
    RunConfig,
    RunResult,
    SummaryStats,
    run_scenario,
    run_sweep,
    summarize,
)
from .crypto import KeyPair
from .gateway import PdsGateway, SensedRecord, classify, retrieve
from .ledger import Channel, MessageRef, Tangle, Transaction
from .store import (
    PutReceipt,
    RemoteGateway,
    SimNodeConfig,
    SimulatedNode,
    drain,
    get,
    pin,
    put,
)
from .workload import Schedule, TraceRecord, build_schedule, parse_traces, synth_payload

__all__ = [
    "ContentAddress",
    "compute_address",
    "Measurement",
    "RunConfig",
    "RunResult",
    "SummaryStats",
    "run_scenario",
    "run_sweep",
    "summarize",
    "KeyPair",
    "PdsGateway",
    "SensedRecord",
    "classify",
    "retrieve",
    "Channel",
    "MessageRef",
    "Tangle",
    "Transaction",
    "PutReceipt",
    "RemoteGateway",
    "SimNodeConfig",
    "SimulatedNode",
    "drain",
    "get",
    "pin",
    "put",
    "Schedule",
    "TraceRecord",
    "build_schedule",
    "parse_traces",
    "synth_payload",
]
