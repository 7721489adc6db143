"""Packaged defaults: the calibrated node profile and the bundled trace excerpt.

The node profile in ``data/sim_calibrated.json`` was produced by
``scripts/calibrate_sim.py`` (procedure in the README): overhead plus
small-object transfer pinned near one second, then the uplink rate fitted
so the ascending large-file sweep collapses around the ninety-user run.
"""

import json
from importlib import resources

from .store import SimNodeConfig
from .workload import TraceRecord, parse_traces

_DATA = "data"
SIM_CONFIG_RESOURCE = "sim_calibrated.json"
TRACE_RESOURCE = "rio_excerpt.csv"


def _read_data_text(name: str) -> str:
    return resources.files("pdskit").joinpath(_DATA, name).read_text(encoding="utf-8")


def default_sim_config() -> SimNodeConfig:
    raw = json.loads(_read_data_text(SIM_CONFIG_RESOURCE))
    config = SimNodeConfig(**raw)
    config.validate()
    return config


def default_traces() -> list[TraceRecord]:
    return parse_traces(_read_data_text(TRACE_RESOURCE))
