"""Scenario runner: replays schedules against a backend and reports stats.

Simulated backends run in virtual time (a 15-minute scenario finishes in
milliseconds); remote gateways run on the wall clock with one worker per
user so users stay concurrent with each other while each user's own
requests remain sequential. Failed requests carry no latency and are
excluded from averaging; they only move the error rate.

A sweep executes its scenarios strictly in order with a drain interval in
between, so a simulated node's leftover backlog bleeds into the next run
exactly the way consecutive stress tests compound on a real node.
"""

import json
import logging
import math
import os
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import TransportError
from .gateway import KIND_GEOLOCATION, KIND_PHOTO
from .store import BackendHandle, SimulatedNode
from .workload import Schedule, synth_payload

logger = logging.getLogger(__name__)

Z95 = 1.96  # normal approximation; runs have 150+ samples

PAYLOAD_SMALL = "small"
PAYLOAD_LARGE = "large"

_PAYLOAD_KIND = {PAYLOAD_SMALL: KIND_GEOLOCATION, PAYLOAD_LARGE: KIND_PHOTO}


def payload_kind(payload: str) -> str:
    return _PAYLOAD_KIND[payload]

CSV_HEADER = "label,n_users,payload,mean_latency_ms,ci95_halfwidth_ms,error_rate_pct,n_ok,n_err"


@dataclass(frozen=True)
class RunConfig:
    label: str
    n_users: int
    payload: str                 # "small" | "large"
    seed: int = 0
    drain_interval_s: float = 600.0
    backend_kind: str = "sim"    # "sim" | "ipfs-gw" | "skynet-gw"
    gw_url: Optional[str] = None

    def __post_init__(self):
        if self.payload not in _PAYLOAD_KIND:
            raise ValueError(f"payload must be one of {sorted(_PAYLOAD_KIND)}")


@dataclass(frozen=True)
class Measurement:
    user_id: str
    send_offset_ms: int
    latency_ms: Optional[float]   # present iff ok
    error_code: Optional[int]     # None iff ok

    @property
    def ok(self) -> bool:
        return self.error_code is None


@dataclass
class RunResult:
    config: RunConfig
    measurements: list[Measurement] = field(default_factory=list)
    aborted: bool = False
    abort_reason: Optional[str] = None


@dataclass(frozen=True)
class SummaryStats:
    mean_latency_ms: Optional[float]      # over ok requests; None if n_ok = 0
    ci95_halfwidth_ms: Optional[float]    # None if n_ok < 2
    error_rate_pct: float
    n_ok: int
    n_err: int


def summarize(result: RunResult) -> SummaryStats:
    """Mean + normal-approximation 95% CI over successful requests only."""
    latencies = [m.latency_ms for m in result.measurements if m.ok]
    n_ok = len(latencies)
    n_err = len(result.measurements) - n_ok
    total = n_ok + n_err
    error_rate_pct = 100.0 * n_err / total if total else 0.0
    mean = statistics.fmean(latencies) if n_ok else None
    ci = (
        Z95 * statistics.stdev(latencies) / math.sqrt(n_ok)
        if n_ok >= 2
        else None
    )
    return SummaryStats(
        mean_latency_ms=mean,
        ci95_halfwidth_ms=ci,
        error_rate_pct=error_rate_pct,
        n_ok=n_ok,
        n_err=n_err,
    )


def run_scenario(config: RunConfig, schedule: Schedule, backend: BackendHandle) -> RunResult:
    """Dispatch every schedule entry and collect one measurement apiece."""
    if schedule.n_users != config.n_users:
        raise ValueError(
            f"schedule built for {schedule.n_users} users, config says {config.n_users}"
        )
    kind = _PAYLOAD_KIND[config.payload]
    if isinstance(backend, SimulatedNode):
        return _run_virtual(config, schedule, backend, kind)
    return _run_wall_clock(config, schedule, backend, kind)


def _run_virtual(config, schedule, node: SimulatedNode, kind) -> RunResult:
    result = RunResult(config=config)
    run_start = node.clock_ms
    entries = sorted(schedule.entries, key=lambda e: (e.offset_ms, e.user_id, e.msg_index))
    for entry in entries:
        node.advance_to(run_start + entry.offset_ms)
        record = synth_payload(kind, entry, seed=config.seed)
        receipt = node.put(record.payload)
        result.measurements.append(
            Measurement(
                user_id=entry.user_id,
                send_offset_ms=entry.offset_ms,
                latency_ms=receipt.latency_ms,
                error_code=receipt.error_code,
            )
        )
    return result


def _run_wall_clock(config, schedule, backend, kind) -> RunResult:
    """One worker per user; a user's requests stay sequential."""
    result = RunResult(config=config)
    by_user: dict[str, list] = {}
    for entry in schedule.entries:
        by_user.setdefault(entry.user_id, []).append(entry)
    sink_lock = threading.Lock()
    abort = threading.Event()
    abort_reason: list[str] = []
    t0 = time.monotonic()

    def worker(entries):
        for entry in sorted(entries, key=lambda e: e.offset_ms):
            if abort.is_set():
                return
            delay = entry.offset_ms / 1000.0 - (time.monotonic() - t0)
            if delay > 0:
                time.sleep(delay)
            record = synth_payload(kind, entry, seed=config.seed)
            try:
                receipt = backend.put(record.payload)
            except TransportError as exc:
                abort_reason.append(str(exc))
                abort.set()
                return
            with sink_lock:
                result.measurements.append(
                    Measurement(
                        user_id=entry.user_id,
                        send_offset_ms=entry.offset_ms,
                        latency_ms=receipt.latency_ms,
                        error_code=receipt.error_code,
                    )
                )

    threads = [
        threading.Thread(target=worker, args=(entries,), daemon=True)
        for entries in by_user.values()
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if abort.is_set():
        result.aborted = True
        result.abort_reason = abort_reason[0] if abort_reason else "backend unreachable"
        logger.warning("scenario %s aborted: %s", config.label, result.abort_reason)
    result.measurements.sort(key=lambda m: (m.send_offset_ms, m.user_id))
    return result


def run_sweep(
    configs: Sequence[RunConfig],
    schedules: Sequence[Schedule],
    backend: BackendHandle,
) -> list[RunResult]:
    """Run scenarios strictly in order, draining the node between runs.

    Whatever backlog the drain interval cannot clear is carried into the
    next scenario; an aborted scenario is recorded and the sweep continues.
    """
    if len(configs) != len(schedules):
        raise ValueError("configs and schedules must pair up")
    results: list[RunResult] = []
    for i, (config, schedule) in enumerate(zip(configs, schedules)):
        if i > 0:
            interval = configs[i - 1].drain_interval_s
            if isinstance(backend, SimulatedNode):
                backend.drain(interval)
            elif interval > 0:
                time.sleep(interval)
        try:
            results.append(run_scenario(config, schedule, backend))
        except TransportError as exc:
            results.append(
                RunResult(config=config, aborted=True, abort_reason=str(exc))
            )
    return results


def build_sweep(
    traces,
    users: Sequence[int] = tuple(range(10, 101, 10)),
    payloads: Sequence[str] = (PAYLOAD_SMALL, PAYLOAD_LARGE),
    seed: int = 0,
    drain_interval_s: float = 600.0,
    backend_kind: str = "sim",
    gw_url: Optional[str] = None,
    spacing: str = "trace",
) -> tuple[list[RunConfig], list[Schedule]]:
    """Ordered stress-test plan: all user counts per payload, small first."""
    from .workload import build_schedule

    configs: list[RunConfig] = []
    schedules: list[Schedule] = []
    for payload in payloads:
        for n in users:
            configs.append(
                RunConfig(
                    label=f"{payload}-{n:03d}",
                    n_users=n,
                    payload=payload,
                    seed=seed,
                    drain_interval_s=drain_interval_s,
                    backend_kind=backend_kind,
                    gw_url=gw_url,
                )
            )
            schedules.append(
                build_schedule(
                    traces, n, kind=_PAYLOAD_KIND[payload], seed=seed, spacing=spacing
                )
            )
    return configs, schedules


# -- reporting ------------------------------------------------------------


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6f}"


def summary_csv_lines(results: Sequence[RunResult]) -> list[str]:
    lines = [CSV_HEADER]
    for result in results:
        stats = summarize(result)
        cfg = result.config
        lines.append(
            f"{cfg.label},{cfg.n_users},{cfg.payload},"
            f"{_fmt(stats.mean_latency_ms)},{_fmt(stats.ci95_halfwidth_ms)},"
            f"{stats.error_rate_pct:.6f},{stats.n_ok},{stats.n_err}"
        )
    return lines


def _atomic_write(path: str, text: str) -> None:
    # stage in the target directory so a failed write leaves nothing behind
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(f"cannot write report to {path!r}")


def results_to_json_doc(results: Sequence[RunResult]) -> list[dict]:
    return [
        {
            "label": r.config.label,
            "n_users": r.config.n_users,
            "payload": r.config.payload,
            "seed": r.config.seed,
            "drain_interval_s": r.config.drain_interval_s,
            "backend_kind": r.config.backend_kind,
            "aborted": r.aborted,
            "abort_reason": r.abort_reason,
            "measurements": [
                {
                    "user_id": m.user_id,
                    "send_offset_ms": m.send_offset_ms,
                    "latency_ms": m.latency_ms,
                    "error_code": m.error_code,
                }
                for m in r.measurements
            ],
        }
        for r in results
    ]


def results_from_json_doc(doc: list[dict]) -> list[RunResult]:
    results = []
    for item in doc:
        config = RunConfig(
            label=item["label"],
            n_users=item["n_users"],
            payload=item["payload"],
            seed=item.get("seed", 0),
            drain_interval_s=item.get("drain_interval_s", 600.0),
            backend_kind=item.get("backend_kind", "sim"),
        )
        measurements = [
            Measurement(
                user_id=m["user_id"],
                send_offset_ms=m["send_offset_ms"],
                latency_ms=m["latency_ms"],
                error_code=m["error_code"],
            )
            for m in item["measurements"]
        ]
        results.append(
            RunResult(
                config=config,
                measurements=measurements,
                aborted=item.get("aborted", False),
                abort_reason=item.get("abort_reason"),
            )
        )
    return results


def export(results: Sequence[RunResult], format: str, path: str) -> None:
    """Write a report; CSV summarizes per run, JSON keeps every measurement."""
    if not results:
        raise ValueError("nothing to export")
    if format == "csv":
        _atomic_write(path, "\n".join(summary_csv_lines(results)) + "\n")
    elif format == "json":
        _atomic_write(
            path, json.dumps(results_to_json_doc(results), sort_keys=True, indent=1)
        )
    else:
        raise ValueError(f"unknown export format: {format!r}")


def load_results_json(path: str) -> list[RunResult]:
    with open(path, "r", encoding="utf-8") as fh:
        return results_from_json_doc(json.load(fh))
