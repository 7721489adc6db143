"""Mobility-trace ingestion and deterministic load-schedule generation.

A schedule gives every selected bus one user who emits a fixed number of
messages inside a 15-minute window. By default message times come from the
bus's densest 15-minute stretch of real trace points, which preserves the
bursty arrival pattern of actual traffic; a uniform one-message-per-minute
mode exists for smoke tests.
"""

import csv
import hashlib
import io
import json
import random
from dataclasses import dataclass
from typing import Iterable, TextIO, Union

from .errors import EmptyTrace, InsufficientTraces, ParseError
from .gateway import (
    GEO_PAYLOAD_BYTES,
    KIND_GEOLOCATION,
    KIND_PHOTO,
    PHOTO_PAYLOAD_BYTES,
    SensedRecord,
)

TRACE_HEADER = ["bus_id", "timestamp", "lat", "lon"]

DEFAULT_MSGS_PER_USER = 15
DEFAULT_DURATION_MS = 900_000  # 15 minutes

SPACING_TRACE = "trace"
SPACING_UNIFORM = "uniform"


@dataclass(frozen=True)
class TraceRecord:
    bus_id: str
    timestamp: int   # epoch seconds
    lat: float
    lon: float


@dataclass(frozen=True)
class ScheduleEntry:
    offset_ms: int
    user_id: str
    kind: str
    lat: float
    lon: float
    ts: int          # source trace timestamp, epoch seconds
    msg_index: int   # 0..msgs_per_user-1 within the user


@dataclass
class Schedule:
    entries: list[ScheduleEntry]
    duration_ms: int
    n_users: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "duration_ms": self.duration_ms,
                "n_users": self.n_users,
                "entries": [vars(e) for e in self.entries],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        doc = json.loads(text)
        return cls(
            entries=[ScheduleEntry(**e) for e in doc["entries"]],
            duration_ms=doc["duration_ms"],
            n_users=doc["n_users"],
        )


def parse_traces(source: Union[str, TextIO]) -> list[TraceRecord]:
    """Strict CSV ingestion: bad rows raise, survivors come back sorted.

    Duplicate (bus, timestamp) rows keep the first occurrence; rows for one
    bus are returned in strictly increasing timestamp order.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyTrace("trace input is empty")
    if [h.strip() for h in header] != TRACE_HEADER:
        raise ParseError(f"expected header {','.join(TRACE_HEADER)}", line=1)

    seen: set[tuple[str, int]] = set()
    records: list[TraceRecord] = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
        bus_id = row[0].strip()
        if not bus_id:
            raise ParseError("empty bus_id", line=lineno)
        try:
            timestamp = int(float(row[1]))
            lat = float(row[2])
            lon = float(row[3])
        except ValueError:
            raise ParseError(f"non-numeric field in {row!r}", line=lineno)
        if not -90.0 <= lat <= 90.0:
            raise ParseError(f"lat out of range: {lat}", line=lineno)
        if not -180.0 <= lon <= 180.0:
            raise ParseError(f"lon out of range: {lon}", line=lineno)
        if (bus_id, timestamp) in seen:
            continue
        seen.add((bus_id, timestamp))
        records.append(TraceRecord(bus_id, timestamp, lat, lon))

    if not records:
        raise EmptyTrace("trace input contained zero valid rows")
    records.sort(key=lambda r: (r.bus_id, r.timestamp))
    return records


def parse_trace_file(path: str) -> list[TraceRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_traces(fh)


def _densest_window(timestamps: list[int], width_s: int) -> tuple[int, int, int]:
    """(start index, count, window start time) of the densest width_s window."""
    best = (0, 0, timestamps[0] if timestamps else 0)
    left = 0
    for right in range(len(timestamps)):
        while timestamps[right] - timestamps[left] >= width_s:
            left += 1
        count = right - left + 1
        if count > best[1]:
            best = (left, count, timestamps[left])
    return best


def _subsample_evenly(items: list, k: int) -> list:
    if len(items) == k:
        return list(items)
    last = len(items) - 1
    return [items[round(i * last / (k - 1))] for i in range(k)]


def build_schedule(
    traces: Iterable[TraceRecord],
    n_users: int,
    msgs_per_user: int = DEFAULT_MSGS_PER_USER,
    duration_ms: int = DEFAULT_DURATION_MS,
    kind: str = KIND_GEOLOCATION,
    seed: int = 0,
    spacing: str = SPACING_TRACE,
) -> Schedule:
    """Pick one user per qualifying bus and lay out their message times.

    A bus qualifies when its densest window of `duration_ms` holds at least
    `msgs_per_user` points. Bus selection shuffles the sorted bus list with
    the seed, so the choice does not depend on dataset ordering.
    """
    if spacing not in (SPACING_TRACE, SPACING_UNIFORM):
        raise ValueError(f"unknown spacing mode: {spacing!r}")
    by_bus: dict[str, list[TraceRecord]] = {}
    for record in traces:
        by_bus.setdefault(record.bus_id, []).append(record)
    for rows in by_bus.values():
        rows.sort(key=lambda r: r.timestamp)

    width_s = duration_ms // 1000
    candidates = sorted(by_bus)
    random.Random(seed).shuffle(candidates)

    selected: list[tuple[str, list[TraceRecord], int]] = []
    for bus_id in candidates:
        rows = by_bus[bus_id]
        start_idx, count, window_start = _densest_window(
            [r.timestamp for r in rows], width_s
        )
        if count >= msgs_per_user:
            selected.append((bus_id, rows[start_idx:start_idx + count], window_start))
        if len(selected) == n_users:
            break
    if len(selected) < n_users:
        raise InsufficientTraces(
            f"need {n_users} buses with >= {msgs_per_user} points in a "
            f"{width_s}s window, found {len(selected)}"
        )

    entries: list[ScheduleEntry] = []
    for user_index, (bus_id, window_rows, window_start) in enumerate(selected):
        user_id = f"user-{bus_id}"
        points = _subsample_evenly(window_rows, msgs_per_user)
        for msg_index, point in enumerate(points):
            if spacing == SPACING_TRACE:
                offset_ms = (point.timestamp - window_start) * 1000
                offset_ms = min(offset_ms, duration_ms - 1)
            else:
                per_msg = duration_ms // msgs_per_user
                stagger = (user_index * per_msg) // max(1, n_users)
                offset_ms = msg_index * per_msg + stagger
            entries.append(
                ScheduleEntry(
                    offset_ms=offset_ms,
                    user_id=user_id,
                    kind=kind,
                    lat=point.lat,
                    lon=point.lon,
                    ts=point.timestamp,
                    msg_index=msg_index,
                )
            )
    entries.sort(key=lambda e: (e.offset_ms, e.user_id, e.msg_index))
    return Schedule(entries=entries, duration_ms=duration_ms, n_users=n_users)


def _derived_seed(seed: int, user_id: str, index: int) -> int:
    # stable across processes, unlike builtin hash()
    blob = f"{seed}|{user_id}|{index}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def synth_payload(
    kind: str,
    point,
    seed: int = 0,
    user_id: str = "user-0",
    index: int = 0,
) -> SensedRecord:
    """Materialize the record for one schedule entry, byte-exact in size.

    `point` is a ScheduleEntry or a (lat, lon, ts) triple. Output depends
    only on (seed, user_id, index) plus the point's coordinates.
    """
    if isinstance(point, ScheduleEntry):
        lat, lon, ts = point.lat, point.lon, point.ts
        user_id, index = point.user_id, point.msg_index
    else:
        lat, lon, ts = point

    if kind == KIND_GEOLOCATION:
        base = f'{{"lat":{lat:.6f},"lon":{lon:.6f},"ts":{ts},"pad":""}}'
        pad = GEO_PAYLOAD_BYTES - len(base)
        if pad < 0:
            raise ValueError(f"coordinates render longer than {GEO_PAYLOAD_BYTES} bytes")
        payload = (
            f'{{"lat":{lat:.6f},"lon":{lon:.6f},"ts":{ts},"pad":"{" " * pad}"}}'
        ).encode("ascii")
        assert len(payload) == GEO_PAYLOAD_BYTES
        return SensedRecord(
            user_id=user_id,
            timestamp=ts * 1000,
            kind=KIND_GEOLOCATION,
            payload=payload,
            personal=True,  # location identifies a person
        )
    if kind == KIND_PHOTO:
        rng = random.Random(_derived_seed(seed, user_id, index))
        payload = rng.randbytes(PHOTO_PAYLOAD_BYTES)
        return SensedRecord(
            user_id=user_id,
            timestamp=ts * 1000,
            kind=KIND_PHOTO,
            payload=payload,
            personal=False,
        )
    raise ValueError(f"unknown payload kind: {kind!r}")
