"""Content-addressed put/get over pluggable DFS backends.

Two backend kinds share one surface:

* ``SimulatedNode`` — a single-server FIFO queue on a virtual clock. The
  node's uplink is occupied for ``size / service_rate`` per admitted upload;
  ``per_request_overhead`` models client encoding plus network round trip and
  adds to observed latency without occupying the server. An upload whose
  projected completion exceeds ``request_timeout`` is answered with a
  504-analog: the client has given up, but the node has already accepted the
  bytes, so the work still burns uplink capacity and deepens the backlog.
  That asymmetry is what lets back-to-back overload runs cascade instead of
  self-throttling. A full admission queue is answered with a 500-analog and
  consumes nothing.

* ``RemoteGateway`` — a thin HTTP client for real gateways speaking either
  the ``/api/v0/add`` + ``/api/v0/cat`` flavor or the ``/skynet/skyfile``
  upload flavor. The gateway's own identifier is recorded verbatim next to
  the locally computed sha256 address, and every download is re-hashed
  before it is returned.
"""

import json
import logging
import random
import threading
from collections import deque
from dataclasses import dataclass, field, fields, replace
from typing import Optional, Union

import requests

from .addressing import ContentAddress, compute_address
from .errors import (
    EmptyContent,
    IntegrityError,
    NotFound,
    TransportError,
    UnsupportedBackend,
)

logger = logging.getLogger(__name__)

ERR_QUEUE_FULL = 500   # admission queue at capacity, nothing consumed
ERR_TIMEOUT = 504      # client timeout; upload still consumed node capacity


@dataclass(frozen=True)
class PutReceipt:
    """Outcome of one upload attempt."""

    ok: bool
    size: int
    address: Optional[ContentAddress] = None   # present iff ok
    latency_ms: Optional[float] = None         # present iff ok
    error_code: Optional[int] = None           # 500/504 analog, or HTTP status
    gateway_id: Optional[str] = None           # remote gateway's own identifier


@dataclass
class SimNodeConfig:
    service_rate: float             # bytes/second of uplink throughput
    per_request_overhead: float     # ms added to every request's latency
    queue_capacity: int             # max admitted-but-unfinished uploads
    request_timeout: float          # ms a client waits before giving up
    backlog: float = 0.0            # bytes of pending work carried in at start
    rng_seed: int = 0
    storage_capacity: Optional[int] = None   # bytes; None = unbounded
    latency_jitter: float = 0.0     # +/- fraction applied to overhead

    def validate(self) -> None:
        if self.service_rate <= 0:
            raise ValueError("service_rate must be > 0")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        if self.request_timeout <= self.per_request_overhead:
            raise ValueError("request_timeout must exceed per_request_overhead")
        if self.backlog < 0:
            raise ValueError("backlog must be >= 0")
        if not 0.0 <= self.latency_jitter < 1.0:
            raise ValueError("latency_jitter must be in [0, 1)")


def load_sim_config(path: str) -> SimNodeConfig:
    """Read a SimNodeConfig from JSON or flat key=value text."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    known = {f.name: f.type for f in fields(SimNodeConfig)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ValueError(f"unknown SimNodeConfig key: {key!r}")
        if isinstance(value, str):
            if value.lower() in ("none", "null", ""):
                value = None
            elif key in ("queue_capacity", "rng_seed", "storage_capacity"):
                value = int(value)
            else:
                value = float(value)
        kwargs[key] = value
    config = SimNodeConfig(**kwargs)
    config.validate()
    return config


class SimulatedNode:
    """Deterministic single-server DFS node on a virtual clock.

    All mutation is serialized under an internal lock, so one handle can be
    shared across threads of execution. With a fixed seed, schedule, and
    config the receipt stream is bit-identical run to run.
    """

    kind = "simulated"

    def __init__(self, config: SimNodeConfig):
        config.validate()
        self.config = replace(config)
        self.clock_ms: float = 0.0
        # work already owed at construction, expressed as busy time
        self._busy_until_ms: float = config.backlog / config.service_rate * 1000.0
        self._completions: deque[float] = deque()  # completion times of admitted uploads
        self._objects: dict[str, bytes] = {}       # address hex -> bytes, insertion-ordered
        self._pinned: set[str] = set()
        self._stored_bytes = 0
        self._rng = random.Random(config.rng_seed)
        self._lock = threading.Lock()
        self.puts_attempted = 0
        self.total_service_ms = 0.0  # uplink time consumed by admitted uploads

    # -- virtual clock -------------------------------------------------

    def advance_to(self, t_ms: float) -> None:
        """Move the virtual clock forward (never backward)."""
        with self._lock:
            if t_ms > self.clock_ms:
                self.clock_ms = t_ms

    @property
    def backlog_bytes(self) -> float:
        """Pending work still owed by the node, in bytes."""
        pending_ms = max(0.0, self._busy_until_ms - self.clock_ms)
        return pending_ms / 1000.0 * self.config.service_rate

    def drain(self, interval_s: float) -> float:
        """Let the node sit idle for `interval_s`; returns the new backlog.

        Backlog shrinks by interval * service_rate, floored at zero.
        """
        if interval_s < 0:
            raise ValueError("drain interval must be >= 0")
        with self._lock:
            self.clock_ms += interval_s * 1000.0
            self._expire_completed()
        return self.backlog_bytes

    def _expire_completed(self) -> None:
        while self._completions and self._completions[0] <= self.clock_ms:
            self._completions.popleft()

    # -- storage surface -----------------------------------------------

    def put(self, content: bytes) -> PutReceipt:
        cfg = self.config
        with self._lock:
            self.puts_attempted += 1
            size = len(content)
            self._expire_completed()
            if len(self._completions) >= cfg.queue_capacity:
                return PutReceipt(ok=False, size=size, error_code=ERR_QUEUE_FULL)

            overhead = cfg.per_request_overhead
            if cfg.latency_jitter:
                overhead *= 1.0 + cfg.latency_jitter * (2.0 * self._rng.random() - 1.0)
            wait_ms = max(0.0, self._busy_until_ms - self.clock_ms)
            transfer_ms = size / cfg.service_rate * 1000.0
            latency_ms = overhead + wait_ms + transfer_ms

            # The upload is on the wire either way: admit the work now.
            self._busy_until_ms = max(self._busy_until_ms, self.clock_ms) + transfer_ms
            self._completions.append(self._busy_until_ms)
            self.total_service_ms += transfer_ms

            if latency_ms > cfg.request_timeout:
                return PutReceipt(ok=False, size=size, error_code=ERR_TIMEOUT)

            address = compute_address(content)
            if not self._store(address, content):
                return PutReceipt(ok=False, size=size, error_code=ERR_QUEUE_FULL)
            return PutReceipt(ok=True, size=size, address=address, latency_ms=latency_ms)

    def _store(self, address: ContentAddress, content: bytes) -> bool:
        key = address.display
        if key in self._objects:
            # same bytes, same address: refresh recency only
            return True
        cap = self.config.storage_capacity
        if cap is not None:
            if len(content) > cap:
                return False
            # evict unpinned objects oldest-first until the new object fits
            while self._stored_bytes + len(content) > cap:
                victim = next(
                    (k for k in self._objects if k not in self._pinned), None
                )
                if victim is None:
                    return False
                self._stored_bytes -= len(self._objects.pop(victim))
                logger.debug("evicted %s", victim[:12])
        self._objects[key] = content
        self._stored_bytes += len(content)
        return True

    def get(self, address: ContentAddress) -> bytes:
        with self._lock:
            data = self._objects.get(address.display)
        if data is None:
            raise NotFound(f"no object under {address}")
        if compute_address(data) != address:
            raise IntegrityError(f"stored bytes do not match {address}")
        return data

    def pin(self, address: ContentAddress) -> bool:
        with self._lock:
            if address.display not in self._objects:
                raise NotFound(f"no object under {address}")
            self._pinned.add(address.display)
        return True

    def stored_addresses(self) -> list[str]:
        with self._lock:
            return list(self._objects)

    def tamper(self, address: ContentAddress, data: bytes) -> None:
        """Fault-injection hook: overwrite stored bytes without rehashing."""
        with self._lock:
            if address.display not in self._objects:
                raise NotFound(f"no object under {address}")
            self._objects[address.display] = data


class RemoteGateway:
    """HTTP client for a real DFS gateway.

    ``protocol`` selects the wire flavor:

    * ``ipfs-api``:  POST ``<base>/api/v0/add`` (multipart, field ``file``),
      JSON ``Hash`` in the reply; GET ``<base>/api/v0/cat?arg=<id>``.
    * ``skynet-upload``: POST ``<base>/skynet/skyfile`` (multipart), JSON
      ``skylink``; GET ``<base>/<skylink>``.
    """

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        protocol: str = "ipfs-api",
        auth_token: Optional[str] = None,
        timeout_s: float = 60.0,
        session: Optional[requests.Session] = None,
    ):
        if protocol not in ("ipfs-api", "skynet-upload"):
            raise ValueError(f"unknown gateway protocol: {protocol!r}")
        self.base_url = base_url.rstrip("/")
        self.protocol = protocol
        self.timeout_s = timeout_s
        self._session = session or requests.Session()
        if auth_token:
            self._session.headers["Authorization"] = f"Bearer {auth_token}"
        self._index: dict[str, str] = {}  # address hex -> gateway identifier
        self._lock = threading.Lock()

    def _upload_url(self) -> str:
        if self.protocol == "ipfs-api":
            return f"{self.base_url}/api/v0/add"
        return f"{self.base_url}/skynet/skyfile"

    def _download_url(self, gateway_id: str) -> str:
        if self.protocol == "ipfs-api":
            return f"{self.base_url}/api/v0/cat?arg={gateway_id}"
        return f"{self.base_url}/{gateway_id}"

    def put(self, content: bytes) -> PutReceipt:
        if not content:
            raise EmptyContent("remote gateways reject empty uploads")
        import time

        start = time.perf_counter()
        try:
            resp = self._session.post(
                self._upload_url(),
                files={"file": ("blob", content)},
                timeout=self.timeout_s,
            )
        except requests.RequestException as exc:
            raise TransportError(f"gateway unreachable: {exc}") from exc
        latency_ms = (time.perf_counter() - start) * 1000.0
        if resp.status_code >= 400:
            return PutReceipt(ok=False, size=len(content), error_code=resp.status_code)
        payload = resp.json()
        gateway_id = payload.get("Hash") or payload.get("skylink")
        if not gateway_id:
            raise TransportError(f"gateway reply missing identifier: {payload!r}")
        address = compute_address(content)
        with self._lock:
            self._index[address.display] = gateway_id
        return PutReceipt(
            ok=True,
            size=len(content),
            address=address,
            latency_ms=latency_ms,
            gateway_id=gateway_id,
        )

    def get(self, address: ContentAddress) -> bytes:
        with self._lock:
            gateway_id = self._index.get(address.display)
        if gateway_id is None:
            raise NotFound(f"no known gateway object for {address}")
        try:
            resp = self._session.get(self._download_url(gateway_id), timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise TransportError(f"gateway unreachable: {exc}") from exc
        if resp.status_code == 404:
            raise NotFound(f"gateway lost object {gateway_id}")
        if resp.status_code >= 400:
            raise TransportError(f"gateway error {resp.status_code} on get")
        data = resp.content
        if compute_address(data) != address:
            raise IntegrityError(f"gateway bytes do not match {address}")
        return data

    def pin(self, address: ContentAddress) -> bool:
        # uploading through a gateway implies retention on that gateway
        with self._lock:
            if address.display not in self._index:
                raise NotFound(f"no known gateway object for {address}")
        return True


BackendHandle = Union[SimulatedNode, RemoteGateway]


# Free-function surface mirroring the backend methods.

def put(content: bytes, backend: BackendHandle) -> PutReceipt:
    return backend.put(content)


def get(address: ContentAddress, backend: BackendHandle) -> bytes:
    return backend.get(address)


def pin(address: ContentAddress, backend: BackendHandle) -> bool:
    return backend.pin(address)


def drain(backend: BackendHandle, interval_s: float) -> float:
    if not isinstance(backend, SimulatedNode):
        raise UnsupportedBackend("drain is only defined for simulated backends")
    return backend.drain(interval_s)
