"""Publication pipeline for sensed records.

Routing heuristic: personal data and anything larger than the small-data
threshold goes to the DFS backend as an encrypted object, with its digest
anchored in the owner's channel afterward; small non-personal data is
published straight into the channel. Uploads return as soon as the DFS
acknowledges; the anchor completes asynchronously, modeled here as a
pending queue the owner flushes.

The anchored digest covers the *ciphertext*, so replicas of the DFS object
never expose plaintext and integrity is checkable without the key.
"""

import json
import threading
from dataclasses import dataclass
from typing import MutableMapping, Optional, Union

from . import crypto
from .addressing import ContentAddress, compute_address
from .errors import DecryptionFailure, IntegrityError, NotFound
from .ledger import MessageRef, Tangle
from .store import BackendHandle, PutReceipt

KIND_GEOLOCATION = "geolocation"
KIND_PHOTO = "photo"

GEO_PAYLOAD_BYTES = 100
PHOTO_PAYLOAD_BYTES = 1_048_576

ROUTE_DIRECT_LEDGER = "direct-ledger"
ROUTE_DFS_WITH_ANCHOR = "dfs-with-anchor"

ANCHOR_PENDING = "pending"
ANCHOR_ANCHORED = "anchored"

DEFAULT_SMALL_THRESHOLD = 128  # bytes, ~4x a sha256 digest

_ANCHOR_TAG = b"addr:"
_INLINE_TAG = b"data:"


@dataclass(frozen=True)
class SensedRecord:
    """One user-generated datum."""

    user_id: str
    timestamp: int          # epoch milliseconds
    kind: str               # "geolocation", "photo", or any free-form label
    payload: bytes
    personal: bool


def validate_record(record: SensedRecord) -> None:
    """Enforce the payload contracts for the two canonical kinds."""
    if record.kind == KIND_GEOLOCATION:
        if len(record.payload) != GEO_PAYLOAD_BYTES:
            raise ValueError(
                f"geolocation payload must be {GEO_PAYLOAD_BYTES} bytes, "
                f"got {len(record.payload)}"
            )
        doc = json.loads(record.payload)
        if not -90.0 <= float(doc["lat"]) <= 90.0:
            raise ValueError(f"lat out of range: {doc['lat']}")
        if not -180.0 <= float(doc["lon"]) <= 180.0:
            raise ValueError(f"lon out of range: {doc['lon']}")
    elif record.kind == KIND_PHOTO:
        if len(record.payload) != PHOTO_PAYLOAD_BYTES:
            raise ValueError(
                f"photo payload must be {PHOTO_PAYLOAD_BYTES} bytes, "
                f"got {len(record.payload)}"
            )


def classify(record: SensedRecord, small_threshold: int = DEFAULT_SMALL_THRESHOLD) -> str:
    """Pure routing decision: DFS iff personal or larger than the threshold."""
    if record.personal or len(record.payload) > small_threshold:
        return ROUTE_DFS_WITH_ANCHOR
    return ROUTE_DIRECT_LEDGER


@dataclass
class PublishReceipt:
    placement: str
    ok: bool
    error_code: Optional[int] = None
    content_address: Optional[ContentAddress] = None  # DFS route only
    message_ref: Optional[MessageRef] = None          # set once anchored
    anchor_state: str = ANCHOR_PENDING
    dfs_latency_ms: Optional[float] = None


@dataclass
class _PendingAnchor:
    receipt: PublishReceipt
    key: bytes


class PdsGateway:
    """Owner-side gateway binding one channel to one DFS backend.

    Per-message keys are deposited into ``key_sink`` (typically the
    authorization service's vault) as soon as the message index is known.
    Publishes on one channel are serialized to keep message order.
    """

    def __init__(
        self,
        ledger: Tangle,
        backend: BackendHandle,
        channel,
        owner: crypto.KeyPair,
        small_threshold: int = DEFAULT_SMALL_THRESHOLD,
        key_sink: Optional[MutableMapping] = None,
    ):
        self.ledger = ledger
        self.backend = backend
        self.channel = channel
        self.owner = owner
        self.small_threshold = small_threshold
        self.key_sink = key_sink if key_sink is not None else {}
        self._pending: list[_PendingAnchor] = []
        self._lock = threading.Lock()

    def publish(self, record: SensedRecord) -> PublishReceipt:
        route = classify(record, self.small_threshold)
        with self._lock:
            if route == ROUTE_DIRECT_LEDGER:
                return self._publish_direct(record)
            return self._publish_dfs(record)

    def _publish_direct(self, record: SensedRecord) -> PublishReceipt:
        key = crypto.new_message_key()
        ref = self.ledger.publish_message(
            self.channel, _INLINE_TAG + record.payload, key, self.owner.private
        )
        self.key_sink[(ref.root, ref.index)] = key
        return PublishReceipt(
            placement=ROUTE_DIRECT_LEDGER,
            ok=True,
            message_ref=ref,
            anchor_state=ANCHOR_ANCHORED,
        )

    def _publish_dfs(self, record: SensedRecord) -> PublishReceipt:
        key = crypto.new_message_key()
        ciphertext = crypto.seal(record.payload, key)
        put_receipt: PutReceipt = self.backend.put(ciphertext)
        if not put_receipt.ok:
            # nothing stored, nothing to anchor
            return PublishReceipt(
                placement=ROUTE_DFS_WITH_ANCHOR,
                ok=False,
                error_code=put_receipt.error_code,
            )
        receipt = PublishReceipt(
            placement=ROUTE_DFS_WITH_ANCHOR,
            ok=True,
            content_address=put_receipt.address,
            anchor_state=ANCHOR_PENDING,
            dfs_latency_ms=put_receipt.latency_ms,
        )
        self._pending.append(_PendingAnchor(receipt=receipt, key=key))
        return receipt

    def pending_anchor_count(self) -> int:
        with self._lock:
            return len(self._pending)

    def process_pending_anchors(self) -> int:
        """Complete all queued anchors; returns how many were anchored."""
        with self._lock:
            pending, self._pending = self._pending, []
            for task in pending:
                address = task.receipt.content_address
                plaintext = _ANCHOR_TAG + address.display.encode("ascii")
                ref = self.ledger.publish_message(
                    self.channel, plaintext, task.key, self.owner.private
                )
                self.key_sink[(ref.root, ref.index)] = task.key
                task.receipt.message_ref = ref
                task.receipt.anchor_state = ANCHOR_ANCHORED
            return len(pending)


def receipt_json_line(receipt: PublishReceipt) -> str:
    """One receipt as a single JSON line, for report pipelines."""
    ref = receipt.message_ref
    doc = {
        "placement": receipt.placement,
        "ok": receipt.ok,
        "error_code": receipt.error_code,
        "content_address": (
            receipt.content_address.display if receipt.content_address else None
        ),
        "message_ref": (
            {"root": ref.root, "index": ref.index, "tx_id": ref.tx_id} if ref else None
        ),
        "anchor_state": receipt.anchor_state,
        "dfs_latency_ms": receipt.dfs_latency_ms,
    }
    return json.dumps(doc, sort_keys=True)


def write_receipts_jsonl(receipts, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for receipt in receipts:
            fh.write(receipt_json_line(receipt) + "\n")


def read_receipts_jsonl(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def parse_channel_plaintext(plaintext: bytes) -> tuple[str, Union[ContentAddress, bytes]]:
    """Split a decrypted channel message into ('anchor', address) or ('inline', bytes)."""
    if plaintext.startswith(_ANCHOR_TAG):
        return "anchor", ContentAddress.from_hex(plaintext[len(_ANCHOR_TAG):].decode("ascii"))
    if plaintext.startswith(_INLINE_TAG):
        return "inline", plaintext[len(_INLINE_TAG):]
    raise IntegrityError("channel message carries an unknown frame tag")


def retrieve(
    ledger: Tangle,
    ref: Union[MessageRef, tuple[str, int]],
    keys,
    backend: Optional[BackendHandle] = None,
) -> bytes:
    """Read a channel message and resolve it to the original record payload.

    For anchored messages the DFS object is fetched, checked against the
    anchored digest (the store re-hashes before returning), and decrypted
    with the same per-message key.
    """
    root, index = (ref.root, ref.index) if isinstance(ref, MessageRef) else ref
    key = keys.get((root, index)) if hasattr(keys, "get") else None
    if key is None:
        raise DecryptionFailure(f"no key held for message {index} of {root[:12]}")
    plaintext = ledger.read_message((root, index), key)
    tag, value = parse_channel_plaintext(plaintext)
    if tag == "inline":
        return value
    if backend is None:
        raise NotFound("anchored message needs a DFS backend to resolve")
    ciphertext = backend.get(value)  # raises IntegrityError on digest mismatch
    return crypto.unseal(ciphertext, key)
