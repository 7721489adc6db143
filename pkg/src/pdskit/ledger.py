"""Simulated Tangle: a fee-less DAG ledger carrying encrypted channels.

Every new transaction approves two prior transactions, picked uniformly at
random from the current tips (seeded, so ledgers are replayable). On top of
the DAG sit owner-signed channels: ordered streams of encrypted messages,
each message's transaction chaining to its predecessor's so a channel reads
back as a linked list. There is no proof-of-work and no fee model; attaching
is instantaneous in virtual time.
"""

import hashlib
import json
import random
import threading
from dataclasses import dataclass
from typing import Optional, Union

from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from . import crypto
from .errors import (
    DecryptionFailure,
    DuplicateChannel,
    IntegrityError,
    NotFound,
    NotOwner,
    PayloadTooLarge,
)

DEFAULT_PAYLOAD_CAP = 1024  # transactions carry digests or small data, never blobs

_GENESIS_PAYLOAD = b"tangle-genesis"
_MSG_MAGIC = b"MAM1"


def _tx_id(parents: tuple[str, ...], payload: bytes, timestamp: int) -> str:
    h = hashlib.sha256()
    h.update(b"TX1")
    h.update(len(parents).to_bytes(1, "big"))
    for parent in parents:
        h.update(bytes.fromhex(parent))
    h.update(timestamp.to_bytes(8, "big"))
    h.update(payload)
    return h.hexdigest()


@dataclass(frozen=True)
class Transaction:
    id: str
    parents: tuple[str, ...]   # exactly 2, except the parentless genesis
    payload: bytes
    timestamp: int             # logical time: attach order

    def recompute_id(self) -> str:
        return _tx_id(self.parents, self.payload, self.timestamp)


@dataclass
class Channel:
    root: str                       # hex hash of (owner public key, nonce)
    owner_public_key: Ed25519PublicKey
    head_index: int = 0             # count of published messages


@dataclass(frozen=True)
class MessageRef:
    root: str
    index: int
    tx_id: str


@dataclass(frozen=True)
class ChannelMessage:
    root: str
    index: int
    ciphertext: bytes
    signature: bytes
    tx_id: str


def channel_root(owner_public: Ed25519PublicKey, nonce: Union[bytes, str]) -> str:
    if isinstance(nonce, str):
        nonce = nonce.encode("utf-8")
    h = hashlib.sha256()
    h.update(b"channel")
    h.update(crypto.public_raw(owner_public))
    h.update(nonce)
    return h.hexdigest()


def _encode_message(root: str, index: int, ciphertext: bytes, signature: bytes) -> bytes:
    return (
        _MSG_MAGIC
        + bytes.fromhex(root)
        + index.to_bytes(8, "big")
        + signature
        + ciphertext
    )


def _decode_message(payload: bytes, tx_id: str) -> ChannelMessage:
    if len(payload) < 4 + 32 + 8 + 64 or payload[:4] != _MSG_MAGIC:
        raise IntegrityError("transaction payload is not a channel message")
    root = payload[4:36].hex()
    index = int.from_bytes(payload[36:44], "big")
    signature = payload[44:108]
    ciphertext = payload[108:]
    return ChannelMessage(
        root=root, index=index, ciphertext=ciphertext, signature=signature, tx_id=tx_id
    )


def _signed_blob(root: str, index: int, ciphertext: bytes) -> bytes:
    return bytes.fromhex(root) + index.to_bytes(8, "big") + ciphertext


class Tangle:
    """DAG ledger plus channel registry. Appends are atomic; reads never block."""

    def __init__(self, tip_seed: int = 0, payload_cap: int = DEFAULT_PAYLOAD_CAP):
        self.payload_cap = payload_cap
        self._rng = random.Random(tip_seed)
        self._lock = threading.Lock()
        self._clock = 0
        genesis_id = _tx_id((), _GENESIS_PAYLOAD, 0)
        self.genesis_id = genesis_id
        self.transactions: dict[str, Transaction] = {
            genesis_id: Transaction(genesis_id, (), _GENESIS_PAYLOAD, 0)
        }
        self.tips: set[str] = {genesis_id}
        self.channels: dict[str, Channel] = {}
        self._messages: dict[tuple[str, int], str] = {}  # (root, index) -> tx id

    # -- base ledger -----------------------------------------------------

    def attach(self, payload: bytes) -> str:
        """Append a transaction approving two tips; no fee, returns its id."""
        if len(payload) > self.payload_cap:
            raise PayloadTooLarge(
                f"payload of {len(payload)} bytes exceeds cap {self.payload_cap}"
            )
        with self._lock:
            return self._attach_locked(payload)

    def _attach_locked(self, payload: bytes, link_parent: Optional[str] = None) -> str:
        tips = sorted(self.tips)
        if link_parent is not None:
            # channel messages chain to their predecessor's transaction
            others = [t for t in tips if t != link_parent]
            second = self._rng.choice(others) if others else link_parent
            parents = (link_parent, second)
        elif len(tips) == 1:
            parents = (tips[0], tips[0])
        else:
            parents = tuple(self._rng.sample(tips, 2))
        self._clock += 1
        timestamp = self._clock
        tx = Transaction(_tx_id(parents, payload, timestamp), parents, payload, timestamp)
        self.transactions[tx.id] = tx
        self.tips.difference_update(parents)
        self.tips.add(tx.id)
        return tx.id

    def verify_inclusion(self, tx_id: str) -> bool:
        """True iff the transaction exists and re-hashes to its stored id."""
        tx = self.transactions.get(tx_id)
        if tx is None:
            return False
        return tx.recompute_id() == tx.id

    # -- channels ----------------------------------------------------------

    def create_channel(self, owner: crypto.KeyPair, nonce: Union[bytes, str]) -> Channel:
        root = channel_root(owner.public, nonce)
        with self._lock:
            if root in self.channels:
                raise DuplicateChannel(f"channel {root[:12]} already exists")
            channel = Channel(root=root, owner_public_key=owner.public)
            self.channels[root] = channel
        return channel

    def publish_message(
        self,
        channel: Union[Channel, str],
        plaintext: bytes,
        key: bytes,
        owner_private: Ed25519PrivateKey,
    ) -> MessageRef:
        """Encrypt, sign, and anchor one message at the channel head."""
        chan = self._resolve_channel(channel)
        ciphertext = crypto.seal(plaintext, key)
        with self._lock:
            index = chan.head_index
            signature = crypto.sign(
                owner_private, _signed_blob(chan.root, index, ciphertext)
            )
            # reject forgeries before anything touches the DAG
            if not crypto.verify(
                chan.owner_public_key,
                signature,
                _signed_blob(chan.root, index, ciphertext),
            ):
                raise NotOwner("signing key does not match the channel owner")
            payload = _encode_message(chan.root, index, ciphertext, signature)
            if len(payload) > self.payload_cap:
                raise PayloadTooLarge(
                    f"message payload of {len(payload)} bytes exceeds cap"
                )
            predecessor = self._messages.get((chan.root, index - 1))
            tx_id = self._attach_locked(payload, link_parent=predecessor)
            self._messages[(chan.root, index)] = tx_id
            chan.head_index = index + 1
        return MessageRef(root=chan.root, index=index, tx_id=tx_id)

    def read_message(
        self,
        ref: Union[MessageRef, tuple[str, int]],
        key: bytes,
    ) -> bytes:
        """Decrypt a channel message, re-verifying signature and AEAD tag."""
        root, index = (ref.root, ref.index) if isinstance(ref, MessageRef) else ref
        tx_id = self._messages.get((root, index))
        if tx_id is None:
            raise NotFound(f"no message {index} in channel {root[:12]}")
        tx = self.transactions.get(tx_id)
        if tx is None:
            raise NotFound(f"carrying transaction {tx_id[:12]} missing")
        message = _decode_message(tx.payload, tx_id)
        channel = self.channels.get(root)
        if channel is None:
            raise NotFound(f"unknown channel {root[:12]}")
        if not crypto.verify(
            channel.owner_public_key,
            message.signature,
            _signed_blob(message.root, message.index, message.ciphertext),
        ):
            raise IntegrityError("channel message signature no longer verifies")
        return crypto.unseal(message.ciphertext, key)

    def get_message(self, root: str, index: int) -> ChannelMessage:
        tx_id = self._messages.get((root, index))
        if tx_id is None:
            raise NotFound(f"no message {index} in channel {root[:12]}")
        return _decode_message(self.transactions[tx_id].payload, tx_id)

    def has_channel(self, root: str) -> bool:
        return root in self.channels

    def channel_head(self, root: str) -> int:
        channel = self.channels.get(root)
        if channel is None:
            raise NotFound(f"unknown channel {root[:12]}")
        return channel.head_index

    def _resolve_channel(self, channel: Union[Channel, str]) -> Channel:
        root = channel.root if isinstance(channel, Channel) else channel
        chan = self.channels.get(root)
        if chan is None:
            raise NotFound(f"unknown channel {root[:12]}")
        return chan

    # -- export / import ---------------------------------------------------

    def export_state(self) -> dict:
        """Whole-ledger snapshot as a JSON-serializable document."""
        return {
            "payload_cap": self.payload_cap,
            "genesis": self.genesis_id,
            "transactions": [
                {
                    "id": tx.id,
                    "parents": list(tx.parents),
                    "payload": tx.payload.hex(),
                    "timestamp": tx.timestamp,
                }
                for tx in self.transactions.values()
            ],
            "channels": [
                {
                    "root": chan.root,
                    "owner_public_key": crypto.public_raw(chan.owner_public_key).hex(),
                    "head_index": chan.head_index,
                }
                for chan in self.channels.values()
            ],
            "messages": [
                {"root": root, "index": index, "tx_id": tx_id}
                for (root, index), tx_id in self._messages.items()
            ],
        }

    @classmethod
    def import_state(cls, doc: dict, tip_seed: int = 0) -> "Tangle":
        ledger = cls(tip_seed=tip_seed, payload_cap=doc.get("payload_cap", DEFAULT_PAYLOAD_CAP))
        ledger.transactions = {}
        max_ts = 0
        for item in doc["transactions"]:
            tx = Transaction(
                id=item["id"],
                parents=tuple(item["parents"]),
                payload=bytes.fromhex(item["payload"]),
                timestamp=item["timestamp"],
            )
            ledger.transactions[tx.id] = tx
            max_ts = max(max_ts, tx.timestamp)
        ledger._clock = max_ts
        ledger.genesis_id = doc["genesis"]
        referenced = {p for tx in ledger.transactions.values() for p in tx.parents}
        ledger.tips = set(ledger.transactions) - referenced
        ledger.channels = {
            item["root"]: Channel(
                root=item["root"],
                owner_public_key=crypto.public_from_raw(
                    bytes.fromhex(item["owner_public_key"])
                ),
                head_index=item["head_index"],
            )
            for item in doc["channels"]
        }
        ledger._messages = {
            (item["root"], item["index"]): item["tx_id"] for item in doc["messages"]
        }
        return ledger

    def export_json(self) -> str:
        return json.dumps(self.export_state(), sort_keys=True)

    @classmethod
    def import_json(cls, text: str, tip_seed: int = 0) -> "Tangle":
        return cls.import_state(json.loads(text), tip_seed=tip_seed)


def topological_order(ledger: Tangle) -> list[str]:
    """Kahn's algorithm over the approval DAG; raises if a cycle exists."""
    indegree: dict[str, int] = {tx_id: 0 for tx_id in ledger.transactions}
    children: dict[str, list[str]] = {tx_id: [] for tx_id in ledger.transactions}
    for tx in ledger.transactions.values():
        for parent in set(tx.parents):
            children[parent].append(tx.id)
            indegree[tx.id] += 1
    ready = [tx_id for tx_id, deg in indegree.items() if deg == 0]
    order: list[str] = []
    while ready:
        node = ready.pop()
        order.append(node)
        for child in children[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
    if len(order) != len(ledger.transactions):
        raise IntegrityError("approval graph contains a cycle")
    return order
