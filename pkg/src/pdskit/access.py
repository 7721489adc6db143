"""ACL contract emulation and the key-releasing authorization service.

Each channel gets exactly one contract. A contract sells or grants access
to bundles: named sets of references to the whole channel or to single
messages. Payments move integer tokens on an in-process ledger (every
debit has a matching credit, so the book always sums to zero).

The authorization service is the plain client/server variant: it holds the
entire vault of per-message keys and releases exactly the keys covered by
a bundle, after checking the ACL and authenticating the consumer with a
signature over a service-issued single-use nonce.
"""

import os
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PublicKey

from . import crypto
from .errors import (
    AlreadyBound,
    InsufficientPayment,
    InvalidReference,
    NotAuthorized,
    NotOwner,
    UnknownBundle,
    UnknownChannel,
)
from .ledger import Tangle

REF_CHANNEL = "channel"
REF_MESSAGE = "message"


@dataclass(frozen=True)
class BundleRef:
    """Reference to a whole channel or to one message in it."""

    kind: str
    root: str
    index: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (REF_CHANNEL, REF_MESSAGE):
            raise ValueError(f"unknown reference kind: {self.kind!r}")
        if self.kind == REF_MESSAGE and (self.index is None or self.index < 0):
            raise ValueError("message reference needs a non-negative index")


@dataclass
class AclContract:
    contract_id: str
    channel_root: str
    owner_id: str
    bundles: dict[str, tuple[BundleRef, ...]]
    prices: dict[str, int]
    acl: set[tuple[str, str]] = field(default_factory=set)  # (bundle_id, consumer_id)


class ContractRegistry:
    """Holds contracts and the token book; one writer at a time per registry."""

    def __init__(self, ledger: Tangle):
        self._ledger = ledger
        self._contracts: dict[str, AclContract] = {}
        self._by_channel: dict[str, str] = {}
        self.balances: dict[str, int] = defaultdict(int)
        self._lock = threading.Lock()

    def deploy_contract(
        self,
        owner_id: str,
        channel_root: str,
        bundles: dict[str, list[BundleRef]],
        prices: Optional[dict[str, int]] = None,
    ) -> AclContract:
        prices = dict(prices or {})
        with self._lock:
            if not self._ledger.has_channel(channel_root):
                raise UnknownChannel(f"no channel {channel_root[:12]}")
            if channel_root in self._by_channel:
                raise AlreadyBound(f"channel {channel_root[:12]} already has a contract")
            for bundle_id, refs in bundles.items():
                for ref in refs:
                    if ref.root != channel_root:
                        raise InvalidReference(
                            f"bundle {bundle_id!r} references foreign channel {ref.root[:12]}"
                        )
            for bundle_id, price in prices.items():
                if bundle_id not in bundles:
                    raise UnknownBundle(f"price given for undefined bundle {bundle_id!r}")
                if price < 0:
                    raise ValueError("prices must be >= 0")
            contract = AclContract(
                contract_id="acl-" + channel_root[:16],
                channel_root=channel_root,
                owner_id=owner_id,
                bundles={bid: tuple(refs) for bid, refs in bundles.items()},
                prices={bid: int(prices.get(bid, 0)) for bid in bundles},
            )
            self._contracts[contract.contract_id] = contract
            self._by_channel[channel_root] = contract.contract_id
            return contract

    def get(self, contract_id: str) -> AclContract:
        contract = self._contracts.get(contract_id)
        if contract is None:
            raise UnknownChannel(f"no contract {contract_id!r}")
        return contract

    def contract_for_channel(self, channel_root: str) -> AclContract:
        contract_id = self._by_channel.get(channel_root)
        if contract_id is None:
            raise UnknownChannel(f"no contract bound to {channel_root[:12]}")
        return self._contracts[contract_id]

    def grant(self, contract_id: str, caller_id: str, consumer_id: str, bundle_id: str) -> AclContract:
        with self._lock:
            contract = self.get(contract_id)
            if caller_id != contract.owner_id:
                raise NotOwner("only the contract owner can grant access")
            if bundle_id not in contract.bundles:
                raise UnknownBundle(f"no bundle {bundle_id!r}")
            contract.acl.add((bundle_id, consumer_id))  # idempotent
            return contract

    def purchase(self, contract_id: str, consumer_id: str, bundle_id: str, payment: int) -> AclContract:
        with self._lock:
            contract = self.get(contract_id)
            if bundle_id not in contract.bundles:
                raise UnknownBundle(f"no bundle {bundle_id!r}")
            price = contract.prices[bundle_id]
            if payment < price:
                raise InsufficientPayment(f"bundle costs {price}, got {payment}")
            # all checks passed: mutate ACL and book atomically
            contract.acl.add((bundle_id, consumer_id))
            self.balances[consumer_id] -= payment
            self.balances[contract.owner_id] += payment
            return contract

    def is_authorized(self, contract_id: str, consumer_id: str, bundle_id: str) -> bool:
        contract = self._contracts.get(contract_id)
        if contract is None:
            return False
        return (bundle_id, consumer_id) in contract.acl


class AuthorizationService:
    """Client/server key release: checks the ACL, then hands out bundle keys.

    The vault maps (channel_root, message_index) to the per-message key that
    decrypts both the channel message and its DFS object.
    """

    def __init__(self, registry: ContractRegistry, ledger: Tangle, vault=None):
        self.registry = registry
        self.ledger = ledger
        self.vault: dict[tuple[str, int], bytes] = vault if vault is not None else {}
        self._consumers: dict[str, Ed25519PublicKey] = {}
        self._nonces: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def register_consumer(self, public_key: Ed25519PublicKey) -> str:
        consumer_id = crypto.fingerprint(public_key)
        with self._lock:
            self._consumers[consumer_id] = public_key
        return consumer_id

    def issue_nonce(self, consumer_id: str) -> str:
        with self._lock:
            if consumer_id not in self._consumers:
                raise NotAuthorized(f"unknown consumer {consumer_id!r}")
            nonce = os.urandom(16)
            self._nonces[consumer_id] = nonce
            return nonce.hex()

    def _authenticate(self, consumer_id: str, nonce_hex: str, signature: bytes) -> None:
        public = self._consumers.get(consumer_id)
        if public is None:
            raise NotAuthorized(f"unknown consumer {consumer_id!r}")
        expected = self._nonces.get(consumer_id)
        if expected is None or expected.hex() != nonce_hex:
            raise NotAuthorized("nonce not issued or already used")
        del self._nonces[consumer_id]  # single use
        if not crypto.verify(public, signature, expected):
            raise NotAuthorized("signature over nonce does not verify")

    def issue_keys(
        self,
        consumer_id: str,
        contract_id: str,
        bundle_id: str,
        nonce: Optional[str] = None,
        signature: Optional[bytes] = None,
    ) -> dict[tuple[str, int], bytes]:
        """Release the keys for one authorized bundle, nothing more.

        When `nonce`/`signature` are supplied the consumer is authenticated
        first; in-process callers that already trust the caller identity may
        omit them.
        """
        with self._lock:
            if nonce is not None or signature is not None:
                if nonce is None or signature is None:
                    raise NotAuthorized("both nonce and signature are required")
                self._authenticate(consumer_id, nonce, signature)
            if not self.registry.is_authorized(contract_id, consumer_id, bundle_id):
                raise NotAuthorized(
                    f"consumer {consumer_id!r} lacks access to bundle {bundle_id!r}"
                )
            contract = self.registry.get(contract_id)
            keys: dict[tuple[str, int], bytes] = {}
            for ref in contract.bundles[bundle_id]:
                if ref.kind == REF_MESSAGE:
                    key = self.vault.get((ref.root, ref.index))
                    if key is not None:
                        keys[(ref.root, ref.index)] = key
                else:  # whole channel: every published message so far
                    head = self.ledger.channel_head(ref.root)
                    for index in range(head):
                        key = self.vault.get((ref.root, index))
                        if key is not None:
                            keys[(ref.root, index)] = key
            return keys
