"""Symmetric envelopes and owner signatures.

One fresh 256-bit key per published message; the same key seals both the
channel message and the bulk object it references. Envelope layout is
``nonce(12) || AES-GCM ciphertext+tag``, so any bit flip fails the tag
check instead of yielding garbled plaintext.
"""

import hashlib
import os
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    PublicFormat,
)

from .errors import DecryptionFailure

KEY_LEN = 32
NONCE_LEN = 12


def new_message_key() -> bytes:
    return os.urandom(KEY_LEN)


def seal(plaintext: bytes, key: bytes) -> bytes:
    """Authenticated encryption under a per-message key."""
    nonce = os.urandom(NONCE_LEN)
    return nonce + AESGCM(key).encrypt(nonce, plaintext, None)


def unseal(envelope: bytes, key: bytes) -> bytes:
    """Decrypt and verify; raises DecryptionFailure rather than returning junk."""
    if len(envelope) < NONCE_LEN + 16:
        raise DecryptionFailure("envelope too short")
    nonce, body = envelope[:NONCE_LEN], envelope[NONCE_LEN:]
    try:
        return AESGCM(key).decrypt(nonce, body, None)
    except Exception as exc:  # InvalidTag and malformed-key errors alike
        raise DecryptionFailure("cannot decrypt: wrong key or tampered data") from exc


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 signing pair used by channel owners and consumers."""

    private: Ed25519PrivateKey
    public: Ed25519PublicKey

    @classmethod
    def generate(cls) -> "KeyPair":
        priv = Ed25519PrivateKey.generate()
        return cls(private=priv, public=priv.public_key())

    @classmethod
    def from_seed(cls, seed: bytes) -> "KeyPair":
        """Deterministic pair from 32 seed bytes (tests, adversarial sweeps)."""
        priv = Ed25519PrivateKey.from_private_bytes(hashlib.sha256(seed).digest())
        return cls(private=priv, public=priv.public_key())

    @property
    def public_bytes(self) -> bytes:
        return public_raw(self.public)


def public_raw(public: Ed25519PublicKey) -> bytes:
    return public.public_bytes(Encoding.Raw, PublicFormat.Raw)


def public_from_raw(raw: bytes) -> Ed25519PublicKey:
    return Ed25519PublicKey.from_public_bytes(raw)


def sign(private: Ed25519PrivateKey, data: bytes) -> bytes:
    return private.sign(data)


def verify(public: Ed25519PublicKey, signature: bytes, data: bytes) -> bool:
    try:
        public.verify(signature, data)
        return True
    except InvalidSignature:
        return False


def fingerprint(public: Ed25519PublicKey) -> str:
    """Short stable identity string for a public key."""
    return hashlib.sha256(public_raw(public)).hexdigest()[:16]
