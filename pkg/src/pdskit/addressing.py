"""Content addressing: the SHA-256 digest of an object is its identifier.

Anyone holding the bytes can recompute the address, so the address doubles
as an integrity proof for whatever store served the bytes.
"""

import hashlib
from dataclasses import dataclass, field

DIGEST_LEN = 32  # sha256 output, raw bytes


@dataclass(frozen=True)
class ContentAddress:
    """Hash-based identifier of a stored object."""

    digest: bytes
    algorithm: str = field(default="sha256")

    def __post_init__(self):
        if self.algorithm != "sha256":
            raise ValueError(f"unsupported hash algorithm: {self.algorithm}")
        if len(self.digest) != DIGEST_LEN:
            raise ValueError(
                f"digest must be {DIGEST_LEN} bytes for sha256, got {len(self.digest)}"
            )

    @property
    def display(self) -> str:
        """Lowercase hex rendering."""
        return self.digest.hex()

    @classmethod
    def from_hex(cls, text: str) -> "ContentAddress":
        return cls(digest=bytes.fromhex(text))

    def __str__(self) -> str:
        return self.display


def compute_address(content: bytes) -> ContentAddress:
    """Deterministic address of a byte sequence (empty input allowed)."""
    return ContentAddress(digest=hashlib.sha256(content).digest())


def verify_content(content: bytes, address: ContentAddress) -> bool:
    """True iff the bytes hash back to the address."""
    return compute_address(content) == address
