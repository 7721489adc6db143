"""Exception types shared across the toolkit."""


class PdsError(Exception):
    """Base class for all toolkit errors."""


# --- storage ---

class NotFound(PdsError):
    """No object / transaction / message under the given identifier."""


class IntegrityError(PdsError):
    """Stored bytes no longer match the digest they were filed under."""


class TransportError(PdsError):
    """Remote gateway unreachable or connection-level failure."""


class EmptyContent(PdsError):
    """Remote gateways refuse zero-length uploads."""


class UnsupportedBackend(PdsError):
    """Operation only defined for a different backend kind."""


# --- ledger ---

class PayloadTooLarge(PdsError):
    """Transaction payload exceeds the ledger payload cap."""


class DuplicateChannel(PdsError):
    """A channel with this root already exists."""


class NotOwner(PdsError):
    """Caller's key does not match the channel / contract owner."""


class DecryptionFailure(PdsError):
    """Wrong key, missing key, or tampered ciphertext."""


# --- access control ---

class AlreadyBound(PdsError):
    """Channel already has a contract."""


class UnknownChannel(PdsError):
    """Contract deployment names a channel that does not exist."""


class InvalidReference(PdsError):
    """Bundle reference points outside the contract's channel."""


class UnknownBundle(PdsError):
    """No bundle with this id in the contract."""


class InsufficientPayment(PdsError):
    """Payment below the bundle price."""


class NotAuthorized(PdsError):
    """Consumer is not in the ACL (or failed request authentication)."""


# --- workload ---

class ParseError(PdsError):
    """Malformed trace row; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyTrace(PdsError):
    """Trace input contained zero valid rows."""


class InsufficientTraces(PdsError):
    """Not enough qualifying buses for the requested schedule."""
