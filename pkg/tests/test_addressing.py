import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdskit.addressing import ContentAddress, compute_address, verify_content

# well-known sha256 of the empty string, independently published
EMPTY_SHA256 = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def test_empty_input_matches_reference_digest():
    assert compute_address(b"").display == EMPTY_SHA256


def test_deterministic():
    payload = b"the same bytes"
    assert compute_address(payload) == compute_address(payload)


def test_uniqueness_sweep():
    rng = random.Random(1)
    payloads = {rng.randbytes(rng.randint(1, 64)) for _ in range(2000)}
    payloads = list(payloads)[:1000]
    assert len(payloads) == 1000
    addresses = {compute_address(p).display for p in payloads}
    assert len(addresses) == 1000


@given(st.binary(), st.binary())
def test_equal_iff_same_bytes(a, b):
    same = compute_address(a) == compute_address(b)
    assert same == (a == b)


@given(st.binary())
def test_verify_content_roundtrip(data):
    assert verify_content(data, compute_address(data))


def test_hex_roundtrip():
    addr = compute_address(b"xyz")
    assert ContentAddress.from_hex(addr.display) == addr
    assert str(addr) == addr.display
    assert addr.display == addr.display.lower()


def test_bad_digest_length_rejected():
    with pytest.raises(ValueError):
        ContentAddress(digest=b"\x00" * 31)


def test_bad_algorithm_rejected():
    with pytest.raises(ValueError):
        ContentAddress(digest=b"\x00" * 32, algorithm="md5")
