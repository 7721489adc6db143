import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdskit.crypto import new_message_key, seal
from pdskit.errors import DecryptionFailure, IntegrityError
from pdskit.gateway import (
    ANCHOR_ANCHORED,
    ANCHOR_PENDING,
    DEFAULT_SMALL_THRESHOLD,
    KIND_GEOLOCATION,
    KIND_PHOTO,
    PdsGateway,
    ROUTE_DFS_WITH_ANCHOR,
    ROUTE_DIRECT_LEDGER,
    SensedRecord,
    classify,
    parse_channel_plaintext,
    retrieve,
    validate_record,
)
from pdskit.store import ERR_TIMEOUT, SimNodeConfig, SimulatedNode


def record(payload: bytes, personal: bool = False, kind: str = "blob") -> SensedRecord:
    return SensedRecord(
        user_id="u1", timestamp=0, kind=kind, payload=payload, personal=personal
    )


def geo_record() -> SensedRecord:
    from pdskit.workload import synth_payload

    return synth_payload(KIND_GEOLOCATION, (-22.9, -43.2, 0))


def photo_record(seed: int = 0) -> SensedRecord:
    payload = random.Random(seed).randbytes(1_048_576)
    return SensedRecord(
        user_id="u1", timestamp=0, kind=KIND_PHOTO, payload=payload, personal=False
    )


@pytest.fixture
def pipeline(ledger, owner, sim_node):
    channel = ledger.create_channel(owner, nonce="pipe")
    gw = PdsGateway(ledger, sim_node, channel, owner)
    return gw, channel, sim_node, ledger


# --- routing ---------------------------------------------------------


def test_personal_geolocation_routes_to_dfs():
    assert classify(geo_record()) == ROUTE_DFS_WITH_ANCHOR


def test_large_photo_routes_to_dfs_by_size():
    rec = record(b"\x00" * 1_048_576, personal=False)
    assert classify(rec) == ROUTE_DFS_WITH_ANCHOR


def test_small_nonpersonal_routes_to_ledger():
    rec = record(b'{"temp": 21.5}' + b" " * 66, personal=False)  # 80 bytes
    assert len(rec.payload) == 80
    assert classify(rec, small_threshold=128) == ROUTE_DIRECT_LEDGER


@pytest.mark.parametrize("personal", [True, False])
@pytest.mark.parametrize("delta", [-1, 0, 1])
def test_routing_truth_table_at_threshold(personal, delta):
    size = DEFAULT_SMALL_THRESHOLD + delta
    rec = record(b"b" * size, personal=personal)
    expected = (
        ROUTE_DFS_WITH_ANCHOR
        if personal or size > DEFAULT_SMALL_THRESHOLD
        else ROUTE_DIRECT_LEDGER
    )
    assert classify(rec) == expected


@given(st.integers(min_value=0, max_value=4096), st.booleans())
def test_routing_heuristic_property(size, personal):
    rec = record(b"p" * size, personal=personal)
    route = classify(rec)
    if personal or size > DEFAULT_SMALL_THRESHOLD:
        assert route == ROUTE_DFS_WITH_ANCHOR
    else:
        assert route == ROUTE_DIRECT_LEDGER


def test_validate_record_contracts():
    validate_record(geo_record())
    validate_record(photo_record())
    with pytest.raises(ValueError):
        validate_record(record(b"short", kind=KIND_GEOLOCATION))
    with pytest.raises(ValueError):
        validate_record(record(b"x" * 100, kind=KIND_PHOTO))
    bad_geo = json.dumps({"lat": 95.0, "lon": 0.0}).encode().ljust(100)
    with pytest.raises(ValueError):
        validate_record(record(bad_geo, kind=KIND_GEOLOCATION))


# --- publish / retrieve ----------------------------------------------


def test_photo_publish_pending_then_anchored(pipeline):
    gw, channel, node, ledger = pipeline
    receipt = gw.publish(photo_record())
    assert receipt.ok
    assert receipt.placement == ROUTE_DFS_WITH_ANCHOR
    assert receipt.anchor_state == ANCHOR_PENDING
    assert receipt.message_ref is None
    assert receipt.dfs_latency_ms > 0

    assert gw.process_pending_anchors() == 1
    assert receipt.anchor_state == ANCHOR_ANCHORED
    assert receipt.message_ref is not None
    # anchored digest resolves on the backend
    assert node.get(receipt.content_address)


def test_publish_and_retrieve_roundtrip(pipeline):
    gw, channel, node, ledger = pipeline
    rec = photo_record(seed=3)
    receipt = gw.publish(rec)
    gw.process_pending_anchors()
    got = retrieve(ledger, receipt.message_ref, gw.key_sink, node)
    assert got == rec.payload


def test_direct_ledger_publish_no_dfs_traffic(pipeline):
    gw, channel, node, ledger = pipeline
    before = node.puts_attempted
    rec = record(b"t" * 80, personal=False)
    receipt = gw.publish(rec)
    assert receipt.ok
    assert receipt.placement == ROUTE_DIRECT_LEDGER
    assert receipt.anchor_state == ANCHOR_ANCHORED  # immediate
    assert receipt.content_address is None
    assert node.puts_attempted == before
    got = retrieve(ledger, receipt.message_ref, gw.key_sink, node)
    assert got == rec.payload


def test_publish_during_overload_leaves_no_orphan_anchor(ledger, owner):
    # backlog already months past the client timeout
    node = SimulatedNode(
        SimNodeConfig(
            service_rate=1000,
            per_request_overhead=1.0,
            queue_capacity=1000,
            request_timeout=5000,
            backlog=10_000,
        )
    )
    channel = ledger.create_channel(owner, nonce="overload")
    gw = PdsGateway(ledger, node, channel, owner)
    receipt = gw.publish(photo_record(seed=9))
    assert not receipt.ok
    assert receipt.error_code == ERR_TIMEOUT
    assert receipt.message_ref is None
    assert gw.pending_anchor_count() == 0
    assert channel.head_index == 0
    assert gw.process_pending_anchors() == 0


def test_retrieve_with_wrong_key(pipeline):
    gw, channel, node, ledger = pipeline
    receipt = gw.publish(photo_record(seed=4))
    gw.process_pending_anchors()
    ref = receipt.message_ref
    wrong = {(ref.root, ref.index): new_message_key()}
    with pytest.raises(DecryptionFailure):
        retrieve(ledger, ref, wrong, node)
    with pytest.raises(DecryptionFailure):
        retrieve(ledger, ref, {}, node)  # holds no key at all


def test_replaced_backend_object_fails_integrity(pipeline):
    gw, channel, node, ledger = pipeline
    rng = random.Random(21)
    for i in range(10):
        rec = record(rng.randbytes(rng.randint(200, 2000)), personal=True)
        receipt = gw.publish(rec)
        gw.process_pending_anchors()
        impostor = seal(b"not the original", new_message_key())
        node.tamper(receipt.content_address, impostor)
        with pytest.raises(IntegrityError):
            retrieve(ledger, receipt.message_ref, gw.key_sink, node)


def test_anchor_plaintext_format(pipeline):
    gw, channel, node, ledger = pipeline
    receipt = gw.publish(photo_record(seed=5))
    gw.process_pending_anchors()
    ref = receipt.message_ref
    key = gw.key_sink[(ref.root, ref.index)]
    plaintext = ledger.read_message(ref, key)
    assert plaintext == b"addr:" + receipt.content_address.display.encode()
    tag, addr = parse_channel_plaintext(plaintext)
    assert tag == "anchor"
    assert addr == receipt.content_address


def test_receipts_serialize_to_json_lines(pipeline, tmp_path):
    gw, channel, node, ledger = pipeline
    receipts = [
        gw.publish(record(b"j" * 300, personal=True)),
        gw.publish(record(b"k" * 64, personal=False)),
    ]
    gw.process_pending_anchors()
    path = tmp_path / "receipts.jsonl"
    from pdskit.gateway import read_receipts_jsonl, write_receipts_jsonl

    write_receipts_jsonl(receipts, str(path))
    assert len(path.read_text().splitlines()) == 2  # one receipt per line
    docs = read_receipts_jsonl(str(path))
    assert docs[0]["placement"] == ROUTE_DFS_WITH_ANCHOR
    assert docs[0]["anchor_state"] == ANCHOR_ANCHORED
    assert docs[0]["content_address"] == receipts[0].content_address.display
    assert docs[1]["placement"] == ROUTE_DIRECT_LEDGER
    assert docs[1]["content_address"] is None
    assert docs[1]["message_ref"]["index"] == receipts[1].message_ref.index


def test_anchors_eventually_complete(pipeline):
    gw, channel, node, ledger = pipeline
    receipts = [gw.publish(record(b"r" * 500, personal=True)) for _ in range(10)]
    assert all(r.anchor_state == ANCHOR_PENDING for r in receipts)
    gw.process_pending_anchors()
    assert all(r.anchor_state == ANCHOR_ANCHORED for r in receipts)
    indices = sorted(r.message_ref.index for r in receipts)
    assert indices == list(range(10))  # anchors land in publish order
    for r in receipts:
        assert node.get(r.content_address)  # no orphans
