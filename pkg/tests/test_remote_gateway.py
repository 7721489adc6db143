import pytest

from pdskit.addressing import compute_address
from pdskit.errors import EmptyContent, IntegrityError, NotFound, TransportError
from pdskit.store import RemoteGateway


def test_ipfs_put_get_roundtrip(stub_url):
    gw = RemoteGateway(stub_url, protocol="ipfs-api")
    receipt = gw.put(b"hello dfs")
    assert receipt.ok
    assert receipt.gateway_id.startswith("Qm")
    assert receipt.latency_ms > 0
    assert receipt.address == compute_address(b"hello dfs")
    assert gw.get(receipt.address) == b"hello dfs"


def test_skynet_put_get_roundtrip(stub_url):
    gw = RemoteGateway(stub_url, protocol="skynet-upload")
    receipt = gw.put(b"sky bytes")
    assert receipt.ok
    assert receipt.gateway_id.startswith("AAB")
    assert gw.get(receipt.address) == b"sky bytes"


def test_empty_content_rejected(stub_url):
    gw = RemoteGateway(stub_url)
    with pytest.raises(EmptyContent):
        gw.put(b"")


def test_get_unknown_address(stub_url):
    gw = RemoteGateway(stub_url)
    with pytest.raises(NotFound):
        gw.get(compute_address(b"never uploaded"))


def test_gateway_object_lost(stub_gateway, stub_url):
    gw = RemoteGateway(stub_url)
    receipt = gw.put(b"will vanish")
    del stub_gateway.objects[receipt.gateway_id]
    with pytest.raises(NotFound):
        gw.get(receipt.address)


def test_gateway_tampered_object(stub_gateway, stub_url):
    gw = RemoteGateway(stub_url)
    receipt = gw.put(b"original bytes")
    stub_gateway.objects[receipt.gateway_id] = b"replaced bytes"
    with pytest.raises(IntegrityError):
        gw.get(receipt.address)


def test_server_error_maps_to_receipt(stub_gateway, stub_url):
    gw = RemoteGateway(stub_url)
    stub_gateway.fail_status = 500
    receipt = gw.put(b"doomed")
    assert not receipt.ok
    assert receipt.error_code == 500
    stub_gateway.fail_status = 504
    receipt = gw.put(b"doomed again")
    assert receipt.error_code == 504


def test_unreachable_gateway_raises_transport_error():
    gw = RemoteGateway("http://127.0.0.1:1", timeout_s=0.5)
    with pytest.raises(TransportError):
        gw.put(b"no one home")


def test_pin_is_implied_by_upload(stub_url):
    gw = RemoteGateway(stub_url)
    receipt = gw.put(b"pinned by upload")
    assert gw.pin(receipt.address)
    with pytest.raises(NotFound):
        gw.pin(compute_address(b"unknown"))


def test_unknown_protocol_rejected():
    with pytest.raises(ValueError):
        RemoteGateway("http://x", protocol="ftp")
