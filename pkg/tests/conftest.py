import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from pdskit import defaults
from pdskit.crypto import KeyPair
from pdskit.ledger import Tangle
from pdskit.store import SimNodeConfig, SimulatedNode


@pytest.fixture(scope="session")
def rio_traces():
    return defaults.default_traces()


@pytest.fixture(scope="session")
def calibrated_config():
    return defaults.default_sim_config()


@pytest.fixture
def sim_node():
    """Plain deterministic node: 1 MB/s, 10 ms overhead, roomy queue."""
    return SimulatedNode(
        SimNodeConfig(
            service_rate=1_000_000,
            per_request_overhead=10.0,
            queue_capacity=1000,
            request_timeout=60_000,
        )
    )


@pytest.fixture
def ledger():
    return Tangle(tip_seed=42)


@pytest.fixture
def owner():
    return KeyPair.generate()


# --- stub DFS gateway over HTTP ---------------------------------------


def _extract_multipart_file(body: bytes, content_type: str) -> bytes:
    boundary = content_type.split("boundary=")[1].encode()
    for part in body.split(b"--" + boundary):
        if b"filename=" not in part:
            continue
        _, _, payload = part.partition(b"\r\n\r\n")
        return payload.rsplit(b"\r\n", 1)[0]
    raise ValueError("no file part in multipart body")


class _StubHandler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _reply_json(self, doc: bytes, status: int = 200):
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(doc)))
        self.end_headers()
        self.wfile.write(doc)

    def do_POST(self):
        if self.server.fail_status:
            self._reply_json(b'{"error": "induced"}', status=self.server.fail_status)
            return
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length)
        content = _extract_multipart_file(body, self.headers.get("Content-Type", ""))
        import hashlib

        digest = hashlib.sha256(content).hexdigest()
        if self.path.startswith("/api/v0/add"):
            gid = "Qm" + digest[:44]
            self.server.objects[gid] = content
            self._reply_json(
                f'{{"Name": "blob", "Hash": "{gid}", "Size": "{len(content)}"}}'.encode()
            )
        elif self.path.startswith("/skynet/skyfile"):
            skylink = "AAB" + digest[:43]
            self.server.objects[skylink] = content
            self._reply_json(f'{{"skylink": "{skylink}"}}'.encode())
        else:
            self._reply_json(b'{"error": "bad path"}', status=404)

    def do_GET(self):
        if self.path.startswith("/api/v0/cat"):
            gid = self.path.split("arg=")[1]
        else:
            gid = self.path.lstrip("/")
        data = self.server.objects.get(gid)
        if data is None:
            self._reply_json(b'{"error": "not found"}', status=404)
            return
        self.send_response(200)
        self.send_header("Content-Type", "application/octet-stream")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


@pytest.fixture
def stub_gateway():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    server.objects = {}
    server.fail_status = None
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()


@pytest.fixture
def stub_url(stub_gateway):
    host, port = stub_gateway.server_address
    return f"http://{host}:{port}"
