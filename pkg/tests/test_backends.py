import base64
import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from procap.errors import BackendError, BackendProtocolError, BackendTimeoutError
from procap.probing import (
    BACKEND_URL_ENV,
    DecodeParams,
    FixtureVQABackend,
    HTTPVQABackend,
    VQARequest,
    generate_procap,
    make_backend,
    select_bank,
)


class Handler(BaseHTTPRequestHandler):
    mode = "ok"
    seen = []

    def log_message(self, *args):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append((self.path, body))
        if self.mode == "slow":
            time.sleep(0.5)
        if self.mode == "500":
            self.send_response(500)
            self.end_headers()
            return
        payload = {"answer": f"  echo {body['prompt']}  "} if self.mode != "noanswer" else {"text": "x"}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class QuietServer(ThreadingHTTPServer):
    def handle_error(self, request, client_address):
        pass  # the timeout test hangs up mid-response


@pytest.fixture
def server():
    Handler.mode = "ok"
    Handler.seen = []
    srv = QuietServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}"
    srv.shutdown()
    srv.server_close()


IMG = np.full((4, 5, 3), 7, np.uint8)


def test_http_request_shape(server):
    backend = HTTPVQABackend(server)
    out = backend.answer(VQARequest(IMG, "Question: hi? Answer:", 2.0, 30))
    assert out == "  echo Question: hi? Answer:  "
    path, body = Handler.seen[0]
    assert path == "/v1/vqa"
    assert body["length_penalty"] == 2.0 and body["max_new_tokens"] == 30
    assert base64.b64decode(body["image_b64"]).startswith(b"\x89PNG")


def test_http_answers_are_stripped_in_procap(server):
    pc = generate_procap("m", IMG, select_bank("content_only"), HTTPVQABackend(server), DecodeParams())
    assert pc.answers["content"] == "echo Question: what is shown in the image? Answer:"


@pytest.mark.parametrize("mode, err", [("500", BackendProtocolError), ("noanswer", BackendProtocolError)])
def test_http_protocol_errors(server, mode, err):
    Handler.mode = mode
    with pytest.raises(err, match="meme=m, focus=content"):
        generate_procap("m", IMG, select_bank("content_only"), HTTPVQABackend(server), DecodeParams())


def test_http_timeout(server):
    Handler.mode = "slow"
    with pytest.raises(BackendTimeoutError):
        HTTPVQABackend(server, timeout=0.05).answer(VQARequest(IMG, "q", 1.0, 5, "m", "content"))


def test_unreachable_backend():
    with pytest.raises(BackendProtocolError):
        HTTPVQABackend("http://127.0.0.1:9", timeout=1).answer(VQARequest(IMG, "q", 1.0, 5))


def test_make_backend(monkeypatch, tmp_path):
    (tmp_path / "a.json").write_text("{}")
    assert isinstance(make_backend(f"fixture:{tmp_path / 'a.json'}"), FixtureVQABackend)
    monkeypatch.setenv(BACKEND_URL_ENV, "http://example.invalid:1")
    assert isinstance(make_backend(f"fixture:{tmp_path / 'a.json'}"), HTTPVQABackend)
    monkeypatch.delenv(BACKEND_URL_ENV)
    with pytest.raises(BackendError):
        make_backend(None)
    with pytest.raises(BackendError):
        make_backend("grpc://x")
