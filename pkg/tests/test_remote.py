import json
import threading
from datetime import date
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from rulehop.explore import CandidateContext, Path, SelectionContext
from rulehop.market import DOWN, UP
from rulehop.remote import HttpRelationSelector, HttpValidator
from rulehop.rules import Rule
from rulehop.verdict import ValidatorContext

DAY = date(2022, 6, 1)


class _Handler(BaseHTTPRequestHandler):
    behavior = "ok"

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        if self.behavior == "garbage":
            body = b"{}"
        elif payload["kind"] == "selector":
            body = json.dumps({"scores": [1] * len(payload["candidates"])}).encode()
        else:
            body = json.dumps({"label": DOWN, "plausibility": 0.25}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    httpd = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{httpd.server_port}/"
    httpd.shutdown()


def _ctx():
    return SelectionContext(
        DAY,
        (CandidateContext("S", (), "SELLS", "Z", "Event", DAY, 2),
         CandidateContext("S", (), "SUED", "W", "Event", DAY, 1)),
    )


def test_http_selector_roundtrip(server):
    selector = HttpRelationSelector(server)
    assert selector(_ctx()) == [1, 1]
    assert selector.fallback_count == 0


def test_http_selector_falls_back_on_garbage(server):
    _Handler.behavior = "garbage"
    try:
        selector = HttpRelationSelector(server)
        scores = selector(_ctx())
        assert selector.fallback_count == 1
        assert scores == selector.fallback(_ctx())
    finally:
        _Handler.behavior = "ok"


def test_http_selector_falls_back_on_dead_endpoint():
    selector = HttpRelationSelector("http://127.0.0.1:1/", timeout=0.2)
    scores = selector(_ctx())
    assert selector.fallback_count == 1
    assert len(scores) == 2


def test_http_validator_roundtrip_and_fallback(server):
    rule = Rule(("SELLS",), UP, 10, 8, 0.8)
    path = Path(("S", "Z"), ("SELLS",), (DAY,))
    ctx = ValidatorContext(DAY, "TS", None, ())
    validator = HttpValidator(server)
    assert validator(ctx, path, rule) == (DOWN, 0.25)

    dead = HttpValidator("http://127.0.0.1:1/", timeout=0.2)
    label, p = dead(ctx, path, rule)
    assert dead.fallback_count == 1
    assert label == UP and p == 0.5  # deterministic local fallback
