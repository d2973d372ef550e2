import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"
IMAGES = json.loads((FIXTURES / "images.json").read_text())
GOOD_TOKEN = "MLY|recorded|fixture"
PAGE_SIZE = 2


class RecordedApiHandler(BaseHTTPRequestHandler):
    """Replays recorded Mapillary-v4-shaped responses.

    /images            paginated bbox listing (PAGE_SIZE records per page)
    /<image_id>        single record
    /flaky_then_ok     500 twice, then a record
    /always_broken     500 forever
    """

    def log_message(self, *args):
        pass

    def _send(self, code, payload):
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        server = self.server
        auth = self.headers.get("Authorization", "")
        if auth != f"OAuth {GOOD_TOKEN}":
            self._send(401, {"error": {"message": "invalid token"}})
            return
        parsed = urlparse(self.path)
        query = parse_qs(parsed.query)
        name = parsed.path.strip("/")

        if name == "images":
            ids = sorted(IMAGES)
            page = int(query.get("page", ["1"])[0])
            start = (page - 1) * PAGE_SIZE
            chunk = [IMAGES[i] for i in ids[start:start + PAGE_SIZE]]
            payload = {"data": chunk, "paging": {}}
            if start + PAGE_SIZE < len(ids):
                payload["paging"]["next"] = (
                    f"http://{self.headers['Host']}/images?page={page + 1}")
            self._send(200, payload)
        elif name == "flaky_then_ok":
            server.flaky_calls += 1
            if server.flaky_calls <= 2:
                self._send(500, {"error": {"message": "upstream hiccup"}})
            else:
                self._send(200, IMAGES["1001001001"])
        elif name == "always_broken":
            self._send(500, {"error": {"message": "permanently down"}})
        elif name in IMAGES:
            self._send(200, IMAGES[name])
        else:
            self._send(400, {"error": {"message": f"unknown image {name}"}})


@pytest.fixture()
def api_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), RecordedApiHandler)
    server.flaky_calls = 0
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        thread.join(timeout=5)


@pytest.fixture()
def fixtures_dir():
    return FIXTURES
