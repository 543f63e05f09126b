"""HTTP surface for driving and observing a run.

Endpoints (all JSON unless noted):

  GET  /api/run              run status, config, and the fittest pair so far
  GET  /api/pending          {"pending": null} or the measurement request card
  GET  /api/pending/A.stl    binary STL for the pending pair (also B.stl)
  GET  /api/history          {"rows": [...]} one row per measurement
  POST /api/measurement      {"request_id": ..., "rpm": ...}

Measurement replies: 200 accepted, 409 duplicate, 404 unknown request,
422 malformed payload. Every response carries permissive CORS headers so a
console served from another origin can talk to it. Static files for the
bundled console are served from an optional directory at the root path.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .journal import to_native
from .session import Session

log = logging.getLogger(__name__)

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
    ".png": "image/png",
}

_FALLBACK_PAGE = """<!doctype html>
<title>vawtevo</title>
<h1>vawtevo run service</h1>
<p>No console bundle is configured. API endpoints:</p>
<ul>
<li><code>GET /api/run</code></li>
<li><code>GET /api/pending</code></li>
<li><code>GET /api/pending/A.stl</code>, <code>GET /api/pending/B.stl</code></li>
<li><code>GET /api/history</code></li>
<li><code>POST /api/measurement</code></li>
</ul>
"""


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    # set by ServiceHandle on the handler subclass
    session: Session = None
    static_dir: Path | None = None

    def log_message(self, format, *args):
        log.debug("%s - %s", self.address_string(), format % args)

    # ------------------------------------------------------------- responses

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _send_bytes(self, status, body: bytes, content_type: str):
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Cache-Control", "no-store")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status, payload: dict):
        body = json.dumps(to_native(payload)).encode("utf-8")
        self._send_bytes(status, body, "application/json")

    def _send_error_json(self, status, message: str):
        self._send_json(status, {"error": message})

    # ---------------------------------------------------------------- routes

    def do_OPTIONS(self):
        self.send_response(HTTPStatus.NO_CONTENT)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        try:
            if path == "/api/run":
                self._send_json(HTTPStatus.OK, self.session.run_info())
            elif path == "/api/pending":
                pending = self.session.pending()
                self._send_json(HTTPStatus.OK, {"pending": pending})
            elif path in ("/api/pending/A.stl", "/api/pending/B.stl"):
                self._pending_stl(path[-5])
            elif path == "/api/history":
                self._send_json(HTTPStatus.OK, {"rows": self.session.history_rows()})
            elif path.startswith("/api/"):
                self._send_error_json(HTTPStatus.NOT_FOUND, "no such endpoint")
            else:
                self._static(path)
        except BrokenPipeError:
            pass
        except Exception:
            log.exception("GET %s failed", path)
            self._send_error_json(HTTPStatus.INTERNAL_SERVER_ERROR, "internal error")

    def _pending_stl(self, species: str):
        pending = self.session.pending()
        if pending is None:
            self._send_error_json(HTTPStatus.NOT_FOUND, "no measurement is pending")
            return
        stl_path = Path(pending["stl"][species])
        if not stl_path.is_file():
            self._send_error_json(HTTPStatus.NOT_FOUND, "stl file missing")
            return
        self._send_bytes(HTTPStatus.OK, stl_path.read_bytes(), "model/stl")

    def _static(self, path: str):
        if self.static_dir is None:
            if path == "/":
                self._send_bytes(HTTPStatus.OK, _FALLBACK_PAGE.encode("utf-8"),
                                 "text/html; charset=utf-8")
            else:
                self._send_error_json(HTTPStatus.NOT_FOUND, "not found")
            return
        rel = path.lstrip("/") or "index.html"
        root = self.static_dir.resolve()
        target = (root / rel).resolve()
        # refuse anything that escapes the console directory
        if root not in target.parents and target != root:
            self._send_error_json(HTTPStatus.NOT_FOUND, "not found")
            return
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            self._send_error_json(HTTPStatus.NOT_FOUND, "not found")
            return
        content_type = _CONTENT_TYPES.get(target.suffix.lower(), "application/octet-stream")
        self._send_bytes(HTTPStatus.OK, target.read_bytes(), content_type)

    def do_POST(self):
        path = self.path.split("?", 1)[0]
        if path != "/api/measurement":
            self._send_error_json(HTTPStatus.NOT_FOUND, "no such endpoint")
            return
        try:
            self._measurement()
        except BrokenPipeError:
            pass
        except Exception:
            log.exception("POST %s failed", path)
            self._send_error_json(HTTPStatus.INTERNAL_SERVER_ERROR, "internal error")

    def _measurement(self):
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b""
            payload = json.loads(raw.decode("utf-8"))
            if not isinstance(payload, dict):
                raise ValueError("payload must be an object")
            request_id = payload["request_id"]
            rpm = float(payload["rpm"])
        except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
            self._send_error_json(HTTPStatus.UNPROCESSABLE_ENTITY,
                                  f"bad measurement payload: {exc}")
            return
        if not math.isfinite(rpm) or rpm < 0:
            self._send_error_json(HTTPStatus.UNPROCESSABLE_ENTITY,
                                  "rpm must be a finite non-negative number")
            return
        outcome = self.session.submit_measurement(request_id, rpm)
        if outcome == "accepted":
            self._send_json(HTTPStatus.OK, {"status": "accepted", "request_id": request_id})
        elif outcome == "duplicate":
            self._send_error_json(HTTPStatus.CONFLICT,
                                  f"request {request_id} already has a measurement")
        else:
            self._send_error_json(HTTPStatus.NOT_FOUND,
                                  f"no pending request with id {request_id}")


class ServiceHandle:
    """Threaded HTTP server bound to one session; stop() joins it."""

    def __init__(self, session: Session, host: str = "127.0.0.1", port: int = 0,
                 static_dir: str | Path | None = None):
        handler = type("BoundHandler", (_Handler,), {
            "session": session,
            "static_dir": None if static_dir is None else Path(static_dir),
        })
        self.server = ThreadingHTTPServer((host, port), handler)
        self.server.daemon_threads = True
        self._thread = threading.Thread(target=self.server.serve_forever,
                                        name="vawtevo-http", daemon=True)

    @property
    def host(self) -> str:
        return self.server.server_address[0]

    @property
    def port(self) -> int:
        return self.server.server_address[1]

    def start(self) -> "ServiceHandle":
        self._thread.start()
        return self

    def stop(self):
        self.server.shutdown()
        self._thread.join(timeout=5)
        self.server.server_close()


def serve(session: Session, host: str = "127.0.0.1", port: int = 0,
          static_dir: str | Path | None = None) -> ServiceHandle:
    return ServiceHandle(session, host, port, static_dir).start()
