"""Minimal HTTP API over a shared, immutable scrub pipeline.

POST /scrub takes either a raw UTF-8 text body or JSON ``{"text": ...}``
and answers ``{"scrubbed", "replacements", "stats"}``. GET /health reports
version and model metadata. Errors are JSON objects with an ``error`` key.
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import __version__
from .scrub import ScrubPipeline

log = logging.getLogger(__name__)

DEFAULT_MAX_BODY = 16 * 1024 * 1024


class _Handler(BaseHTTPRequestHandler):
    server_version = f"phiscrub/{__version__}"
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        log.info("%s %s", self.address_string(), fmt % args)

    def _send(self, status: int, payload: dict, close: bool = False):
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        if close:
            self.send_header("Connection", "close")
            self.close_connection = True
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str, close: bool = False):
        self._send(status, {"error": message, "status": status}, close)

    def do_GET(self):
        if self.path.split("?", 1)[0] != "/health":
            return self._error(404, f"no such endpoint: {self.path}")
        model = self.server.pipeline.model
        self._send(200, {"status": "ok", "version": __version__,
                         "model": {"labels": list(model.labels),
                                   "features": model.n_features,
                                   "templates": model.templates.name}})

    def do_POST(self):
        if self.path.split("?", 1)[0] != "/scrub":
            return self._error(404, f"no such endpoint: {self.path}", close=True)
        length = self.headers.get("Content-Length")
        if length is None:
            return self._error(411, "Content-Length required", close=True)
        try:
            length = int(length)
            if length < 0:
                raise ValueError
        except ValueError:
            return self._error(400, "invalid Content-Length", close=True)
        cap = self.server.max_body_bytes
        if length > cap:
            return self._error(413, f"request body of {length} bytes exceeds the {cap}-byte limit",
                               close=True)
        raw = self.rfile.read(length)
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            return self._error(400, f"body is not valid UTF-8 (byte {exc.start})")
        ctype = (self.headers.get("Content-Type") or "").split(";")[0].strip().lower()
        if ctype == "application/json":
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                return self._error(400, f"malformed JSON: {exc}")
            if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
                return self._error(400, 'JSON body must be an object with a string "text" field')
            text = obj["text"]
        try:
            res = self.server.pipeline.scrub(text)
        except Exception as exc:  # noqa: BLE001 - reported, never fatal to the server
            log.exception("scrub failed")
            return self._error(500, f"{type(exc).__name__}: {exc}")
        d = res.to_dict()
        self._send(200, {"scrubbed": d["scrubbed"], "replacements": d["replacements"],
                         "stats": d["stats"]})


class ScrubServer(ThreadingHTTPServer):
    """Threaded server; ``shutdown`` followed by ``server_close`` waits for
    in-flight requests to finish."""

    daemon_threads = False
    block_on_close = True

    def __init__(self, address, pipeline: ScrubPipeline, max_body_bytes: int = DEFAULT_MAX_BODY):
        if pipeline is None or pipeline.model is None:
            raise ValueError("the service needs a loaded pipeline")
        self.pipeline = pipeline
        self.max_body_bytes = int(max_body_bytes)
        super().__init__(address, _Handler)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}"


def start_background(pipeline: ScrubPipeline, host: str = "127.0.0.1", port: int = 0,
                     max_body_bytes: int = DEFAULT_MAX_BODY):
    """Start a server on a daemon thread; returns (server, thread)."""
    srv = ScrubServer((host, port), pipeline, max_body_bytes)
    th = threading.Thread(target=srv.serve_forever, name="phiscrub-http", daemon=True)
    th.start()
    return srv, th
