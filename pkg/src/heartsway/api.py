"""Local HTTP surface for the operator console and diagnostics.

    GET  /status   -> engine snapshot (JSON)
    GET  /events   -> server-sent event stream; ?from_seq=N replays the
                      buffered tail first (GapNotice when history is gone)
    POST /command  -> {"cmd": "ack_cue" | "override_presence" |
                       "load_seed_trace" | "shutdown", ...}
    GET  /console  -> static operator console, when a console dir is set

Binds loopback by default; passing a wider address is an explicit choice.
The server holds no engine state beyond the event ring buffer, and no
response ever contains raw biodata — snapshots carry counts and progress
only.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from . import events as ev
from .device.presence import PresenceState
from .errors import EngineUnavailable, HeartSwayError, InvalidPhase, UnknownCue

LOG = logging.getLogger("heartsway.api")

EVENT_STREAM_TYPE = "text/event-stream"
JSON_TYPE = "application/json"

_GUESS_TYPES = {
    ".html": "text/html",
    ".js": "text/javascript",
    ".css": "text/css",
    ".map": "application/json",
    ".svg": "image/svg+xml",
}


class ApiServer:
    def __init__(
        self,
        engine,
        bus: ev.EventBus,
        bind: str = "127.0.0.1:8787",
        console_dir: Optional[Path] = None,
    ):
        self.engine = engine
        self.bus = bus
        self.console_dir = console_dir
        host, _, port = bind.partition(":")
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((host, int(port or 0)), handler)
        self.httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self.httpd.serve_forever, name="heartsway-api", daemon=True
        )
        self._thread.start()
        LOG.info("api listening on %s", self.address)

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    # -- command dispatch (runs on HTTP threads; engine work is posted) --

    def run_command(self, doc: dict) -> dict:
        if self.engine is None:
            raise EngineUnavailable("no engine attached")
        cmd = doc.get("cmd")
        now = self.engine.loop.clock.now_ms()
        self.bus.emit(now, ev.COMMAND_RECEIVED, {"cmd": cmd})
        if cmd == "ack_cue":
            cue = self._call_engine(lambda: self.engine.ack_cue(int(doc["id"])))
            return {"accepted": True, "late_by_ms": cue.late_by_ms}
        if cmd == "override_presence":
            raw = doc.get("state")
            if raw not in ("Occupied", "Vacant", None):
                raise InvalidPhase(f"unknown presence state {raw!r}")
            state = PresenceState(raw) if raw else None
            self._call_engine(lambda: self.engine.override_presence(state))
            return {"accepted": True}
        if cmd == "load_seed_trace":
            self._call_engine(lambda: self.engine.load_seed_trace(doc["path"]))
            return {"accepted": True}
        if cmd == "shutdown":
            self._call_engine(lambda: self.engine.stop())
            self.engine.loop.stop()
            return {"accepted": True}
        raise InvalidPhase(f"unknown command {cmd!r}")

    def _call_engine(self, fn):
        """Run fn on the engine loop thread and wait for its result."""
        done = threading.Event()
        box: dict = {}

        def wrapper():
            try:
                box["result"] = fn()
            except Exception as exc:  # surfaced to the HTTP caller
                box["error"] = exc
            done.set()

        self.engine.loop.post(wrapper)
        if not done.wait(timeout=5.0):
            raise EngineUnavailable("engine loop unresponsive")
        if "error" in box:
            raise box["error"]
        return box.get("result")


def _make_handler(server: ApiServer):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            LOG.debug("%s " + fmt, self.client_address[0], *args)

        def do_GET(self):
            url = urlparse(self.path)
            if url.path == "/status":
                self._send_status()
            elif url.path == "/events":
                self._send_events(url)
            elif url.path == "/console" or url.path.startswith("/console/"):
                self._send_console(url.path)
            else:
                self._send_json(404, {"error": "not found"})

        def do_POST(self):
            if urlparse(self.path).path != "/command":
                self._send_json(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                doc = json.loads(self.rfile.read(length) or b"{}")
                result = server.run_command(doc)
                self._send_json(200, result)
            except UnknownCue as exc:
                self._send_json(404, {"error": "unknown cue", "detail": str(exc)})
            except (InvalidPhase, KeyError, ValueError) as exc:
                self._send_json(400, {"error": "rejected", "detail": str(exc)})
            except HeartSwayError as exc:
                self._send_json(503, {"error": type(exc).__name__, "detail": str(exc)})

        def _send_status(self):
            if server.engine is None:
                self._send_json(503, {"error": "engine unavailable"})
                return
            snapshot = server._call_engine(server.engine.snapshot)
            self._send_json(200, snapshot)

        def _send_events(self, url):
            params = parse_qs(url.query)
            from_seq = None
            if "from_seq" in params:
                try:
                    from_seq = int(params["from_seq"][0])
                except ValueError:
                    self._send_json(400, {"error": "bad from_seq"})
                    return
            backlog, live = server.bus.subscribe(from_seq)
            try:
                self.send_response(200)
                self.send_header("Content-Type", EVENT_STREAM_TYPE)
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Connection", "close")
                self.end_headers()
                for event in backlog:
                    self._write_event(event)
                while True:
                    try:
                        event = live.get(timeout=15.0)
                    except queue.Empty:
                        self.wfile.write(b": keepalive\n\n")
                        self.wfile.flush()
                        continue
                    if event is None:
                        break
                    self._write_event(event)
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                server.bus.unsubscribe(live)

        def _write_event(self, event: ev.ApiEvent):
            payload = json.dumps(event.to_doc())
            self.wfile.write(f"data: {payload}\n\n".encode())
            self.wfile.flush()

        def _send_console(self, path: str):
            if server.console_dir is None:
                self._send_json(404, {"error": "console not bundled"})
                return
            rel = path.removeprefix("/console").lstrip("/") or "index.html"
            target = (server.console_dir / rel).resolve()
            if not str(target).startswith(str(server.console_dir.resolve())) or not target.is_file():
                self._send_json(404, {"error": "not found"})
                return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", _GUESS_TYPES.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, code: int, doc: dict):
            body = json.dumps(doc).encode()
            self.send_response(code)
            self.send_header("Content-Type", JSON_TYPE)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler
