"""Operator API: JSON state snapshots, command injection, and a live
server-sent event stream, served next to the static dashboard assets.

The kernel stays single-threaded: HTTP handler threads only read an
atomically-swapped snapshot string, append to per-client frame queues, and
put callables on the kernel's command queue."""

from __future__ import annotations

import json
import mimetypes
import threading
import time
from collections import deque
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .kernel import EventKind
from .testbed import Testbed

STREAM_QUEUE_MAX = 1000
KEEPALIVE_S = 0.5
POLL_S = 0.02

GAP_FRAME = {"t": -1, "module": "gateway", "event": "GAP", "details": ""}

FALLBACK_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>dsmlab</title></head>
<body><h1>dsmlab gateway</h1>
<p>No dashboard build found. API endpoints:</p>
<ul><li>GET /api/state</li><li>POST /api/command</li><li>GET /api/events</li></ul>
</body></html>
"""


class _Stream:
    """One SSE client's bounded frame queue. Overflow drops oldest frames and
    leaves a single gap marker so the client knows to refetch state."""

    def __init__(self) -> None:
        self.cond = threading.Condition()
        self.frames: deque = deque()
        self.closed = False

    def push(self, frame: dict) -> None:
        with self.cond:
            if len(self.frames) >= STREAM_QUEUE_MAX:
                while len(self.frames) >= STREAM_QUEUE_MAX:
                    self.frames.popleft()
                if not self.frames or self.frames[0] is not GAP_FRAME:
                    self.frames.appendleft(GAP_FRAME)
            self.frames.append(frame)
            self.cond.notify()

    def pop(self, timeout: float) -> list[dict]:
        with self.cond:
            if not self.frames:
                self.cond.wait(timeout)
            out = list(self.frames)
            self.frames.clear()
            return out

    def close(self) -> None:
        with self.cond:
            self.closed = True
            self.cond.notify()


def record_to_frame(record: str) -> dict:
    t, module, event, details = record.split(" | ", 3)
    return {"t": int(t), "module": module, "event": event, "details": details}


class GatewayServer:
    def __init__(self, testbed: Testbed, host: str = "127.0.0.1",
                 port: int = 0, static_dir: str | None = None):
        self.testbed = testbed
        self.static_dir = Path(static_dir).resolve() if static_dir else None
        self._snapshot_lock = threading.Lock()
        self._snapshot_json = testbed.snapshot_json()
        self._streams: list[_Stream] = []
        self._streams_lock = threading.Lock()
        self._shutdown_requested = threading.Event()
        self._closing = False
        handler = type("Handler", (_Handler,), {"gateway": self})
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.httpd.daemon_threads = True
        self._thread: threading.Thread | None = None
        testbed.kernel.add_log_listener(self._on_record)

    # -- lifecycle -----------------------------------------------------------

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[0], self.httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever,
                                        daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._closing = True
        with self._streams_lock:
            for stream in self._streams:
                stream.close()
        if self._thread is not None:
            self.httpd.shutdown()  # only valid once serve_forever is running
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def request_shutdown(self) -> None:
        self._shutdown_requested.set()

    # -- kernel-side hooks ---------------------------------------------------

    def _on_record(self, record: str) -> None:
        frame = record_to_frame(record)
        with self._streams_lock:
            for stream in self._streams:
                stream.push(frame)

    def publish_snapshot(self) -> None:
        """Swap the latest-state cell; emits a snapshot-changed frame when
        the state actually moved."""
        fresh = self.testbed.snapshot_json()
        with self._snapshot_lock:
            changed = fresh != self._snapshot_json
            self._snapshot_json = fresh
        if changed:
            frame = {"t": self.testbed.kernel.now, "module": "gateway",
                     "event": "SNAPSHOT", "details": ""}
            with self._streams_lock:
                for stream in self._streams:
                    stream.push(frame)

    def snapshot_json(self) -> str:
        with self._snapshot_lock:
            return self._snapshot_json

    # -- the paced run loop --------------------------------------------------

    def run_scenario(self, duration_ms: int | None = None,
                     realtime: bool = True, linger: bool = True) -> None:
        """Drive the kernel from the calling thread. Realtime mode paces one
        virtual millisecond per wall millisecond; afterwards the server keeps
        answering (and applying commands at the frozen clock) until a
        shutdown command arrives, unless linger is False."""
        testbed = self.testbed
        duration = (testbed.scenario.duration_ms
                    if duration_ms is None else duration_ms)
        testbed.start()
        start_wall = time.monotonic() - testbed.kernel.now / 1000.0
        while not self._shutdown_requested.is_set():
            if realtime:
                elapsed = int((time.monotonic() - start_wall) * 1000)
                target = max(testbed.kernel.now, min(elapsed, duration))
            else:
                target = duration
            testbed.kernel.run_until(target)
            self.publish_snapshot()
            if target >= duration:
                break
            time.sleep(POLL_S)
        while linger and not self._shutdown_requested.is_set():
            testbed.kernel.run_until(testbed.kernel.now)  # drain commands
            self.publish_snapshot()
            if self._shutdown_requested.wait(POLL_S):
                break

    # -- command validation --------------------------------------------------

    def submit_command(self, body: dict) -> tuple[bool, str]:
        kind = body.get("kind")
        if kind == "subnet_power":
            subnet = body.get("subnet")
            if subnet not in self.testbed.sncs:
                return False, f"unknown subnet {subnet!r}"
            if not isinstance(body.get("on"), bool):
                return False, "missing boolean 'on'"
            event = (EventKind.SUBNET_POWER_ON if body["on"]
                     else EventKind.SUBNET_POWER_OFF)
            self.testbed.enqueue_command(event, subnet)
            return True, ""
        if kind == "node_power":
            node = body.get("node")
            if not isinstance(node, int) or not self.testbed.graph.has_node(node):
                return False, f"unknown node {node!r}"
            if not isinstance(body.get("on"), bool):
                return False, "missing boolean 'on'"
            event = EventKind.NODE_UP if body["on"] else EventKind.NODE_DOWN
            self.testbed.enqueue_command(event, node)
            return True, ""
        if kind == "shutdown":
            self.request_shutdown()
            return True, ""
        return False, f"unknown command kind {kind!r}"

    # -- stream registry -----------------------------------------------------

    def attach_stream(self) -> _Stream:
        stream = _Stream()
        with self._streams_lock:
            self._streams.append(stream)
        return stream

    def detach_stream(self, stream: _Stream) -> None:
        with self._streams_lock:
            if stream in self._streams:
                self._streams.remove(stream)


class _Handler(BaseHTTPRequestHandler):
    gateway: GatewayServer  # bound by GatewayServer via subclassing

    protocol_version = "HTTP/1.1"

    def log_message(self, format: str, *args) -> None:  # noqa: A002
        pass  # request logging would interleave with the event log

    # -- helpers -------------------------------------------------------------

    def _send_json(self, obj_or_text, status: int = 200) -> None:
        body = (obj_or_text if isinstance(obj_or_text, str)
                else json.dumps(obj_or_text, sort_keys=True))
        data = body.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(data)

    # -- verbs ---------------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802
        if self.path == "/api/state":
            self._send_json(self.gateway.snapshot_json())
        elif self.path == "/api/events":
            self._stream_events()
        elif self.path.startswith("/api/"):
            self._send_json({"error": "not found"}, status=404)
        else:
            self._serve_static()

    def do_POST(self) -> None:  # noqa: N802
        if self.path != "/api/command":
            self._send_json({"error": "not found"}, status=404)
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length) if length else b""
        try:
            body = json.loads(raw.decode() or "{}")
        except (ValueError, UnicodeDecodeError):
            self._send_json({"accepted": False, "reason": "malformed JSON"},
                            status=400)
            return
        accepted, reason = self.gateway.submit_command(body)
        if accepted:
            self._send_json({"accepted": True})
        else:
            self._send_json({"accepted": False, "reason": reason})

    # -- SSE -----------------------------------------------------------------

    def _stream_events(self) -> None:
        stream = self.gateway.attach_stream()
        self.close_connection = True
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Connection", "close")
            self.end_headers()
            while not self.gateway._closing and not stream.closed:
                frames = stream.pop(KEEPALIVE_S)
                if not frames:
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                for frame in frames:
                    data = json.dumps(frame, sort_keys=True)
                    self.wfile.write(f"data: {data}\n\n".encode())
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.gateway.detach_stream(stream)

    # -- static assets -------------------------------------------------------

    def _serve_static(self) -> None:
        root = self.gateway.static_dir
        rel = self.path.lstrip("/") or "index.html"
        if root is not None:
            target = (root / rel).resolve()
            if target.is_file() and target.is_relative_to(root):
                ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
                data = target.read_bytes()
                self.send_response(200)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)
                return
        if self.path in ("/", "/index.html"):
            data = FALLBACK_PAGE.encode()
            self.send_response(200)
            self.send_header("Content-Type", "text/html; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
            return
        data = b"not found"
        self.send_response(404)
        self.send_header("Content-Type", "text/plain")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)
