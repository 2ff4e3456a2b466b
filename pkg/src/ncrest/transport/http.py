"""Real HTTP/1.1 channel over loopback with in-path loss injection.

A lost request is never sent and the client sits out its timeout. A lost
(or refused) response is withheld: the handler keeps the connection silent
until the client's socket timeout fires.
"""

from __future__ import annotations

import http.client
import socket
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable

from .. import protocol
from ..client import Client
from ..errors import ProtocolError, TransportError
from ..server import REFUSED, Reply, Server
from .sim import LossSchedule

_CANONICAL = {h.lower(): h for h in (protocol.CODING_HEADER, protocol.ID_HEADER, "Content-Type")}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "_HTTPServer"

    def log_message(self, format, *args):  # keep test output quiet
        pass

    def do_POST(self):
        ep = self.server.endpoint
        if self.path != protocol.RESOURCE_PATH:
            self._send(404, b'{"error": "not found"}')
            return
        n = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(n)
        headers = {_CANONICAL.get(k.lower(), k): v for k, v in self.headers.items()}
        reply = ep.server.handle_request(protocol.WireRequest(body, headers, "POST", self.path))
        if reply is REFUSED:
            self._withhold()
            return
        ep.note_processed()
        if reply.ack is not None and ep.schedule.next_response_lost():
            self._withhold()
            return
        self._send(reply.status, reply.body)

    def _send(self, status: int, body: bytes) -> None:
        self.send_response(status)
        self.send_header("Content-Type", protocol.JSON_TYPE)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _withhold(self) -> None:
        self.server.endpoint.stopping.wait(self.server.endpoint.hold_s)
        self.close_connection = True


class _HTTPServer(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    endpoint: "HttpEndpoint"


class HttpEndpoint:
    """Serves one :class:`Server` session on ``POST /api/sensors``."""

    def __init__(self, server: Server, schedule: LossSchedule, host: str = "127.0.0.1",
                 port: int = 0, hold_s: float = 30.0, n_messages: int | None = None):
        self.server = server
        self.schedule = schedule
        self.hold_s = hold_s
        self.n_messages = n_messages
        self.stopping = threading.Event()
        self.completed_at: float | None = None
        try:
            self.httpd = _HTTPServer((host, port), _Handler)
        except OSError as e:
            raise TransportError(f"cannot bind {host}:{port}: {e}") from e
        self.httpd.endpoint = self
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    def note_processed(self) -> None:
        if (self.completed_at is None and self.n_messages is not None
                and self.server.completion_check(self.n_messages)):
            self.completed_at = time.monotonic()

    def start(self) -> HttpEndpoint:
        self._thread.start()
        return self

    def stop(self) -> None:
        self.stopping.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


class HttpChannel:
    """Client side: one fresh connection per request, socket timeout = T_o."""

    def __init__(self, address: tuple[str, int], schedule: LossSchedule, timeout_ms: float,
                 sleep: Callable[[float], None] = time.sleep):
        self.host, self.port = address
        self.schedule = schedule
        self.timeout_s = timeout_ms / 1000.0
        self.sleep = sleep

    def exchange(self, req: protocol.WireRequest) -> Reply | None:
        """Send ``req``; return the reply, or ``None`` once the timeout expires."""
        if self.schedule.next_request_lost():
            self.sleep(self.timeout_s)
            return None
        conn = http.client.HTTPConnection(self.host, self.port, timeout=self.timeout_s)
        try:
            conn.request(req.method, req.path, body=req.body, headers=req.headers)
            resp = conn.getresponse()
            body = resp.read()
        except (socket.timeout, TimeoutError):
            return None
        except (ConnectionError, http.client.HTTPException, OSError) as e:
            raise TransportError(f"HTTP exchange with {self.host}:{self.port} failed: {e}") from e
        finally:
            conn.close()
        ack = None
        if resp.status == 200:
            try:
                ack = protocol.parse_response(body)
            except ProtocolError:
                ack = None
        return Reply(resp.status, body, ack)


def run_http_session(client: Client, channel: HttpChannel, n_messages: int,
                     payloads: Callable[[int], bytes], arrival_interval_ms: float = 1000.0,
                     time_limit_s: float | None = None) -> float:
    """Wall-clock driver mirroring the simulated session; returns elapsed seconds."""
    start = time.monotonic()
    interval = arrival_interval_ms / 1000.0
    admitted = 0

    def admit():
        nonlocal admitted
        now = time.monotonic()
        while admitted < n_messages and start + admitted * interval <= now:
            admitted += 1
            client.on_new_message(payloads(admitted))

    decision = None
    while not client.finished(n_messages):
        if time_limit_s is not None and time.monotonic() - start > time_limit_s:
            raise TimeoutError(f"HTTP session exceeded {time_limit_s} s")
        admit()
        if decision is None:
            decision = client.next_send()
        if decision.idle:
            decision = None
            if admitted < n_messages:
                time.sleep(max(0.0, start + admitted * interval - time.monotonic()))
            continue
        req = client.transmit(decision)
        reply = channel.exchange(req)
        admit()
        if reply is None or reply.ack is None:
            decision = client.on_timeout()
        else:
            client.on_response(*reply.ack)
            decision = None
    return time.monotonic() - start


def run_http(cfg, seed: int | None = None):
    """Run one experiment config over loopback HTTP and collect its metrics."""
    from ..harness.experiment import _collect, build_endpoints

    seed = cfg.seed if seed is None else seed
    client, server, schedule, payloads = build_endpoints(cfg, seed)
    hold = cfg.timeout_ms / 1000.0 + 1.0
    with HttpEndpoint(server, schedule, hold_s=hold, n_messages=cfg.n_messages) as ep:
        channel = HttpChannel(ep.address, schedule, cfg.timeout_ms)
        start = time.monotonic()
        run_http_session(client, channel, cfg.n_messages, payloads, cfg.arrival_interval_ms,
                         time_limit_s=(cfg.time_limit_ms or 1e4 * cfg.timeout_ms) / 1000.0)
        done = ep.completed_at
    if not server.completion_check(cfg.n_messages):
        raise RuntimeError(f"HTTP session ended with {len(server.sink)}/{cfg.n_messages} delivered")
    completion_ms = (done - start) * 1000.0 if done is not None else 0.0
    return _collect(cfg, client, server, payloads, completion_ms)
