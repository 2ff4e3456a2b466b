"""Receiving endpoint: decoding buffer, acknowledgements and in-order delivery."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Iterable

from . import protocol
from .client import Mode
from .errors import ProtocolError
from .rlnc import Combination, DecoderState, InsertOutcome, NativeMessage


@dataclass(frozen=True)
class Reply:
    status: int
    body: bytes
    ack: tuple[int, int] | None = None

    @property
    def wire_bytes(self) -> int:
        return len(self.body)


class _Refused:
    def __repr__(self) -> str:
        return "REFUSED"

    def __bool__(self) -> bool:
        return False


# Returned by handle_request when the server is busy: nothing stored, nothing sent.
REFUSED = _Refused()


@dataclass
class ServerStats:
    requests: int = 0
    refused: int = 0
    errors: int = 0
    responses: int = 0
    response_bytes: int = 0
    independent: int = 0
    dependent: int = 0
    duplicates: int = 0
    wasted_bytes: int = 0
    decodes: int = 0
    decode_time_s: float = 0.0


class Server:
    """Single-session server.

    ``busy_on`` lists 1-based arrival indices that find the server busy, which
    makes refusals reproducible in simulation. On a threaded transport the
    server is also busy for real while another request is being processed.
    """

    def __init__(self, mode: Mode | str = Mode.CODED, busy_on: Iterable[int] = ()):
        self.mode = Mode(mode)
        self.decoder = DecoderState()
        self.received_ids: set[int] = set()
        self.sink: list[NativeMessage] = []
        self.busy = False
        self.busy_on = set(busy_on)
        self.stats = ServerStats()
        self._pending: dict[int, NativeMessage] = {}
        self._lock = threading.Lock()
        self._arrivals = 0

    def set_busy(self, flag: bool) -> None:
        self.busy = flag

    def handle_request(self, req: protocol.WireRequest) -> Reply | _Refused:
        self._arrivals += 1
        if self.busy or self._arrivals in self.busy_on or not self._lock.acquire(blocking=False):
            self.stats.refused += 1
            return REFUSED
        self.busy = True
        try:
            return self._handle(req)
        finally:
            self.busy = False
            self._lock.release()

    def _handle(self, req: protocol.WireRequest) -> Reply:
        self.stats.requests += 1
        try:
            item = protocol.decode_request(req)
            if self.mode is Mode.CODED:
                if not isinstance(item, Combination):
                    raise ProtocolError("coded server received an uncoded request")
                ack = self._handle_coded(item, len(req.body))
            else:
                if not isinstance(item, NativeMessage):
                    raise ProtocolError("uncoded server received a coded request")
                ack = self._handle_native(item)
        except ProtocolError as e:
            self.stats.errors += 1
            return Reply(400, json.dumps({"error": str(e)}).encode())
        body = protocol.response_body(*ack)
        self.stats.responses += 1
        self.stats.response_bytes += len(body)
        return Reply(200, body, ack)

    def _handle_coded(self, c: Combination, nbytes: int) -> tuple[int, int]:
        t0 = time.perf_counter()
        outcome = self.decoder.insert(c)
        decoded = self.decoder.extract_decoded()
        self.stats.decode_time_s += time.perf_counter() - t0
        self.stats.decodes += 1
        if outcome is InsertOutcome.INDEPENDENT:
            self.stats.independent += 1
        else:
            self.stats.dependent += 1
            self.stats.wasted_bytes += nbytes
        for msg in decoded:
            self._deliver(msg)
        self.decoder.prune_below(c.id_oldest)
        return self.decoder.classify_seen()

    def _handle_native(self, msg: NativeMessage) -> tuple[int, int]:
        if msg.id in self.received_ids:
            self.stats.duplicates += 1
            self.stats.wasted_bytes += msg.length
        else:
            self.received_ids.add(msg.id)
            self._deliver(msg)
        return msg.id, msg.id

    def _deliver(self, msg: NativeMessage) -> None:
        self._pending[msg.id] = msg
        nxt = len(self.sink) + 1
        while nxt in self._pending:
            self.sink.append(self._pending.pop(nxt))
            nxt += 1

    @property
    def avg_decode_time_s(self) -> float:
        return self.stats.decode_time_s / self.stats.decodes if self.stats.decodes else 0.0

    def completion_check(self, n: int) -> bool:
        return len(self.sink) == n and all(m.id == i for i, m in enumerate(self.sink, 1))
