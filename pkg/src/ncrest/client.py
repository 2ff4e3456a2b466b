"""Sending endpoint: stop-and-wait client for coded and plain REST."""

from __future__ import annotations

import enum
import time
from collections import Counter
from dataclasses import dataclass, field

from . import protocol
from .rlnc import CodingWindow, NativeMessage, RandomCoefficients, encode


class Mode(str, enum.Enum):
    CODED = "coded"
    UNCODED = "uncoded"


class SendKind(str, enum.Enum):
    FRESH = "fresh"
    REPAIR = "repair"
    RETRANSMIT = "retransmit"
    IDLE = "idle"


@dataclass
class SendDecision:
    kind: SendKind
    window: CodingWindow

    @property
    def idle(self) -> bool:
        return self.kind is SendKind.IDLE


@dataclass
class ClientStats:
    transmissions: int = 0
    request_bytes: int = 0
    fresh: int = 0
    repairs: int = 0
    retransmissions: int = 0
    timeouts: int = 0
    acks: int = 0
    stale_acks: int = 0
    encodes: int = 0
    code_time_s: float = 0.0
    per_message: Counter = field(default_factory=Counter)


class Client:
    """Client session state.

    Drivers feed three kinds of events, one at a time: :meth:`on_new_message`,
    :meth:`on_response` and :meth:`on_timeout`. Whenever the client is idle the
    driver asks :meth:`next_send` and, unless idle, passes the decision to
    :meth:`transmit` to obtain the wire request.
    """

    def __init__(self, mode: Mode | str = Mode.CODED, scb: int = 5, timeout_ms: float = 15000.0,
                 coefficients=None):
        self.mode = Mode(mode)
        if scb < 1:
            raise ValueError("scb must be >= 1")
        self.scb = scb
        self.timeout_ms = timeout_ms
        self.coefficients = coefficients if coefficients is not None else RandomCoefficients()
        self.buffer: list[NativeMessage] = []
        self.next_id = 1
        self.repair_budget = 0
        self.seen_newest = 0
        self.unseen_newest = 0
        self.outstanding: SendDecision | None = None
        self.attempt = 0
        self.stats = ClientStats()
        self._after_timeout = False

    @property
    def generated(self) -> int:
        return self.next_id - 1

    def finished(self, n: int) -> bool:
        return self.generated >= n and not self.buffer and self.outstanding is None

    def on_new_message(self, payload: bytes) -> NativeMessage:
        msg = NativeMessage(self.next_id, bytes(payload))
        self.buffer.append(msg)
        self.next_id += 1
        return msg

    def _window(self, msgs: list[NativeMessage]) -> CodingWindow:
        return CodingWindow(msgs, self.scb if self.mode is Mode.CODED else 1)

    def next_send(self) -> SendDecision:
        if self.outstanding is not None or not self.buffer:
            return SendDecision(SendKind.IDLE, self._window([]))
        retransmit = self._after_timeout
        if self.mode is Mode.UNCODED:
            kind = SendKind.RETRANSMIT if retransmit else SendKind.FRESH
            return SendDecision(kind, self._window(self.buffer[:1]))
        if self.repair_budget > 0:
            run = [m for m in self.buffer if self.seen_newest < m.id <= self.unseen_newest]
            if run:
                return SendDecision(SendKind.REPAIR, self._window(run[: self.scb]))
        kind = SendKind.RETRANSMIT if retransmit else SendKind.FRESH
        return SendDecision(kind, self._window(self.buffer[: self.scb]))

    def transmit(self, decision: SendDecision) -> protocol.WireRequest:
        """Build the request for ``decision`` and mark it outstanding."""
        if decision.idle:
            raise ValueError("nothing to transmit")
        if self.outstanding is not None:
            raise RuntimeError("stop-and-wait violated: a request is already outstanding")
        msgs = decision.window.messages
        if self.mode is Mode.CODED:
            t0 = time.perf_counter()
            c = encode(decision.window, self.coefficients)
            self.stats.code_time_s += time.perf_counter() - t0
            self.stats.encodes += 1
            req = protocol.coded_request(c)
        else:
            req = protocol.native_request(msgs[0])
        if decision.kind is SendKind.REPAIR:
            self.repair_budget -= 1
            self.stats.repairs += 1
        elif decision.kind is SendKind.RETRANSMIT:
            self.stats.retransmissions += 1
        else:
            self.stats.fresh += 1
        self.stats.transmissions += 1
        self.stats.request_bytes += req.wire_bytes
        self.stats.per_message.update(m.id for m in msgs)
        self.attempt += 1
        self.outstanding = decision
        self._after_timeout = False
        return req

    def on_response(self, s: int, u: int) -> None:
        if s > u:
            raise ValueError(f"seen_newest {s} > unseen_newest {u}")
        self.outstanding = None
        self._after_timeout = False
        if self.mode is Mode.UNCODED:
            before = len(self.buffer)
            self.buffer = [m for m in self.buffer if m.id != s]
            if len(self.buffer) == before:
                self.stats.stale_acks += 1
            else:
                self.stats.acks += 1
            return
        if s < self.seen_newest:
            self.stats.stale_acks += 1
            return
        self.stats.acks += 1
        self.seen_newest, self.unseen_newest = s, u
        self.buffer = [m for m in self.buffer if m.id > s]
        self.repair_budget = u - s

    def on_timeout(self) -> SendDecision:
        """Forget the outstanding request and decide what to resend."""
        self.outstanding = None
        self.stats.timeouts += 1
        self._after_timeout = True
        return self.next_send()

    def note_stale(self) -> None:
        self.stats.stale_acks += 1
