"""Deterministic discrete-event channel with a virtual millisecond clock.

Losses emulate a dropped connection: a lost request never reaches the
server and a lost response never reaches the client. Either way the client
learns nothing until its timeout fires.
"""

from __future__ import annotations

import heapq
import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from ..client import Client, Mode
from ..errors import SimulationStalled
from ..server import REFUSED, Server


class LossSchedule:
    """Per-direction loss draws for a channel.

    A request attempt is lost with probability ``alpha * p``. Given that the
    request got through, its response is lost with probability
    ``(1 - alpha) * p / (1 - alpha * p)``. A round trip therefore fails with
    probability ``p`` and a fraction ``alpha`` of failures hit the request.

    Each direction draws from its own stream, so the k-th request outcome
    does not depend on how many responses were sent. ``request``/``response``
    pin the leading entries of either stream (1 = lost); afterwards the
    Bernoulli draws take over.
    """

    def __init__(self, p: float = 0.0, alpha: float = 1.0, seed: int = 0,
                 request: Sequence[int] = (), response: Sequence[int] = ()):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"loss probability must lie in [0, 1), got {p}")
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        self.p = p
        self.alpha = alpha
        self.seed = seed
        self._req_script = list(request)
        self._resp_script = list(response)
        self._req_rng = random.Random(f"{seed}/request")
        self._resp_rng = random.Random(f"{seed}/response")
        self.request_losses: list[int] = []
        self.response_losses: list[int] = []

    @classmethod
    def scripted(cls, request: Sequence[int] = (), response: Sequence[int] = ()) -> LossSchedule:
        return cls(0.0, 1.0, 0, request, response)

    @property
    def request_loss_prob(self) -> float:
        return self.alpha * self.p

    @property
    def response_loss_prob(self) -> float:
        return (1.0 - self.alpha) * self.p / (1.0 - self.alpha * self.p)

    def _draw(self, script: list[int], rng: random.Random, prob: float) -> int:
        if script:
            return 1 if script.pop(0) else 0
        return 1 if rng.random() < prob else 0

    def next_request_lost(self) -> bool:
        lost = self._draw(self._req_script, self._req_rng, self.request_loss_prob)
        self.request_losses.append(lost)
        return bool(lost)

    def next_response_lost(self) -> bool:
        lost = self._draw(self._resp_script, self._resp_rng, self.response_loss_prob)
        self.response_losses.append(lost)
        return bool(lost)

    def describe(self) -> dict[str, float]:
        return {
            "p": self.p,
            "alpha": self.alpha,
            "request_loss_prob": self.request_loss_prob,
            "response_loss_prob": self.response_loss_prob,
        }


class VirtualClock:
    """Event queue ordered by (time, insertion order)."""

    def __init__(self):
        self.now = 0.0
        self._queue: list[tuple[float, int, Callable[[], None]]] = []
        self._seq = itertools.count()

    def call_at(self, t: float, fn: Callable[[], None]) -> None:
        if t < self.now:
            raise ValueError(f"cannot schedule at {t} before now={self.now}")
        heapq.heappush(self._queue, (t, next(self._seq), fn))

    def call_later(self, delay: float, fn: Callable[[], None]) -> None:
        self.call_at(self.now + delay, fn)

    def step(self) -> bool:
        if not self._queue:
            return False
        t, _, fn = heapq.heappop(self._queue)
        self.now = t
        fn()
        return True

    def __len__(self) -> int:
        return len(self._queue)


@dataclass
class Delivered:
    at: float


@dataclass
class Lost:
    timeout_at: float


DeliveryOutcome = Delivered | Lost


class SimulatedChannel:
    def __init__(self, schedule: LossSchedule, clock: VirtualClock | None = None,
                 latency_ms: float = 5.0, timeout_ms: float = 15000.0):
        self.schedule = schedule
        self.clock = clock or VirtualClock()
        self.latency_ms = latency_ms
        self.timeout_ms = timeout_ms

    def send_request(self, req=None) -> DeliveryOutcome:
        now = self.clock.now
        if self.schedule.next_request_lost():
            return Lost(now + self.timeout_ms)
        return Delivered(now + self.latency_ms)

    def send_response(self, resp=None, sent_at: float | None = None) -> DeliveryOutcome:
        now = self.clock.now if sent_at is None else sent_at
        if self.schedule.next_response_lost():
            return Lost(now + self.timeout_ms)
        return Delivered(now + self.latency_ms)


@dataclass
class SessionResult:
    completion_time_ms: float | None
    end_time_ms: float
    trace: list[dict[str, Any]] = field(default_factory=list)
    acks: list[tuple[int, int]] = field(default_factory=list)

    def trace_lines(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.trace)


class SimulatedSession:
    """Drives one client and one server over a :class:`SimulatedChannel`.

    ``code_delay_ms`` / ``decode_delay_ms`` charge virtual processing time for
    each encode at the client and each coded request handled by the server;
    they apply only in coded mode.
    """

    def __init__(self, client: Client, server: Server, channel: SimulatedChannel,
                 n_messages: int, payloads: Callable[[int], bytes],
                 arrival_times: Iterable[float] | None = None, arrival_interval_ms: float = 1000.0,
                 code_delay_ms: float = 0.0, decode_delay_ms: float = 0.0,
                 time_limit_ms: float | None = None, record_trace: bool = True):
        self.client = client
        self.server = server
        self.channel = channel
        self.clock = channel.clock
        self.n = n_messages
        self.payloads = payloads
        if arrival_times is None:
            arrival_times = [k * arrival_interval_ms for k in range(n_messages)]
        self.arrival_times = list(arrival_times)
        if len(self.arrival_times) != n_messages:
            raise ValueError("need one arrival time per message")
        coded = client.mode is Mode.CODED
        self.code_delay = code_delay_ms if coded else 0.0
        self.decode_delay = decode_delay_ms if coded else 0.0
        self.time_limit = time_limit_ms if time_limit_ms is not None else 1e4 * channel.timeout_ms
        self.record_trace = record_trace
        self.result = SessionResult(None, 0.0)
        self._armed: int | None = None

    def _log(self, event: str, **kw) -> None:
        if self.record_trace:
            self.result.trace.append({"t": round(self.clock.now, 6), "event": event, **kw})

    def run(self) -> SessionResult:
        for k, t in enumerate(self.arrival_times, 1):
            self.clock.call_at(t, lambda k=k: self._arrive(k))
        while not self.client.finished(self.n):
            if not self.clock.step():
                break
            if self.clock.now > self.time_limit:
                raise SimulationStalled(
                    f"virtual time {self.clock.now:.0f} ms exceeded limit {self.time_limit:.0f} ms "
                    f"with {len(self.server.sink)}/{self.n} messages delivered"
                )
        self.result.end_time_ms = self.clock.now
        return self.result

    def _arrive(self, k: int) -> None:
        msg = self.client.on_new_message(self.payloads(k))
        self._log("arrival", id=msg.id, length=msg.length)
        # queued behind any other arrival at the same instant
        self.clock.call_later(0.0, self._kick)

    def _kick(self) -> None:
        if self.client.outstanding is None:
            self._send(self.client.next_send())

    def _send(self, decision) -> None:
        if decision.idle:
            return
        req = self.client.transmit(decision)
        attempt = self._armed = self.client.attempt
        if self.code_delay:
            self.clock.call_later(self.code_delay, lambda: self._put_on_wire(req, decision, attempt))
        else:
            self._put_on_wire(req, decision, attempt)

    def _put_on_wire(self, req, decision, attempt: int) -> None:
        ids = decision.window.ids
        outcome = self.channel.send_request(req)
        self._log("send", attempt=attempt, kind=decision.kind.value, ids=[ids[0], ids[-1]],
                  bytes=req.wire_bytes)
        self.clock.call_later(self.channel.timeout_ms, lambda: self._timeout(attempt))
        if isinstance(outcome, Lost):
            self._log("lose", attempt=attempt, direction="request")
        else:
            self.clock.call_at(outcome.at, lambda: self._server_receive(req, attempt))

    def _server_receive(self, req, attempt: int) -> None:
        reply = self.server.handle_request(req)
        if reply is REFUSED:
            self._log("busy", attempt=attempt)
            return
        sent_at = self.clock.now + self.decode_delay
        self._log("deliver", attempt=attempt, status=reply.status, ack=list(reply.ack or ()),
                  sink=len(self.server.sink))
        if self.result.completion_time_ms is None and self.server.completion_check(self.n):
            self.result.completion_time_ms = sent_at
        outcome = self.channel.send_response(reply, sent_at=sent_at)
        if isinstance(outcome, Lost):
            self._log("lose", attempt=attempt, direction="response")
        else:
            self.clock.call_at(outcome.at, lambda: self._client_receive(reply, attempt))

    def _client_receive(self, reply, attempt: int) -> None:
        if attempt != self._armed:
            self.client.note_stale()
            self._log("stale", attempt=attempt)
            return
        self._armed = None
        if reply.ack is None:
            # error reply: no usable ack, resend as after a timeout
            self._log("error", attempt=attempt, status=reply.status)
            self._send(self.client.on_timeout())
            return
        self.client.on_response(*reply.ack)
        self.result.acks.append(reply.ack)
        self._log("response", attempt=attempt, ack=list(reply.ack), buffer=len(self.client.buffer))
        self._send(self.client.next_send())

    def _timeout(self, attempt: int) -> None:
        if attempt != self._armed:
            return
        self._armed = None
        self._log("timeout", attempt=attempt)
        self._send(self.client.on_timeout())
