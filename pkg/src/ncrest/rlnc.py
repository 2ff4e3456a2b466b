"""Random linear network coding over GF(2^8).

The encoder combines a window of native messages (zero-padded to a common
length) with random nonzero coefficients. The decoder keeps an incrementally
reduced coefficient matrix whose columns are a contiguous run of message IDs,
classifies IDs as seen/unseen and hands out messages once their row reduces
to a single coefficient.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from . import gf256
from .errors import EmptyWindow, ProtocolError

CoefficientSource = Callable[[int], Sequence[int]]


@dataclass(frozen=True)
class NativeMessage:
    id: int
    payload: bytes

    @property
    def length(self) -> int:
        return len(self.payload)


@dataclass
class CodingWindow:
    messages: list[NativeMessage]
    max_size: int

    def __post_init__(self):
        if len(self.messages) > self.max_size:
            raise ValueError(f"window of {len(self.messages)} exceeds cap {self.max_size}")
        ids = [m.id for m in self.messages]
        if ids and ids != list(range(ids[0], ids[0] + len(ids))):
            raise ValueError(f"window IDs must be contiguous and ascending, got {ids}")

    @property
    def ids(self) -> list[int]:
        return [m.id for m in self.messages]


@dataclass(frozen=True)
class Combination:
    id_oldest: int
    id_newest: int
    lengths: tuple[int, ...]
    coefficients: tuple[int, ...]
    payload: bytes = b""

    @property
    def arity(self) -> int:
        return self.id_newest - self.id_oldest + 1

    @property
    def ids(self) -> range:
        return range(self.id_oldest, self.id_newest + 1)

    def validate(self) -> None:
        if self.id_oldest < 1:
            raise ProtocolError(f"message IDs start at 1, got {self.id_oldest}")
        if self.id_newest < self.id_oldest:
            raise ProtocolError(f"ID range {self.id_oldest},{self.id_newest} is reversed")
        if len(self.lengths) != self.arity:
            raise ProtocolError(f"{len(self.lengths)} lengths for {self.arity} IDs")
        if len(self.coefficients) != self.arity:
            raise ProtocolError(f"{len(self.coefficients)} coefficients for {self.arity} IDs")
        if any(n < 1 for n in self.lengths):
            raise ProtocolError("message lengths must be >= 1")
        if any(not 0 <= c <= 255 for c in self.coefficients):
            raise ProtocolError("coefficients must lie in [0, 255]")
        if len(self.payload) != max(self.lengths):
            raise ProtocolError(
                f"payload has {len(self.payload)} bytes, header implies {max(self.lengths)}"
            )


class RandomCoefficients:
    """Uniform nonzero coefficients drawn from a seeded ``random.Random``."""

    def __init__(self, rng: random.Random | int | None = None):
        self.rng = rng if isinstance(rng, random.Random) else random.Random(rng)

    def __call__(self, n: int) -> list[int]:
        return [self.rng.randint(1, 255) for _ in range(n)]


class ScriptedCoefficients:
    """Replays fixed coefficient vectors in order, then falls back to ``fallback``."""

    def __init__(self, script: Iterable[Sequence[int]], fallback: CoefficientSource | None = None):
        self.script = [list(v) for v in script]
        self.fallback = fallback

    def __call__(self, n: int) -> list[int]:
        if self.script:
            v = self.script.pop(0)
            if len(v) != n:
                raise ValueError(f"scripted coefficients {v} do not match window of {n}")
            return v
        if self.fallback is None:
            raise LookupError("coefficient script exhausted")
        return list(self.fallback(n))


def _as_source(rng) -> CoefficientSource:
    if rng is None:
        return RandomCoefficients()
    if isinstance(rng, random.Random):
        return RandomCoefficients(rng)
    return rng


def encode(window: CodingWindow | Sequence[NativeMessage], rng=None,
           coefficients: Sequence[int] | None = None) -> Combination:
    """Random linear combination of every message in ``window``.

    ``rng`` is a ``random.Random`` or a callable returning ``n`` coefficients.
    Explicit ``coefficients`` override the source.
    """
    messages = window.messages if isinstance(window, CodingWindow) else list(window)
    if not messages:
        raise EmptyWindow("cannot encode an empty window")
    n = len(messages)
    coeffs = list(coefficients) if coefficients is not None else list(_as_source(rng)(n))
    if len(coeffs) != n:
        raise ValueError(f"{len(coeffs)} coefficients for a window of {n}")
    width = max(m.length for m in messages)
    padded = [m.payload.ljust(width, b"\x00") for m in messages]
    payload = gf256.linear_combination(coeffs, padded)
    return Combination(
        id_oldest=messages[0].id,
        id_newest=messages[-1].id,
        lengths=tuple(m.length for m in messages),
        coefficients=tuple(coeffs),
        payload=payload,
    )


class InsertOutcome(enum.Enum):
    INDEPENDENT = "independent"
    DEPENDENT = "dependent"


@dataclass
class DecoderState:
    """Augmented RREF system over the live ID range ``[live_floor, max_id]``.

    ``rows[i]`` holds coefficients for columns ``live_floor..max_id`` and
    ``payloads[i]`` the matching coded bytes; both always see the same row
    operations. ``pivot_ids[i]`` is the message ID of row ``i``'s pivot.
    """

    live_floor: int = 1
    max_id: int = 0
    rows: list[bytes] = field(default_factory=list)
    payloads: list[bytes] = field(default_factory=list)
    pivot_ids: list[int] = field(default_factory=list)
    lengths_known: dict[int, int] = field(default_factory=dict)
    delivered: set[int] = field(default_factory=set)
    width: int = 0

    @property
    def n_cols(self) -> int:
        return max(0, self.max_id - self.live_floor + 1)

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def coeff_matrix(self) -> gf256.FieldMatrix:
        return gf256.FieldMatrix(self.rows, self.n_cols)

    def is_seen(self, msg_id: int) -> bool:
        return msg_id < self.live_floor or msg_id in self.delivered or msg_id in self.pivot_ids

    def insert(self, c: Combination) -> InsertOutcome:
        c.validate()
        if c.id_newest < self.live_floor:
            return InsertOutcome.DEPENDENT
        if c.id_oldest < self.live_floor:
            raise ProtocolError(
                f"combination spans pruned IDs {c.id_oldest}..{self.live_floor - 1}"
            )
        for msg_id, n in zip(c.ids, c.lengths):
            known = self.lengths_known.get(msg_id)
            if known is not None and known != n:
                raise ProtocolError(f"length of message {msg_id} changed from {known} to {n}")

        max_id = max(self.max_id, c.id_newest)
        grow = max_id - self.max_id
        width = max(self.width, len(c.payload))
        rows = [r + bytes(grow) for r in self.rows]
        payloads = [p.ljust(width, b"\x00") for p in self.payloads]
        n_cols = max_id - self.live_floor + 1

        new = bytearray(n_cols)
        off = c.id_oldest - self.live_floor
        new[off:off + c.arity] = bytes(c.coefficients)
        new_row = bytes(new)
        new_payload = c.payload.ljust(width, b"\x00")

        for row, pay, pid in zip(rows, payloads, self.pivot_ids):
            f = new_row[pid - self.live_floor]
            if f:
                new_row = gf256.axpy(new_row, f, row)
                new_payload = gf256.axpy(new_payload, f, pay)

        for msg_id, n in zip(c.ids, c.lengths):
            self.lengths_known.setdefault(msg_id, n)
        if not any(new_row):
            return InsertOutcome.DEPENDENT

        col = next(i for i, v in enumerate(new_row) if v)
        inv = gf256.gf_inv(new_row[col])
        new_row = gf256.scale(new_row, inv)
        new_payload = gf256.scale(new_payload, inv)
        for i, row in enumerate(rows):
            f = row[col]
            if f:
                rows[i] = gf256.axpy(row, f, new_row)
                payloads[i] = gf256.axpy(payloads[i], f, new_payload)

        pivot_id = self.live_floor + col
        at = sum(1 for pid in self.pivot_ids if pid < pivot_id)
        rows.insert(at, new_row)
        payloads.insert(at, new_payload)
        self.pivot_ids.insert(at, pivot_id)
        self.rows, self.payloads = rows, payloads
        self.max_id, self.width = max_id, width
        return InsertOutcome.INDEPENDENT

    def classify_seen(self) -> tuple[int, int]:
        """Return ``(seen_newest, unseen_newest)``.

        ``seen_newest`` is the end of the longest run of seen IDs starting at 1,
        so everything the client may delete on its strength is recoverable.
        ``unseen_newest`` is the newest received ID while anything beyond that
        prefix is still unseen, otherwise it equals ``seen_newest``.
        """
        s = self.live_floor - 1
        pivots = set(self.pivot_ids)
        while s < self.max_id and (s + 1 in pivots or s + 1 in self.delivered):
            s += 1
        u = self.max_id if s < self.max_id else s
        return s, u

    def extract_decoded(self) -> list[NativeMessage]:
        out = []
        for row, pay, pid in zip(self.rows, self.payloads, self.pivot_ids):
            if pid in self.delivered or len(row) - row.count(0) != 1:
                continue
            n = self.lengths_known.get(pid)
            if n is None:
                raise ProtocolError(f"length of decoded message {pid} is unknown")
            out.append(NativeMessage(pid, pay[:n]))
            self.delivered.add(pid)
        out.sort(key=lambda m: m.id)
        return out

    def prune_below(self, id_oldest: int) -> None:
        """Drop delivered IDs below ``id_oldest`` from the front of the live range."""
        while (
            self.live_floor < id_oldest
            and self.live_floor <= self.max_id
            and self.live_floor in self.delivered
        ):
            gone = self.live_floor
            i = self.pivot_ids.index(gone)
            del self.rows[i], self.payloads[i], self.pivot_ids[i]
            self.rows = [r[1:] for r in self.rows]
            self.lengths_known.pop(gone, None)
            self.live_floor += 1


def decoder_insert(state: DecoderState, c: Combination) -> InsertOutcome:
    return state.insert(c)


def classify_seen(state: DecoderState) -> tuple[int, int]:
    return state.classify_seen()


def extract_decoded(state: DecoderState) -> list[NativeMessage]:
    return state.extract_decoded()


def prune_below(state: DecoderState, id_oldest: int) -> None:
    state.prune_below(id_oldest)
