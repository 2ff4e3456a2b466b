"""Wire formats for coded and plain requests and for acknowledgements.

Coding header (one request header field, ASCII, no whitespace)::

    ID_oldest,ID_newest;len_1,...,len_k;coef_1,...,coef_k

Acknowledgement body (JSON)::

    {"Number": "s"}        when seen_newest == unseen_newest
    {"Number": "s,u"}      otherwise
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import ProtocolError
from .rlnc import Combination, NativeMessage

RESOURCE_PATH = "/api/sensors"
CODING_HEADER = "X-NC"
ID_HEADER = "X-ID"
JSON_TYPE = "application/json"
CODED_TYPE = "application/octet-stream"

_UINT = re.compile(r"0|[1-9][0-9]*")


@dataclass(frozen=True)
class CodingHeader:
    id_oldest: int
    id_newest: int
    lengths: tuple[int, ...]
    coefficients: tuple[int, ...]

    @property
    def arity(self) -> int:
        return self.id_newest - self.id_oldest + 1


@dataclass
class WireRequest:
    body: bytes
    headers: dict[str, str] = field(default_factory=dict)
    method: str = "POST"
    path: str = RESOURCE_PATH

    @property
    def coded(self) -> bool:
        return CODING_HEADER in self.headers

    @property
    def wire_bytes(self) -> int:
        """Body plus protocol header value: the bytes charged to a request."""
        value = self.headers.get(CODING_HEADER, self.headers.get(ID_HEADER, ""))
        return len(self.body) + len(value.encode("ascii"))


def render_header(c: Combination | CodingHeader) -> str:
    ids = f"{c.id_oldest},{c.id_newest}"
    lengths = ",".join(map(str, c.lengths))
    coeffs = ",".join(map(str, c.coefficients))
    return f"{ids};{lengths};{coeffs}"


def _parse_uint_list(section: str, start: int, what: str) -> list[int]:
    out = []
    pos = start
    for tok in section.split(","):
        if not _UINT.fullmatch(tok):
            raise ProtocolError(f"bad {what} entry {tok!r}", pos)
        out.append(int(tok))
        pos += len(tok) + 1
    return out


def parse_header(text: str | bytes) -> CodingHeader:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("ascii")
        except UnicodeDecodeError as e:
            raise ProtocolError("coding header is not ASCII", e.start) from None
    if not isinstance(text, str):
        raise ProtocolError(f"coding header must be text, got {type(text).__name__}")
    sections = text.split(";")
    if len(sections) != 3:
        raise ProtocolError(f"expected 3 ';'-separated sections, got {len(sections)}", 0)
    starts = [0, len(sections[0]) + 1, len(sections[0]) + len(sections[1]) + 2]
    ids = _parse_uint_list(sections[0], starts[0], "ID")
    if len(ids) != 2:
        raise ProtocolError(f"ID section needs exactly 2 entries, got {len(ids)}", starts[0])
    lengths = _parse_uint_list(sections[1], starts[1], "length")
    coeffs = _parse_uint_list(sections[2], starts[2], "coefficient")
    oldest, newest = ids
    if oldest < 1:
        raise ProtocolError("ID_oldest must be >= 1", starts[0])
    if newest < oldest:
        raise ProtocolError(f"ID_newest {newest} < ID_oldest {oldest}", starts[0])
    arity = newest - oldest + 1
    if len(lengths) != arity:
        raise ProtocolError(f"length list has {len(lengths)} entries, ID range needs {arity}", starts[1])
    if len(coeffs) != arity:
        raise ProtocolError(f"coefficient list has {len(coeffs)} entries, ID range needs {arity}", starts[2])
    for i, n in enumerate(lengths):
        if n < 1:
            raise ProtocolError(f"length {n} for message {oldest + i} must be >= 1", starts[1])
    for i, c in enumerate(coeffs):
        if c > 255:
            raise ProtocolError(f"coefficient {c} for message {oldest + i} exceeds 255", starts[2])
    return CodingHeader(oldest, newest, tuple(lengths), tuple(coeffs))


def render_response(s: int, u: int) -> dict[str, str]:
    if not 0 <= s <= u:
        raise ValueError(f"need 0 <= seen_newest <= unseen_newest, got ({s}, {u})")
    return {"Number": str(s) if s == u else f"{s},{u}"}


def response_body(s: int, u: int) -> bytes:
    return json.dumps(render_response(s, u)).encode("ascii")


def parse_response(obj: dict | str | bytes) -> tuple[int, int]:
    if isinstance(obj, (bytes, bytearray, str)):
        try:
            obj = json.loads(obj)
        except (ValueError, RecursionError) as e:
            raise ProtocolError(f"response is not JSON: {e}") from None
    if not isinstance(obj, dict) or set(obj) != {"Number"}:
        raise ProtocolError('response must be a single-field {"Number": ...} record')
    value = obj["Number"]
    if not isinstance(value, str):
        raise ProtocolError("response Number must be a string")
    parts = value.split(",")
    if len(parts) not in (1, 2) or not all(_UINT.fullmatch(p) for p in parts):
        raise ProtocolError(f"bad response value {value!r}")
    s, u = int(parts[0]), int(parts[-1])
    if s > u:
        raise ProtocolError(f"seen_newest {s} exceeds unseen_newest {u}")
    return s, u


def coded_request(c: Combination) -> WireRequest:
    return WireRequest(
        body=c.payload,
        headers={CODING_HEADER: render_header(c), "Content-Type": CODED_TYPE},
    )


def native_request(msg: NativeMessage) -> WireRequest:
    return WireRequest(
        body=msg.payload,
        headers={ID_HEADER: str(msg.id), "Content-Type": JSON_TYPE},
    )


def decode_request(req: WireRequest) -> Combination | NativeMessage:
    """Turn a received request back into a combination or a native message."""
    if req.method != "POST" or req.path != RESOURCE_PATH:
        raise ProtocolError(f"unsupported {req.method} {req.path}")
    if CODING_HEADER in req.headers:
        h = parse_header(req.headers[CODING_HEADER])
        c = Combination(h.id_oldest, h.id_newest, h.lengths, h.coefficients, bytes(req.body))
        c.validate()
        return c
    if ID_HEADER in req.headers:
        raw = req.headers[ID_HEADER]
        if not _UINT.fullmatch(raw) or int(raw) < 1:
            raise ProtocolError(f"bad message ID {raw!r}")
        return NativeMessage(int(raw), bytes(req.body))
    raise ProtocolError(f"request carries neither {CODING_HEADER} nor {ID_HEADER}")
