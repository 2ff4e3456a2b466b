"""Synthetic sensor readings serialized as JSON of an exact byte length."""

from __future__ import annotations

import json
import random
import string

_SENSORS = ("temperature", "humidity", "pressure", "light", "co2")


def sensor_payload(rng: random.Random, msg_id: int, length: int) -> bytes:
    if length < 1:
        raise ValueError("payload length must be >= 1")
    record = {
        "id": msg_id,
        "sensor": rng.choice(_SENSORS),
        "device": f"node-{rng.randint(1, 64):02d}",
        "value": round(rng.uniform(-20.0, 60.0), 3),
        "unit": "si",
        "ts": 1_560_000_000 + msg_id,
        "pad": "",
    }
    body = json.dumps(record, separators=(",", ":"))
    short = length - len(body)
    if short >= 0:
        record["pad"] = "".join(rng.choices(string.ascii_letters, k=short))
        out = json.dumps(record, separators=(",", ":")).encode("ascii")
    else:
        # too short for the full record: plain ASCII filler
        out = "".join(rng.choices(string.ascii_letters + string.digits, k=length)).encode("ascii")
    assert len(out) == length
    return out


class PayloadSource:
    """Deterministic payload for message k given a seed and a length range."""

    def __init__(self, seed: int, min_len: int = 199, max_len: int = 204):
        if not 1 <= min_len <= max_len:
            raise ValueError(f"bad payload range [{min_len}, {max_len}]")
        self.rng = random.Random(f"{seed}/payload")
        self.min_len, self.max_len = min_len, max_len
        self._cache: dict[int, bytes] = {}

    def __call__(self, k: int) -> bytes:
        while len(self._cache) < k:
            i = len(self._cache) + 1
            n = self.rng.randint(self.min_len, self.max_len)
            self._cache[i] = sensor_payload(self.rng, i, n)
        return self._cache[k]
