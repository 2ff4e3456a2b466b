"""Line-based ``key = value`` experiment files.

Blank lines and ``#`` comments are ignored. Grid axes (``mode``, ``p``,
``alpha``, ``scb``, ``uncoded_alpha``) accept comma-separated lists; every
other key takes a single value. Example::

    # loss sweep, coded at three alphas plus the uncoded baseline
    mode = coded, uncoded
    p = 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7
    alpha = 0.3, 0.5, 1
    scb = 5
    reps = 30
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .experiment import ExperimentConfig, expand_grid

# file key -> ExperimentConfig field
_SCALARS = {
    "n": ("n_messages", int),
    "n_messages": ("n_messages", int),
    "timeout_ms": ("timeout_ms", float),
    "arrival_interval_ms": ("arrival_interval_ms", float),
    "payload_min": ("payload_min", int),
    "payload_max": ("payload_max", int),
    "seed": ("seed", int),
    "reps": ("repetitions", int),
    "repetitions": ("repetitions", int),
    "transport": ("transport", str),
    "latency_ms": ("latency_ms", float),
    "code_delay_ms": ("code_delay_ms", float),
    "decode_delay_ms": ("decode_delay_ms", float),
    "time_limit_ms": ("time_limit_ms", float),
}
_AXES = {"mode": str, "p": float, "alpha": float, "scb": int, "uncoded_alpha": float}


class ConfigError(ValueError):
    pass


@dataclass
class GridSpec:
    base: ExperimentConfig
    modes: list[str] = field(default_factory=lambda: ["coded"])
    ps: list[float] = field(default_factory=lambda: [0.0])
    alphas: list[float] = field(default_factory=lambda: [1.0])
    scbs: list[int] = field(default_factory=lambda: [5])
    uncoded_alphas: list[float] = field(default_factory=lambda: [1.0])

    def configs(self) -> list[ExperimentConfig]:
        return expand_grid(self.modes, self.ps, self.alphas, self.scbs, self.base,
                           self.uncoded_alphas)


def _convert(key: str, raw: str, typ, lineno: int):
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {raw!r} for {key}") from None


def parse_config(text: str) -> GridSpec:
    scalars: dict = {}
    axes: dict[str, list] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lower().replace("-", "_"), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        if key in _AXES:
            items = [v.strip() for v in value.split(",") if v.strip()]
            if not items:
                raise ConfigError(f"line {lineno}: empty list for {key}")
            axes[key] = [_convert(key, v, _AXES[key], lineno) for v in items]
        elif key in _SCALARS:
            name, typ = _SCALARS[key]
            scalars[name] = _convert(key, value, typ, lineno)
        elif key == "busy_on":
            scalars["busy_on"] = tuple(_convert(key, v.strip(), int, lineno)
                                       for v in value.split(",") if v.strip())
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    try:
        base = ExperimentConfig(**scalars)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
    spec = GridSpec(base)
    for key, attr in (("mode", "modes"), ("p", "ps"), ("alpha", "alphas"), ("scb", "scbs"),
                      ("uncoded_alpha", "uncoded_alphas")):
        if key in axes:
            setattr(spec, attr, axes[key])
    try:
        spec.configs()
    except ValueError as e:
        raise ConfigError(str(e)) from e
    return spec


def load_config(path: str | Path) -> GridSpec:
    return parse_config(Path(path).read_text())
