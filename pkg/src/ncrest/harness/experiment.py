"""Single runs and parameter grids over the simulated or HTTP transport."""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import math
import random
import statistics
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from ..client import Client, Mode
from ..rlnc import RandomCoefficients
from ..server import Server
from ..transport.sim import LossSchedule, SimulatedChannel, SimulatedSession
from .payloads import PayloadSource
from .theory import theory_additional_coded, theory_additional_uncoded


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "coded"
    n_messages: int = 100
    p: float = 0.0
    alpha: float = 1.0
    scb: int = 5
    timeout_ms: float = 15000.0
    arrival_interval_ms: float = 1000.0
    payload_min: int = 199
    payload_max: int = 204
    seed: int = 0
    transport: str = "sim"
    repetitions: int = 1
    latency_ms: float = 5.0
    code_delay_ms: float = 12.0
    decode_delay_ms: float = 0.0
    busy_on: tuple[int, ...] = ()
    time_limit_ms: float | None = None

    def __post_init__(self):
        Mode(self.mode)
        if self.transport not in ("sim", "http"):
            raise ValueError(f"transport must be 'sim' or 'http', got {self.transport!r}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.scb < 1:
            raise ValueError("scb must be >= 1")
        if self.n_messages < 0:
            raise ValueError("n_messages must be >= 0")
        if not 1 <= self.payload_min <= self.payload_max <= 2 ** 16:
            raise ValueError(f"payload range [{self.payload_min}, {self.payload_max}] outside [1, 65536]")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")

    def with_(self, **kw) -> ExperimentConfig:
        return dataclasses.replace(self, **kw)

    def rep_seed(self, rep: int) -> int:
        return self.seed + rep


@dataclass
class RunMetrics:
    additional_messages: int
    additional_bytes: int
    completion_time_ms: float
    avg_decode_time_s: float
    avg_code_time_s: float
    response_bytes: int
    transmissions: int = 0
    timeouts: int = 0
    repairs: int = 0
    refused: int = 0
    dependent: int = 0
    duplicates: int = 0


def _collect(cfg: ExperimentConfig, client: Client, server: Server, payloads: PayloadSource,
             completion_ms: float) -> RunMetrics:
    native = sum(len(payloads(k)) for k in range(1, cfg.n_messages + 1))
    st = client.stats
    return RunMetrics(
        additional_messages=st.transmissions - cfg.n_messages,
        additional_bytes=st.request_bytes - native,
        completion_time_ms=completion_ms,
        avg_decode_time_s=server.avg_decode_time_s,
        avg_code_time_s=st.code_time_s / st.encodes if st.encodes else 0.0,
        response_bytes=server.stats.response_bytes,
        transmissions=st.transmissions,
        timeouts=st.timeouts,
        repairs=st.repairs,
        refused=server.stats.refused,
        dependent=server.stats.dependent,
        duplicates=server.stats.duplicates,
    )


def build_endpoints(cfg: ExperimentConfig, seed: int, coefficients=None):
    coeffs = coefficients or RandomCoefficients(random.Random(f"{seed}/coefficients"))
    client = Client(cfg.mode, scb=cfg.scb, timeout_ms=cfg.timeout_ms, coefficients=coeffs)
    server = Server(cfg.mode, busy_on=cfg.busy_on)
    schedule = LossSchedule(cfg.p, cfg.alpha, seed)
    payloads = PayloadSource(seed, cfg.payload_min, cfg.payload_max)
    return client, server, schedule, payloads


def run_simulated(cfg: ExperimentConfig, seed: int | None = None, record_trace: bool = False):
    """Run one simulated session; returns ``(metrics, session_result)``."""
    seed = cfg.seed if seed is None else seed
    client, server, schedule, payloads = build_endpoints(cfg, seed)
    channel = SimulatedChannel(schedule, latency_ms=cfg.latency_ms, timeout_ms=cfg.timeout_ms)
    session = SimulatedSession(
        client, server, channel, cfg.n_messages, payloads,
        arrival_interval_ms=cfg.arrival_interval_ms,
        code_delay_ms=cfg.code_delay_ms, decode_delay_ms=cfg.decode_delay_ms,
        time_limit_ms=cfg.time_limit_ms, record_trace=record_trace,
    )
    result = session.run()
    if not server.completion_check(cfg.n_messages):
        raise RuntimeError(f"session ended with {len(server.sink)}/{cfg.n_messages} delivered")
    completion = result.completion_time_ms if result.completion_time_ms is not None else 0.0
    return _collect(cfg, client, server, payloads, completion), result


def run_experiment(cfg: ExperimentConfig, seed: int | None = None) -> RunMetrics:
    if cfg.transport == "http":
        from ..transport.http import run_http

        return run_http(cfg, seed)
    return run_simulated(cfg, seed)[0]


# -- grids and CSV ---------------------------------------------------------

CONFIG_FIELDS = [f.name for f in dataclasses.fields(ExperimentConfig)]
METRIC_FIELDS = [f.name for f in dataclasses.fields(RunMetrics)]
CSV_FIELDS = CONFIG_FIELDS + ["rep", "run_seed"] + METRIC_FIELDS + [
    "theory_uncoded", "theory_coded", "status", "error",
]


@dataclass
class ResultRow:
    config: ExperimentConfig
    rep: int
    run_seed: int
    metrics: RunMetrics | None
    theory_uncoded: float
    theory_coded: float
    status: str = "ok"
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self.config)
        d["busy_on"] = " ".join(map(str, self.config.busy_on))
        d["time_limit_ms"] = "" if self.config.time_limit_ms is None else self.config.time_limit_ms
        d.update(rep=self.rep, run_seed=self.run_seed)
        if self.metrics is not None:
            d.update(dataclasses.asdict(self.metrics))
        else:
            d.update({k: "" for k in METRIC_FIELDS})
        d.update(theory_uncoded=self.theory_uncoded, theory_coded=self.theory_coded,
                 status=self.status, error=self.error)
        return d


def _run_one(args: tuple[ExperimentConfig, int]) -> ResultRow:
    cfg, rep = args
    seed = cfg.rep_seed(rep)
    tu = theory_additional_uncoded(cfg.n_messages, cfg.p)
    tc = theory_additional_coded(cfg.n_messages, cfg.p, cfg.alpha)
    try:
        m = run_experiment(cfg, seed)
    except Exception as e:  # one bad run must not sink the grid
        return ResultRow(cfg, rep, seed, None, tu, tc, "failed", f"{type(e).__name__}: {e}")
    return ResultRow(cfg, rep, seed, m, tu, tc)


def run_grid(configs: Iterable[ExperimentConfig], jobs: int = 1) -> list[ResultRow]:
    tasks = [(cfg, rep) for cfg in configs for rep in range(cfg.repetitions)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, tasks, chunksize=4))
    return [_run_one(t) for t in tasks]


def write_csv(rows: Sequence[ResultRow], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.as_dict())
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _field_types(cls) -> dict[str, str]:
    return {f.name: f.type if isinstance(f.type, str) else f.type.__name__ for f in dataclasses.fields(cls)}


def _coerce(value: str, typ: str):
    if typ == "int":
        return int(value)
    if typ == "float":
        return float(value)
    if typ == "str":
        return value
    if typ == "float | None":
        return None if value == "" else float(value)
    if typ == "tuple[int, ...]":
        return tuple(int(v) for v in value.split())
    raise TypeError(f"no CSV coercion for {typ}")


def read_csv(path: str | Path) -> list[ResultRow]:
    return parse_csv(Path(path).read_text())


def parse_csv(text: str) -> list[ResultRow]:
    cfg_types = _field_types(ExperimentConfig)
    met_types = _field_types(RunMetrics)
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        cfg = ExperimentConfig(**{k: _coerce(rec[k], t) for k, t in cfg_types.items()})
        metrics = None
        if rec["status"] == "ok":
            metrics = RunMetrics(**{k: _coerce(rec[k], t) for k, t in met_types.items()})
        rows.append(ResultRow(cfg, int(rec["rep"]), int(rec["run_seed"]), metrics,
                              float(rec["theory_uncoded"]), float(rec["theory_coded"]),
                              rec["status"], rec["error"]))
    return rows


# -- summaries -------------------------------------------------------------

@dataclass
class Summary:
    key: tuple
    n: int
    means: dict[str, float] = field(default_factory=dict)
    stderrs: dict[str, float] = field(default_factory=dict)
    theory: float = 0.0


SUMMARY_METRICS = ("additional_messages", "additional_bytes", "completion_time_ms",
                   "avg_decode_time_s", "avg_code_time_s", "response_bytes")


def summarize(rows: Sequence[ResultRow]) -> list[Summary]:
    groups: dict[tuple, list[ResultRow]] = defaultdict(list)
    for r in rows:
        if r.ok:
            c = r.config
            groups[(c.mode, c.n_messages, c.p, c.alpha, c.scb, c.timeout_ms)].append(r)
    out = []
    for key, rs in sorted(groups.items()):
        s = Summary(key, len(rs))
        for name in SUMMARY_METRICS:
            vals = [float(getattr(r.metrics, name)) for r in rs]
            s.means[name] = statistics.fmean(vals)
            s.stderrs[name] = statistics.stdev(vals) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
        s.theory = rs[0].theory_coded if key[0] == "coded" else rs[0].theory_uncoded
        out.append(s)
    return out


def emit_tables(rows: Sequence[ResultRow]) -> str:
    """Plain-text tables: per-config means and a coded-vs-uncoded comparison."""
    summaries = summarize(rows)
    lines = ["mode     p     alpha scb  reps  add_msgs (theory)        add_bytes           "
             "completion_s      resp_bytes   decode_ms  code_ms"]
    for s in summaries:
        mode, _, p, alpha, scb, _ = s.key
        m, e = s.means, s.stderrs
        lines.append(
            f"{mode:<8} {p:<5g} {alpha:<5g} {scb:<4d} {s.n:<5d} "
            f"{m['additional_messages']:7.2f}±{e['additional_messages']:<5.2f} ({s.theory:7.2f})  "
            f"{m['additional_bytes']:9.1f}±{e['additional_bytes']:<7.1f} "
            f"{m['completion_time_ms'] / 1000:8.1f}±{e['completion_time_ms'] / 1000:<6.1f} "
            f"{m['response_bytes']:9.1f}  {m['avg_decode_time_s'] * 1000:8.3f}  "
            f"{m['avg_code_time_s'] * 1000:7.3f}"
        )
    by_key = {s.key: s for s in summaries}
    cmp_lines = []
    for s in summaries:
        mode, n, p, alpha, scb, to = s.key
        if mode != "coded":
            continue
        base = next((b for k, b in by_key.items()
                     if k[0] == "uncoded" and k[1] == n and k[2] == p and k[5] == to), None)
        if base is None:
            continue
        cmp_lines.append(
            f"p={p:<5g} alpha={alpha:<5g} scb={scb:<3d} "
            f"msgs {s.means['additional_messages']:7.2f} vs {base.means['additional_messages']:7.2f}  "
            f"bytes {s.means['additional_bytes']:9.1f} vs {base.means['additional_bytes']:9.1f}  "
            f"resp {s.means['response_bytes']:8.1f} vs {base.means['response_bytes']:8.1f}"
        )
    if cmp_lines:
        lines += ["", "coded vs uncoded (same p, timeout)"] + cmp_lines
    if failed := [r for r in rows if not r.ok]:
        lines += ["", f"{len(failed)} failed run(s):"]
        lines += [f"  {r.config.mode} p={r.config.p} alpha={r.config.alpha} rep={r.rep}: {r.error}"
                  for r in failed]
    return "\n".join(lines) + "\n"


def expand_grid(modes: Sequence[str], ps: Sequence[float], alphas: Sequence[float],
                scbs: Sequence[int], base: ExperimentConfig,
                uncoded_alphas: Sequence[float] = (1.0,)) -> list[ExperimentConfig]:
    """Cartesian product; uncoded runs ignore SCB and use ``uncoded_alphas``."""
    out = []
    for mode in modes:
        if mode == "coded":
            for p, a, scb in itertools.product(ps, alphas, scbs):
                out.append(base.with_(mode=mode, p=p, alpha=a, scb=scb))
        else:
            for p, a in itertools.product(ps, uncoded_alphas):
                out.append(base.with_(mode=mode, p=p, alpha=a, scb=1))
    return out
