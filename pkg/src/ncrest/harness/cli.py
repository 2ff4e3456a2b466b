"""Command line: ``ncrest run | grid | theory``."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from ..errors import DomainError
from .config import ConfigError, GridSpec, load_config
from .experiment import ExperimentConfig, emit_tables, run_grid, write_csv
from .theory import theory_additional_coded, theory_additional_uncoded

# flag dest -> ExperimentConfig field
_OVERRIDES = {
    "n": "n_messages",
    "timeout_ms": "timeout_ms",
    "seed": "seed",
    "reps": "repetitions",
    "transport": "transport",
    "arrival_interval_ms": "arrival_interval_ms",
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _modes(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="key = value experiment file")
    sp.add_argument("--mode", type=_modes, help="coded, uncoded (comma list in grid)")
    sp.add_argument("--n", type=int, help="messages per run")
    sp.add_argument("--p", type=_floats, help="round-trip loss probability")
    sp.add_argument("--alpha", type=_floats, help="share of losses on the request path")
    sp.add_argument("--scb", type=_ints, help="subset coding buffer size")
    sp.add_argument("--timeout-ms", type=float)
    sp.add_argument("--arrival-interval-ms", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--reps", type=int, help="repetitions (seeds seed..seed+reps-1)")
    sp.add_argument("--transport", choices=("sim", "http"))
    sp.add_argument("--out", help="CSV output path (default: stdout)")
    sp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    sp.add_argument("--quiet", action="store_true", help="skip the summary table")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncrest", description="Coded vs plain REST experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run a single configuration"))
    _add_common(sub.add_parser("grid", help="sweep a parameter grid from a config file"))
    th = sub.add_parser("theory", help="print the expected-retransmission table")
    th.add_argument("--n", type=int, default=100)
    th.add_argument("--p", type=_floats, default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7])
    th.add_argument("--alpha", type=_floats, default=[0.3, 0.5, 1.0])
    return ap


def _spec_from_args(args) -> GridSpec:
    spec = load_config(args.config) if args.config else GridSpec(ExperimentConfig())
    over = {field: getattr(args, dest) for dest, field in _OVERRIDES.items()
            if getattr(args, dest) is not None}
    if over:
        spec.base = spec.base.with_(**over)
    for dest, attr in (("mode", "modes"), ("p", "ps"), ("alpha", "alphas"), ("scb", "scbs")):
        if getattr(args, dest) is not None:
            setattr(spec, attr, getattr(args, dest))
    if args.alpha is not None:
        # a flag-given alpha applies to the uncoded baseline too
        spec.uncoded_alphas = args.alpha
    return spec


def _execute(configs, args) -> int:
    rows = run_grid(configs, jobs=args.jobs)
    text = write_csv(rows, args.out)
    if args.out is None:
        sys.stdout.write(text)
    if not args.quiet:
        print(emit_tables(rows), file=sys.stderr if args.out is None else sys.stdout, end="")
    failed = sum(not r.ok for r in rows)
    if failed:
        print(f"ncrest: {failed} of {len(rows)} run(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_run(args) -> int:
    spec = _spec_from_args(args)
    configs = spec.configs()
    if len(configs) != 1:
        print(f"ncrest run: expected one configuration, got {len(configs)}; use `grid`",
              file=sys.stderr)
        return 2
    return _execute(configs, args)


def cmd_grid(args) -> int:
    return _execute(_spec_from_args(args).configs(), args)


def cmd_theory(args) -> int:
    head = f"{'p':>5}  {'uncoded':>9}" + "".join(f"  {'a=' + format(a, 'g'):>9}" for a in args.alpha)
    print(head)
    for p in args.p:
        row = f"{p:5g}  {theory_additional_uncoded(args.n, p):9.2f}"
        row += "".join(f"  {theory_additional_coded(args.n, p, a):9.2f}" for a in args.alpha)
        print(row)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "grid": cmd_grid, "theory": cmd_theory}[args.command]
    try:
        return handler(args)
    except (ConfigError, DomainError, ValueError, OSError) as e:
        print(f"ncrest: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
