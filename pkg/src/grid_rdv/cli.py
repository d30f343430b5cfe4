"""Command-line entry point.

Exit codes: 0 success, 1 counterexample or failed claim, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

from . import harness
from .claims import CLAIM_KEYS, Verifier
from .engine import SimConfig, SimResult, run, write_trace
from .grid import Coord
from .harness import CSV_COLUMNS, SweepSpec, csv_row, proven_bound
from .programs import parse_scenario

SUBCOMMANDS = ("run", "sweep", "verify", "trace")
ASCII_MAX_DISTANCE = 20
ASCII_MAX_SIDE = 41


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """``"0..32"`` (inclusive), ``"0,5,9"`` or a mix such as ``"0..3,10"``."""
    out: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo_i, hi_i = int(lo), int(hi)
            if lo_i > hi_i:
                raise argparse.ArgumentTypeError(f"empty range {part!r}")
            out.update(range(lo_i, hi_i + 1))
        else:
            out.add(int(part))
    if not out or min(out) < 0:
        raise argparse.ArgumentTypeError(f"bad delay list {text!r}")
    return sorted(out)


def read_config_file(path: str) -> list[str]:
    """Turn ``key = value`` lines into flags; ``#`` starts a comment."""
    args: list[str] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on"):
                args.append(flag)
            elif value.lower() in ("false", "no", "off"):
                continue
            else:
                args.extend([flag, value])
    return args


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True, choices=("known", "simult", "hardest"))
    p.add_argument("--D", type=int, help="known upper bound on the distance (known only)")


def _add_placement_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dx", type=int, required=True)
    p.add_argument("--dy", type=int, required=True)
    p.add_argument("--delay", type=int, default=0, help="wake delay of the second agent")
    p.add_argument("--budget", type=int, help="round budget after the later wake-up")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grid-rdv",
        description="Rendezvous of two mark-leaving agents on the oriented grid.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration")
    _add_scenario_args(p)
    _add_placement_args(p)
    p.add_argument("--trace", metavar="PATH", help="also write the JSONL trace here")
    p.add_argument("--format", choices=("human", "jsonl", "csv"), default="human")
    p.add_argument("--output", metavar="PATH", help="write the summary here instead of stdout")
    p.add_argument("--config", metavar="PATH")

    p = sub.add_parser("trace", help="write the JSONL round trace of one configuration")
    _add_scenario_args(p)
    _add_placement_args(p)
    p.add_argument("--output", metavar="PATH")
    p.add_argument("--config", metavar="PATH")

    p = sub.add_parser("sweep", help="exhaustive sweep over placements and delays")
    p.add_argument("--scenario", required=True, choices=("known", "simult", "hardest"))
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--dmin", type=int, default=1)
    p.add_argument("--delays", type=parse_range, default=[0], help="e.g. 0..32 or 0,4,8")
    p.add_argument("--D", type=parse_range, dest="D_values", help="explicit D values (known)")
    p.add_argument("--no-adversarial", action="store_true", help="skip the structured delay probes")
    p.add_argument("--output", metavar="PATH", help="CSV report path (default stdout)")
    p.add_argument("--jobs", type=int)
    p.add_argument("--config", metavar="PATH")

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--quick", action="store_true", help="halve all distance maxima")
    p.add_argument("--claim", action="append", choices=CLAIM_KEYS, dest="claims")
    p.add_argument("--jobs", type=int)
    p.add_argument("--config", metavar="PATH")
    return parser


def expand_config(argv: Sequence[str]) -> list[str]:
    argv = list(argv)
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2 :]
    extra = read_config_file(path)
    # file values go right after the subcommand so explicit flags override them
    for j, tok in enumerate(rest):
        if tok in SUBCOMMANDS:
            return rest[: j + 1] + extra + rest[j + 1 :]
    raise UsageError("--config given without a subcommand")


def make_config(args) -> SimConfig:
    if args.scenario == "known" and args.D is None:
        raise UsageError("--scenario known requires --D")
    if args.delay < 0:
        raise UsageError("--delay must be nonnegative")
    if args.budget is not None and args.budget < 1:
        raise UsageError("--budget must be positive")
    try:
        scenario = parse_scenario(args.scenario, args.D)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return SimConfig(
        scenario,
        Coord(0, 0),
        Coord(args.dx, args.dy),
        0,
        args.delay,
        round_budget=args.budget,
    )


def render_ascii(result: SimResult) -> Optional[str]:
    """Small picture of both walks; None when too far apart or untraced."""
    cfg = result.config
    if result.trace is None or cfg.distance > ASCII_MAX_DISTANCE:
        return None
    seen_a, seen_b = {cfg.base_a}, {cfg.base_b}
    for ev in result.trace:
        if ev.a_awake:
            seen_a.add(ev.a)
        if ev.b_awake:
            seen_b.add(ev.b)
    cx = (cfg.base_a.x + cfg.base_b.x) // 2
    cy = (cfg.base_a.y + cfg.base_b.y) // 2
    half = ASCII_MAX_SIDE // 2
    pts = seen_a | seen_b
    x0 = max(min(p.x for p in pts), cx - half)
    x1 = min(max(p.x for p in pts), cx + half)
    y0 = max(min(p.y for p in pts), cy - half)
    y1 = min(max(p.y for p in pts), cy + half)
    rows = []
    for y in range(y1, y0 - 1, -1):
        line = []
        for x in range(x0, x1 + 1):
            c = Coord(x, y)
            if result.meet_node == c:
                ch = "*"
            elif c == cfg.base_a:
                ch = "A"
            elif c == cfg.base_b:
                ch = "B"
            elif c in seen_a and c in seen_b:
                ch = "+"
            elif c in seen_a:
                ch = "a"
            elif c in seen_b:
                ch = "b"
            else:
                ch = "."
            line.append(ch)
        rows.append("".join(line))
    return "\n".join(rows)


def _human_summary(result: SimResult) -> str:
    cfg = result.config
    s = result.summary()
    lines = [
        f"scenario        {cfg.scenario.name}"
        + (f" (D={cfg.scenario.D})" if hasattr(cfg.scenario, "D") else ""),
        f"bases           a={tuple(cfg.base_a)} b={tuple(cfg.base_b)} distance={cfg.distance}",
        f"wake rounds     a={cfg.wake_a} b={cfg.wake_b}",
        f"met             {s['met']}",
        f"meet round      {s['meet_round']}",
        f"time            {s['normalized_time']} (bound {proven_bound(cfg, result)})",
        f"actions         a={s['action_a']} b={s['action_b']}",
        f"crossings       {len(result.crossings)}",
    ]
    if result.phases_completed is not None:
        lines.append(f"last phase      {result.phases_completed}")
    if result.failure is not None:
        lines.append(f"failure         {result.failure}")
    art = render_ascii(result)
    if art:
        lines += ["", art]
    return "\n".join(lines) + "\n"


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_run(args) -> int:
    config = make_config(args)
    want_trace = args.trace is not None or (
        args.format == "human" and config.distance <= ASCII_MAX_DISTANCE
    )
    result = run(replace(config, record_trace=want_trace))
    if args.trace:
        with open(args.trace, "w") as fh:
            write_trace(result, fh)
    fh, close = _open_out(args.output)
    try:
        if args.format == "human":
            fh.write(_human_summary(result))
        elif args.format == "jsonl":
            fh.write(json.dumps({"config": config.to_dict(), **result.summary()}) + "\n")
        else:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerow(csv_row(config, result, proven_bound(config, result)))
    finally:
        if close:
            fh.close()
    return 0 if result.met else 1


def cmd_trace(args) -> int:
    config = make_config(args)
    result = run(replace(config, record_trace=True))
    fh, close = _open_out(args.output)
    try:
        write_trace(result, fh)
    finally:
        if close:
            fh.close()
    return 0 if result.met else 1


def cmd_sweep(args) -> int:
    if args.scenario != "known" and args.D_values is not None:
        raise UsageError("--D applies to the known scenario only")
    try:
        spec = SweepSpec(
            args.scenario,
            args.dmax,
            args.delays,
            D_values=args.D_values,
            distance_min=args.dmin,
            adversarial=not args.no_adversarial,
            jobs=harness.resolve_jobs(args.jobs),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = harness.sweep(spec)
    fh, close = _open_out(args.output)
    try:
        harness.write_csv(report, fh)
    finally:
        if close:
            fh.close()
    err = sys.stderr
    err.write(
        f"{report.runs} runs, {report.failure_count} failures, "
        f"max time by distance {report.max_normalized_time_by_distance}, "
        f"fitted exponent {harness.fmt_exponent(report.fitted_exponent)}\n"
    )
    for config, result, problems in report.failures[:20]:
        err.write("counterexample " + json.dumps({"config": config.to_dict(), "problems": problems}) + "\n")
    return 0 if report.ok else 1


def cmd_verify(args) -> int:
    verifier = Verifier(quick=args.quick, jobs=harness.resolve_jobs(args.jobs))
    failed = 0
    for key in args.claims or CLAIM_KEYS:
        res = verifier.run([key])[0]
        print(res.line(), flush=True)
        failed += not res.passed
    print(f"{'all claims pass' if not failed else f'{failed} claim(s) failed'}")
    return 1 if failed else 0


COMMANDS = {"run": cmd_run, "trace": cmd_trace, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = expand_config(argv)
    except (UsageError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"grid-rdv: error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"grid-rdv: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
