"""Adversary sweeps: every placement, a set of delays, bound checks.

One base always sits at the origin (the grid looks the same everywhere) and
the agent at the other base is the one woken late; sweeping every relative
placement covers the mirrored choice as well.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import SimConfig, SimResult, run
from .grid import Coord, manhattan
from .programs import (
    DecisionAction,
    HardestScenario,
    KnownUpperBound,
    ScenarioChoice,
    SimultaneousStart,
    parse_scenario,
)

log = logging.getLogger(__name__)

ORIGIN = Coord(0, 0)

CSV_COLUMNS = [
    "scenario",
    "dx",
    "dy",
    "distance",
    "delay",
    "D",
    "met",
    "meet_round",
    "normalized_time",
    "paper_bound",
    "margin",
    "action_a",
    "action_b",
    "phases",
    "crossings",
]

# failure lists are never cut shorter than this
MIN_KEPT_FAILURES = 100
MIN_FIT_POINTS = 3  # smallest input fit_exponent accepts
REPORT_FIT_POINTS = 4  # sweeps only report a slope from this many distances


@dataclass
class SweepSpec:
    scenario: str  # "known" | "simult" | "hardest"
    distance_max: int
    delay_set: Sequence[int] = (0,)
    D_values: Optional[Sequence[int]] = None
    distance_min: int = 1
    adversarial: bool = True
    jobs: int = 1
    max_failures: int = 1000

    def __post_init__(self):
        self.scenario = parse_scenario(self.scenario, 1).name
        if self.distance_max < 1 or self.distance_min < 1 or self.distance_min > self.distance_max:
            raise ValueError("need 1 <= distance_min <= distance_max")
        if any(d < 0 for d in self.delay_set):
            raise ValueError("delays must be nonnegative")
        if self.max_failures < MIN_KEPT_FAILURES:
            raise ValueError(f"max_failures must be at least {MIN_KEPT_FAILURES}")


@dataclass
class RunRecord:
    """Outcome of one swept config, small enough to ship between processes."""

    config: SimConfig
    result: SimResult
    bound: int
    violations: list
    row: dict

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class SweepReport:
    spec: SweepSpec
    runs: int = 0
    failures: list = field(default_factory=list)  # (config, result, violations)
    failure_count: int = 0
    max_normalized_time_by_distance: dict = field(default_factory=dict)
    bound_margin: dict = field(default_factory=dict)
    fitted_exponent: Optional[float] = None
    rows: list = field(default_factory=list)
    unreachable: int = 0
    decided_pairs: int = 0
    differing_pairs: int = 0
    max_phase_by_distance: dict = field(default_factory=dict)
    max_trajectory_by_distance: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failure_count == 0


def placements(distance_max: int, distance_min: int = 1) -> list[Coord]:
    out = []
    for dx in range(-distance_max, distance_max + 1):
        rest = distance_max - abs(dx)
        for dy in range(-rest, rest + 1):
            if abs(dx) + abs(dy) >= distance_min:
                out.append(Coord(dx, dy))
    return out


def known_D_choices(d: int) -> list[int]:
    return sorted({d, d + 1, 2 * d})


def ceil_log2(d: int) -> int:
    return (d - 1).bit_length()


def scenario_for(name: str, D: Optional[int] = None) -> ScenarioChoice:
    return parse_scenario(name, D)


def adversarial_delays(scenario: ScenarioChoice, placement: tuple[int, int]) -> list[int]:
    """Delays aimed at the proofs' case boundaries, beyond a flat range.

    The probes sit around the end of the earlier agent's first part: 8D for
    the known bound, and the first-hit round of a pilot run for the hardest
    scenario. Simultaneous start admits only delay 0.
    """
    if isinstance(scenario, SimultaneousStart):
        return [0]
    if isinstance(scenario, KnownUpperBound):
        part1 = 8 * scenario.D
    elif isinstance(scenario, HardestScenario):
        pilot = run(SimConfig(scenario, ORIGIN, placement))
        hits = pilot.agents["a"].hits
        part1 = hits[0].round if hits else pilot.meet_round or 0
    else:
        raise TypeError(f"unknown scenario {scenario!r}")
    probes = {0, 1, part1 - 1, part1, part1 + 1, 2 * part1}
    return sorted(p for p in probes if p >= 0)


def sweep_configs(spec: SweepSpec) -> list[SimConfig]:
    configs = []
    seen = set()
    for p in placements(spec.distance_max, spec.distance_min):
        d = manhattan(ORIGIN, p)
        if spec.scenario == "known":
            Ds = known_D_choices(d) if spec.D_values is None else [D for D in spec.D_values if D >= d]
            scenarios = [KnownUpperBound(D) for D in Ds]
        else:
            scenarios = [scenario_for(spec.scenario)]
        for sc in scenarios:
            delays = set(spec.delay_set)
            if isinstance(sc, SimultaneousStart):
                delays = {0}
            elif spec.adversarial:
                delays.update(adversarial_delays(sc, p))
            for delay in sorted(delays):
                cfg = SimConfig(sc, ORIGIN, p, 0, delay)
                if cfg not in seen:
                    seen.add(cfg)
                    configs.append(cfg)
    return configs


def proven_bound(config: SimConfig, result: Optional[SimResult] = None) -> int:
    """Proven rendezvous-time bound for this config.

    For simultaneous start the bound depends on the last phase reached, so
    the result is needed.
    """
    sc = config.scenario
    d = config.distance
    if isinstance(sc, KnownUpperBound):
        return 18 * sc.D
    if isinstance(sc, HardestScenario):
        return 12 * d * d + 14 * d + 2
    if isinstance(sc, SimultaneousStart):
        p = ceil_log2(d) + 1
        if result is not None and result.phases_completed is not None:
            p = result.phases_completed
        return 8 * 2 ** (p + 1)
    raise TypeError(f"unknown scenario {sc!r}")


def check_run(config: SimConfig, result: SimResult) -> list[str]:
    """Every claimed property this single run can falsify."""
    problems = []
    sc = config.scenario
    d = config.distance
    if result.failure is not None:
        problems.append(str(result.failure))
    elif not result.met:
        problems.append("no rendezvous")
    if result.met:
        bound = proven_bound(config, result)
        if result.normalized_time > bound:
            problems.append(f"time {result.normalized_time} > bound {bound}")
    if isinstance(sc, SimultaneousStart) and result.met:
        limit = ceil_log2(d) + 1
        if result.phases_completed > limit:
            problems.append(f"met in phase {result.phases_completed} > {limit}")
    if isinstance(sc, (KnownUpperBound, HardestScenario)) and result.both_decided:
        if result.action_of["a"] is result.action_of["b"]:
            problems.append(f"both agents chose action {result.action_of['a']}")
    if isinstance(sc, KnownUpperBound):
        problems.extend(_known_structure(config, result))
    if isinstance(sc, HardestScenario):
        for label, rep in result.agents.items():
            if rep.trajectory_len is None:
                continue
            if rep.trajectory_len > 4 * d * (d + 1):
                problems.append(f"|T_{label}| = {rep.trajectory_len} > 4d(d+1)")
            if rep.trajectory_width > 2 * d or rep.trajectory_height > 2 * d:
                problems.append(
                    f"T_{label} is {rep.trajectory_width}x{rep.trajectory_height}, over 2d"
                )
    return problems


def _known_structure(config: SimConfig, result: SimResult) -> list[str]:
    problems = []
    dx = config.base_b.x - config.base_a.x
    dy = config.base_b.y - config.base_a.y
    reps = result.agents
    if dx and dy and result.both_decided:
        total = sum(len(r.decision_hits) for r in reps.values())
        if total != 2:
            problems.append(f"{total} hits off a common line, expected 2")
    if dy == 0 and dx and result.normalized_time != 0:
        west, east = ("a", "b") if dx > 0 else ("b", "a")
        for label, want in ((west, "E"), (east, "W")):
            hits = reps[label].hits
            if hits and hits[0].dir.value != want:
                problems.append(f"agent {label} first hit is {hits[0].dir.value}, expected {want}")
    return problems


def evaluate(config: SimConfig) -> RunRecord:
    result = run(config)
    violations = check_run(config, result)
    bound = proven_bound(config, result)
    return RunRecord(config, result, bound, violations, csv_row(config, result, bound))


def csv_row(config: SimConfig, result: SimResult, bound: int) -> dict:
    sc = config.scenario
    dx = config.base_b.x - config.base_a.x
    dy = config.base_b.y - config.base_a.y
    margin = bound - result.normalized_time if result.met else None
    return {
        "scenario": sc.name,
        "dx": dx,
        "dy": dy,
        "distance": config.distance,
        "delay": config.wake_b - config.wake_a,
        "D": sc.D if isinstance(sc, KnownUpperBound) else "",
        "met": int(result.met),
        "meet_round": _blank(result.meet_round),
        "normalized_time": _blank(result.normalized_time),
        "paper_bound": bound,
        "margin": _blank(margin),
        "action_a": _blank(result.action_of.get("a")),
        "action_b": _blank(result.action_of.get("b")),
        "phases": _blank(result.phases_completed),
        "crossings": len(result.crossings),
    }


def _blank(v):
    return "" if v is None else str(v)


def resolve_jobs(jobs: Optional[int]) -> int:
    if jobs is None:
        jobs = int(os.environ.get("GRID_RDV_JOBS", "1"))
    return max(1, jobs)


def run_all(configs: Sequence[SimConfig], jobs: int = 1) -> list[RunRecord]:
    """Evaluate configs, in input order whatever the worker count."""
    if jobs <= 1 or len(configs) < 2:
        return [evaluate(c) for c in configs]
    chunk = max(1, len(configs) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(evaluate, configs, chunksize=chunk))


def sweep(spec: SweepSpec) -> SweepReport:
    configs = sweep_configs(spec)
    log.info("sweep %s: %d configs", spec.scenario, len(configs))
    records = run_all(configs, resolve_jobs(spec.jobs))
    return aggregate(spec, records)


def aggregate(spec: SweepSpec, records: Iterable[RunRecord]) -> SweepReport:
    report = SweepReport(spec=spec)
    worst = defaultdict(int)
    margin = {}
    phase = defaultdict(int)
    traj = defaultdict(int)
    for rec in records:
        res = rec.result
        d = rec.config.distance
        report.runs += 1
        report.rows.append(rec.row)
        if res.failure is not None and res.failure.kind == "UnreachableInput":
            report.unreachable += 1
        if res.both_decided:
            report.decided_pairs += 1
            if res.action_of["a"] is not res.action_of["b"]:
                report.differing_pairs += 1
        if res.met:
            worst[d] = max(worst[d], res.normalized_time)
            m = rec.bound - res.normalized_time
            margin[d] = min(margin.get(d, m), m)
        if res.phases_completed is not None:
            phase[d] = max(phase[d], res.phases_completed)
        for r in res.agents.values():
            if r.trajectory_len is not None:
                traj[d] = max(traj[d], r.trajectory_len)
        if rec.violations:
            report.failure_count += 1
            if len(report.failures) < spec.max_failures:
                report.failures.append((rec.config, res, rec.violations))
    report.rows.sort(key=_row_key)
    report.max_normalized_time_by_distance = dict(sorted(worst.items()))
    report.bound_margin = dict(sorted(margin.items()))
    report.max_phase_by_distance = dict(sorted(phase.items()))
    report.max_trajectory_by_distance = dict(sorted(traj.items()))
    positive = {d: t for d, t in worst.items() if t > 0}
    if len(positive) >= REPORT_FIT_POINTS:
        report.fitted_exponent = fit_exponent(positive)
    return report


def _row_key(row):
    return (row["distance"], row["dx"], row["dy"], str(row["D"]), int(row["delay"]))


def fit_exponent(max_time_by_distance: dict) -> float:
    """Least-squares slope of log(time) against log(distance)."""
    if len(max_time_by_distance) < MIN_FIT_POINTS:
        raise ValueError(f"need at least {MIN_FIT_POINTS} distance points")
    ds = np.array(sorted(max_time_by_distance), dtype=float)
    ts = np.array([max_time_by_distance[d] for d in sorted(max_time_by_distance)], dtype=float)
    if np.any(ds <= 0) or np.any(ts <= 0):
        raise ValueError("distances and times must be positive")
    slope, _ = np.polyfit(np.log(ds), np.log(ts), 1)
    return float(slope)


def write_csv(report: SweepReport, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(report.rows)


@dataclass
class NoMarkingOutcome:
    scenario: str
    rounds: int
    never_met: bool
    offset_held: bool
    failure: Optional[str]

    @property
    def ok(self) -> bool:
        return self.never_met and self.offset_held


def no_marking_run(
    scenario: ScenarioChoice, rounds: int = 10_000, offset: tuple[int, int] = (1, 0)
) -> NoMarkingOutcome:
    cfg = SimConfig(
        scenario,
        ORIGIN,
        Coord(*offset),
        round_budget=rounds,
        record_trace=True,
        marks_enabled=False,
    )
    result = run(cfg)
    held = all((ev.b.x - ev.a.x, ev.b.y - ev.a.y) == tuple(offset) for ev in result.trace)
    failure = None
    if result.failure is not None and result.failure.kind != "BudgetExceeded":
        failure = str(result.failure)
    return NoMarkingOutcome(
        scenario.name,
        len(result.trace),
        not result.met and failure is None,
        held,
        failure,
    )


def no_marking_check(
    scenario: ScenarioChoice, rounds: int = 10_000, offset: tuple[int, int] = (1, 0)
) -> bool:
    """Without marks, same program, same start: the agents can never meet.

    True iff the agents were never co-located in ``rounds`` rounds and the
    second agent stayed exactly ``offset`` away from the first throughout.
    """
    if rounds < 1:
        raise ValueError("rounds must be positive")
    return no_marking_run(scenario, rounds, offset).ok


def rerun_with_trace(config: SimConfig) -> SimResult:
    return run(replace(config, record_trace=True))


def action_name(a: Optional[DecisionAction]) -> str:
    return "-" if a is None else str(a)


def fmt_exponent(x: Optional[float]) -> str:
    return "n/a" if x is None or math.isnan(x) else f"{x:.3f}"
