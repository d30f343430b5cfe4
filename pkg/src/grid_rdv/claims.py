"""The verification suite: each claim checked at fixed parameters.

``quick=True`` halves every distance maximum. Sweeps are cached on the
:class:`Verifier` so claims that only aggregate (decision-table coverage,
different actions) reuse them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional

from .engine import SimConfig, replay_check, run
from .grid import Coord, manhattan, step
from .harness import (
    ORIGIN,
    SweepReport,
    SweepSpec,
    fmt_exponent,
    no_marking_run,
    placements,
    sweep,
)
from .programs import (
    HardestScenario,
    KnownUpperBound,
    SimultaneousStart,
    squarespiral_script,
)

EXPONENT_RANGE = (1.0, 2.1)  # open below, closed above
SPIRAL_MOVES = 100_000
SPIRAL_MAX_RADIUS = 100
NO_MARKING_ROUNDS = 10_000
REPLAY_CONFIGS = 1000
TRANSLATIONS = 100


@dataclass
class ClaimResult:
    key: str
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.key:<18} {self.title}: {self.detail}"


class Verifier:
    def __init__(self, quick: bool = False, jobs: int = 1, seed: int = 20240501):
        self.quick = quick
        self.jobs = jobs
        self.seed = seed
        self._sweeps: dict[str, SweepReport] = {}

    def _dmax(self, full: int) -> int:
        return max(1, full // 2) if self.quick else full

    # -- sweeps ----------------------------------------------------------

    def _sweep(self, key: str, spec: SweepSpec) -> SweepReport:
        if key not in self._sweeps:
            self._sweeps[key] = sweep(spec)
        return self._sweeps[key]

    def known_sweep(self) -> SweepReport:
        return self._sweep("known", SweepSpec("known", self._dmax(8), range(33), jobs=self.jobs))

    def simult_sweep(self) -> SweepReport:
        return self._sweep("simult", SweepSpec("simult", self._dmax(64), (0,), jobs=self.jobs))

    def hardest_sweep(self) -> SweepReport:
        return self._sweep("hardest", SweepSpec("hardest", self._dmax(16), range(51), jobs=self.jobs))

    def exponent_sweep(self) -> SweepReport:
        spec = SweepSpec("hardest", self._dmax(32), (0,), distance_min=4, jobs=self.jobs)
        return self._sweep("exponent", spec)

    # -- claims ----------------------------------------------------------

    def known_bound(self) -> ClaimResult:
        r = self.known_sweep()
        return ClaimResult(
            "known-bound",
            "Known Upper Bound meets within 18D",
            r.ok and r.runs > 0,
            _sweep_detail(r),
        )

    def simult_phase(self) -> ClaimResult:
        r = self.simult_sweep()
        worst_phase = max(r.max_phase_by_distance.values(), default=None)
        return ClaimResult(
            "simult-phase",
            "Simultaneous Start meets by phase ceil(log d)+1 within 8*2^(p+1)",
            r.ok and r.runs > 0,
            _sweep_detail(r) + f", max phase {worst_phase}",
        )

    def hardest_bound(self) -> ClaimResult:
        r = self.hardest_sweep()
        worst_t = max(r.max_trajectory_by_distance.values(), default=None)
        return ClaimResult(
            "hardest-bound",
            "Hardest Scenario meets within 12d^2+14d+2, |T| <= 4d(d+1)",
            r.ok and r.runs > 0,
            _sweep_detail(r) + f", longest T {worst_t}",
        )

    def tables_exhaustive(self) -> ClaimResult:
        reports = [self.known_sweep(), self.simult_sweep(), self.hardest_sweep()]
        fired = sum(r.unreachable for r in reports)
        runs = sum(r.runs for r in reports)
        return ClaimResult(
            "tables-exhaustive",
            "no decision-table input falls outside the tables",
            fired == 0 and runs > 0,
            f"{fired} unreachable inputs over {runs} runs",
        )

    def different_actions(self) -> ClaimResult:
        reports = [self.known_sweep(), self.hardest_sweep()]
        decided = sum(r.decided_pairs for r in reports)
        differ = sum(r.differing_pairs for r in reports)
        return ClaimResult(
            "different-actions",
            "agents that both decide pick different actions",
            decided > 0 and decided == differ,
            f"{differ}/{decided} decided pairs differ",
        )

    def no_marking(self) -> ClaimResult:
        outcomes = [
            no_marking_run(sc, NO_MARKING_ROUNDS)
            for sc in (KnownUpperBound(1), SimultaneousStart(), HardestScenario())
        ]
        bad = [o.scenario for o in outcomes if not o.ok or o.rounds != NO_MARKING_ROUNDS]
        return ClaimResult(
            "no-marking",
            "without marks the agents never meet",
            not bad,
            f"{NO_MARKING_ROUNDS} rounds per scenario, offset (1,0) held"
            if not bad
            else f"violated for {', '.join(bad)}",
        )

    def spiral(self) -> ClaimResult:
        problems = spiral_problems(SPIRAL_MOVES, SPIRAL_MAX_RADIUS)
        return ClaimResult(
            "spiral",
            "square spiral is self-avoiding and fills balls on schedule",
            not problems,
            "; ".join(problems[:3]) or f"{SPIRAL_MOVES} moves, radii 0..{SPIRAL_MAX_RADIUS}",
        )

    def engine_hygiene(self) -> ClaimResult:
        problems = hygiene_problems(self.seed, REPLAY_CONFIGS, TRANSLATIONS)
        return ClaimResult(
            "engine-hygiene",
            "determinism, translation invariance, label-swap symmetry",
            not problems,
            "; ".join(problems[:3])
            or f"{REPLAY_CONFIGS} replays, {TRANSLATIONS} translations, label swaps d<=6",
        )

    def exponent(self) -> ClaimResult:
        r = self.exponent_sweep()
        lo, hi = EXPONENT_RANGE
        x = r.fitted_exponent
        return ClaimResult(
            "exponent",
            "worst-case Hardest Scenario log-log slope (reported only)",
            x is not None and lo < x <= hi,
            f"slope {fmt_exponent(x)} over d={min(r.max_normalized_time_by_distance)}.."
            f"{max(r.max_normalized_time_by_distance)}, expected in ({lo}, {hi}]",
        )

    def claims(self) -> dict[str, Callable[[], ClaimResult]]:
        return {
            "known-bound": self.known_bound,
            "simult-phase": self.simult_phase,
            "hardest-bound": self.hardest_bound,
            "tables-exhaustive": self.tables_exhaustive,
            "different-actions": self.different_actions,
            "no-marking": self.no_marking,
            "spiral": self.spiral,
            "engine-hygiene": self.engine_hygiene,
            "exponent": self.exponent,
        }

    def run(self, keys: Optional[Iterable[str]] = None) -> list[ClaimResult]:
        table = self.claims()
        if keys is None:
            keys = list(table)
        unknown = [k for k in keys if k not in table]
        if unknown:
            raise KeyError(f"unknown claim(s): {', '.join(unknown)}")
        return [table[k]() for k in keys]


CLAIM_KEYS = list(Verifier().claims())


def _sweep_detail(r: SweepReport) -> str:
    margin = min(r.bound_margin.values(), default=None)
    return f"{r.runs} runs, {r.failure_count} failures, min margin {margin}"


def spiral_problems(moves: int, max_radius: int) -> list[str]:
    """Self-avoidance over ``moves`` moves and ball coverage up to ``max_radius``.

    After 4l(l+1) moves the visited set must be exactly the square of
    half-side l around the base, which contains the Manhattan ball of radius l.
    """
    checkpoints = {4 * r * (r + 1): r for r in range(max_radius + 1)}
    needed = max(moves, max(checkpoints))
    pos = ORIGIN
    visited = {pos}
    problems = []
    it = squarespiral_script()
    for k in range(1, needed + 1):
        pos = step(pos, next(it))
        if pos in visited:
            problems.append(f"move {k} revisits {pos}")
            break
        visited.add(pos)
        r = checkpoints.get(k)
        if r is not None:
            square = all(abs(p.x) <= r and abs(p.y) <= r for p in visited)
            ball = all(
                Coord(x, y) in visited
                for x in range(-r, r + 1)
                for y in range(-(r - abs(x)), r - abs(x) + 1)
            )
            if not (square and ball and len(visited) == 1 + 4 * r * (r + 1)):
                problems.append(f"radius {r} not covered after {k} moves")
    return problems


def _random_config(rng: random.Random) -> SimConfig:
    kind = rng.choice(("known", "simult", "hardest"))
    while True:
        dx, dy = rng.randint(-6, 6), rng.randint(-6, 6)
        if 1 <= abs(dx) + abs(dy) <= 6:
            break
    d = abs(dx) + abs(dy)
    if kind == "known":
        sc, delay = KnownUpperBound(rng.choice((d, d + 1, 2 * d))), rng.randint(0, 40)
    elif kind == "simult":
        sc, delay = SimultaneousStart(), 0
    else:
        sc, delay = HardestScenario(), rng.randint(0, 60)
    base = Coord(rng.randint(-50, 50), rng.randint(-50, 50))
    if rng.random() < 0.5:
        return SimConfig(sc, base, base + (dx, dy), 0, delay)
    return SimConfig(sc, base, base + (dx, dy), delay, 0)


def translation_mismatch(config: SimConfig, dx: int, dy: int) -> Optional[str]:
    first = run(replace(config, record_trace=True))
    moved = run(replace(config.translated(dx, dy), record_trace=True))
    if (first.meet_round, first.normalized_time) != (moved.meet_round, moved.normalized_time):
        return f"meet round changed under shift ({dx},{dy})"
    if len(first.trace) != len(moved.trace):
        return f"trace length changed under shift ({dx},{dy})"
    for ev, sh in zip(first.trace, moved.trace):
        if (
            sh.a != ev.a + (dx, dy)
            or sh.b != ev.b + (dx, dy)
            or [m + (dx, dy) for m in ev.new_marks] != sh.new_marks
            or ev.event != sh.event
        ):
            return f"round {ev.t} differs under shift ({dx},{dy})"
    return None


def hygiene_problems(seed: int, replays: int, translations: int) -> list[str]:
    rng = random.Random(seed)
    problems = []
    for _ in range(replays):
        cfg = _random_config(rng)
        if not replay_check(cfg):
            problems.append(f"replay mismatch for {cfg.to_dict()}")
    for k in range(translations):
        cfg = _random_config(rng)
        span = 2**40 if k % 10 == 0 else 10**6
        dx, dy = rng.randint(-span, span), rng.randint(-span, span)
        msg = translation_mismatch(cfg, dx, dy)
        if msg:
            problems.append(f"{msg} for {cfg.to_dict()}")
    problems.extend(label_swap_problems(6))
    return problems


def label_swap_problems(distance_max: int) -> list[str]:
    problems = []
    for p in placements(distance_max):
        d = manhattan(ORIGIN, p)
        for sc in (KnownUpperBound(d), SimultaneousStart(), HardestScenario()):
            cfg = SimConfig(sc, ORIGIN, p)
            one, two = run(cfg), run(cfg.swapped())
            if one.meet_round != two.meet_round:
                problems.append(f"label swap changes meet round for {cfg.to_dict()}")
    return problems
