"""Lockstep round scheduler for two mark-leaving agents.

Round ``t`` runs in this order:

1. agents whose wake round is ``t`` wake up and mark their base;
2. every awake, non-halted agent asks its program for an action;
3. all moves apply at once (an edge swap is a *crossing*, not a meeting);
4. each agent classifies the node it arrived at against the marks present
   before this round's arrivals, then marks it;
5. if both agents stand on one node (a sleeping agent counts, at its base)
   they have met and the run stops.

Round 0 is the wake-up of the earlier agent. Rendezvous time is counted from
the later wake-up and is 0 when the agents meet before it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

from .grid import COORD_LIMIT, Coord, checked_coord, manhattan
from .programs import (
    HALT,
    STAY,
    DecisionAction,
    HardestScenario,
    HitRecord,
    KnownUpperBound,
    Observation,
    ScenarioChoice,
    SimultaneousStart,
    UnreachableInput,
    VisitClass,
    make_program,
)

LABELS = ("a", "b")


@dataclass(frozen=True)
class SimConfig:
    scenario: ScenarioChoice
    base_a: Coord
    base_b: Coord
    wake_a: int = 0
    wake_b: int = 0
    round_budget: Optional[int] = None
    record_trace: bool = False
    marks_enabled: bool = True
    check_invariants: bool = False

    def __post_init__(self):
        object.__setattr__(self, "base_a", Coord(*self.base_a))
        object.__setattr__(self, "base_b", Coord(*self.base_b))
        if self.wake_a < 0 or self.wake_b < 0:
            raise ValueError("wake rounds must be nonnegative")
        if min(self.wake_a, self.wake_b) != 0:
            raise ValueError("the earlier wake-up must be round 0")
        if self.round_budget is not None and self.round_budget < 1:
            raise ValueError("round_budget must be positive")

    @property
    def distance(self) -> int:
        return manhattan(self.base_a, self.base_b)

    @property
    def delay(self) -> int:
        return abs(self.wake_a - self.wake_b)

    @property
    def budget(self) -> int:
        if self.round_budget is not None:
            return self.round_budget
        return default_budget(self.scenario, self.distance)

    def translated(self, dx: int, dy: int) -> SimConfig:
        return replace(
            self,
            base_a=self.base_a + (dx, dy),
            base_b=self.base_b + (dx, dy),
        )

    def swapped(self) -> SimConfig:
        return replace(
            self,
            base_a=self.base_b,
            base_b=self.base_a,
            wake_a=self.wake_b,
            wake_b=self.wake_a,
        )

    def to_dict(self) -> dict:
        sc = self.scenario
        return {
            "scenario": sc.name,
            "D": sc.D if isinstance(sc, KnownUpperBound) else None,
            "base_a": list(self.base_a),
            "base_b": list(self.base_b),
            "wake_a": self.wake_a,
            "wake_b": self.wake_b,
            "round_budget": self.budget,
            "marks_enabled": self.marks_enabled,
        }


def default_budget(scenario: ScenarioChoice, d: int) -> int:
    """Rounds allowed after the later wake-up: the proven bound plus slack."""
    if isinstance(scenario, KnownUpperBound):
        return 20 * scenario.D + 64
    if isinstance(scenario, SimultaneousStart):
        return 64 * d + 256
    if isinstance(scenario, HardestScenario):
        return 13 * d * d + 20 * d + 256
    raise TypeError(f"unknown scenario {scenario!r}")


@dataclass(frozen=True)
class Failure:
    kind: str  # "BudgetExceeded" | "UnreachableInput"
    details: str = ""

    def __str__(self):
        return f"{self.kind}: {self.details}" if self.details else self.kind


@dataclass
class RoundEvent:
    t: int
    a: Coord
    b: Coord
    a_awake: bool
    b_awake: bool
    new_marks: list
    hits: list  # (label, HitRecord)
    event: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "a": [self.a.x, self.a.y],
            "b": [self.b.x, self.b.y],
            "a_awake": self.a_awake,
            "b_awake": self.b_awake,
            "new_marks": [[m.x, m.y] for m in self.new_marks],
            "hits": [
                {"agent": who, "node": [h.node.x, h.node.y], "dir": h.dir.value}
                for who, h in self.hits
            ],
            "event": self.event,
        }


@dataclass
class AgentReport:
    """What one agent did, for the harness."""

    base: Coord
    wake: int
    hits: list = field(default_factory=list)  # HitRecord with global rounds
    decision: Optional[DecisionAction] = None
    halted: bool = False
    phase: Optional[int] = None
    decision_hits: Optional[list] = None
    trajectory_len: Optional[int] = None
    trajectory_width: Optional[int] = None
    trajectory_height: Optional[int] = None
    final_position: Optional[Coord] = None


@dataclass
class SimResult:
    config: SimConfig
    met: bool
    meet_round: Optional[int] = None
    normalized_time: Optional[int] = None
    meet_node: Optional[Coord] = None
    crossings: list = field(default_factory=list)
    action_of: dict = field(default_factory=dict)
    phases_completed: Optional[int] = None
    trace: Optional[list] = None
    failure: Optional[Failure] = None
    agents: dict = field(default_factory=dict)
    rounds_run: int = 0

    @property
    def both_decided(self) -> bool:
        return all(self.action_of.get(k) is not None for k in LABELS)

    def summary(self) -> dict:
        return {
            "met": self.met,
            "meet_round": self.meet_round,
            "normalized_time": self.normalized_time,
            "meet_node": list(self.meet_node) if self.meet_node else None,
            "crossings": self.crossings,
            "action_a": _str_or_none(self.action_of.get("a")),
            "action_b": _str_or_none(self.action_of.get("b")),
            "phases": self.phases_completed,
            "failure": str(self.failure) if self.failure else None,
        }


def _str_or_none(v):
    return None if v is None else str(v)


class _Agent:
    __slots__ = ("label", "base", "wake", "awake", "pos", "visited", "program", "obs", "hits")

    def __init__(self, label, base, wake, program):
        self.label = label
        self.base = base
        self.wake = wake
        self.awake = False
        self.pos = base
        self.visited = set()
        self.program = program
        self.obs = None
        self.hits = []


_DOMESTIC = VisitClass.DOMESTIC
_FOREIGN = VisitClass.FOREIGN
_REVISIT = VisitClass.REVISIT


def run(config: SimConfig) -> SimResult:
    agents = (
        _Agent("a", config.base_a, config.wake_a, make_program(config.scenario)),
        _Agent("b", config.base_b, config.wake_b, make_program(config.scenario)),
    )
    a, b = agents
    marking = config.marks_enabled
    checking = config.check_invariants
    marks: set = set()
    later_wake = max(config.wake_a, config.wake_b)
    last_round = later_wake + config.budget - 1
    trace = [] if config.record_trace else None
    result = SimResult(config=config, met=False)

    t = 0
    while True:
        new_marks = []
        if t == a.wake or t == b.wake:
            for ag in agents:
                if ag.wake == t:
                    _wake(ag, marks if marking else None, new_marks)
            if t == 0 and a.pos == b.pos:
                # coinciding bases: together before anyone moves
                _finish_meet(result, t, a.pos, later_wake)
                if trace is not None:
                    trace.append(RoundEvent(t, a.pos, b.pos, a.awake, b.awake, new_marks, [], "meet"))
                break

        # (2) choose actions
        try:
            move_a = a.program.act(a.obs) if a.awake else None
            move_b = b.program.act(b.obs) if b.awake else None
        except UnreachableInput as exc:
            result.failure = Failure("UnreachableInput", str(exc))
            break
        if move_a is STAY or move_a is HALT:
            move_a = None
        if move_b is STAY or move_b is HALT:
            move_b = None

        # (3) simultaneous moves
        old_a, old_b = a.pos, b.pos
        if move_a is not None:
            a.pos = _step(old_a, move_a)
        if move_b is not None:
            b.pos = _step(old_b, move_b)
        event = None
        if move_a is not None and move_b is not None and a.pos == old_b and b.pos == old_a:
            result.crossings.append(t)
            event = "cross"

        # (4) classify arrivals against the marks laid down before them
        hits = []
        arrived_a = _arrive(a, move_a, t, marks, marking, hits) if a.awake else None
        arrived_b = _arrive(b, move_b, t, marks, marking, hits) if b.awake else None
        if marking:
            for node in (arrived_a, arrived_b):
                if node is not None and node not in marks:
                    marks.add(node)
                    new_marks.append(node)

        if checking:
            _check_invariants(agents, (old_a, old_b), marks, marking)

        # (5) rendezvous
        if a.pos == b.pos:
            event = "meet"
            _finish_meet(result, t, a.pos, later_wake)
        if trace is not None:
            trace.append(RoundEvent(t, a.pos, b.pos, a.awake, b.awake, new_marks, hits, event))
        if result.met:
            break
        # (6) budget
        if t >= last_round:
            result.failure = Failure(
                "BudgetExceeded", f"no rendezvous within {config.budget} rounds of the later wake-up"
            )
            break
        t += 1

    result.rounds_run = t + 1
    result.trace = trace
    _collect(result, agents)
    return result


def _step(c, d):
    x = c[0] + d.dx
    y = c[1] + d.dy
    if -COORD_LIMIT <= x <= COORD_LIMIT and -COORD_LIMIT <= y <= COORD_LIMIT:
        return _new_coord(Coord, (x, y))
    return checked_coord(x, y)


_new_coord = _new_obs = tuple.__new__


def _wake(ag, marks, new_marks):
    ag.awake = True
    ag.visited.add(ag.base)
    ag.obs = Observation(ag.base, _DOMESTIC, None)
    if marks is not None and ag.base not in marks:
        marks.add(ag.base)
        new_marks.append(ag.base)


def _arrive(ag, move, t, marks, marking, hits):
    """Update the agent's observation; return the node if first visited."""
    node = ag.pos
    if move is None:
        ag.obs = _new_obs(Observation, (node, _REVISIT, None))
        return None
    if node in ag.visited:
        ag.obs = _new_obs(Observation, (node, _REVISIT, move))
        return None
    if marking and node in marks:
        hit = HitRecord(t, node, move, ag.program.phase)
        ag.hits.append(hit)
        hits.append((ag.label, hit))
        ag.obs = _new_obs(Observation, (node, _FOREIGN, move))
    else:
        ag.obs = _new_obs(Observation, (node, _DOMESTIC, move))
    ag.visited.add(node)
    return node


def _finish_meet(result, t, node, later_wake):
    result.met = True
    result.meet_round = t
    result.meet_node = node
    result.normalized_time = max(0, t - later_wake)


def _check_invariants(agents, old, marks, marking):
    for ag, prev in zip(agents, old):
        assert manhattan(ag.pos, prev) <= 1, f"agent {ag.label} jumped from {prev} to {ag.pos}"
        if marking:
            assert ag.visited <= marks, f"agent {ag.label} visited unmarked nodes"


def _collect(result: SimResult, agents) -> None:
    phases = []
    for ag in agents:
        prog = ag.program
        rep = AgentReport(base=ag.base, wake=ag.wake, hits=list(ag.hits), final_position=ag.pos)
        if ag.awake:
            rep.decision = prog.decision
            rep.halted = prog.halted
            rep.phase = prog.phase
            rep.decision_hits = getattr(prog, "decision_hits", None)
            traj = getattr(prog, "trajectory", None)
            if traj is not None:
                rep.trajectory_len = len(traj)
                rep.trajectory_width = traj.width
                rep.trajectory_height = traj.height
            if prog.phase is not None:
                phases.append(prog.phase)
        result.agents[ag.label] = rep
        result.action_of[ag.label] = rep.decision
    if phases:
        result.phases_completed = max(phases)


def replay_check(config: SimConfig) -> bool:
    """Run ``config`` twice with tracing on; True iff everything matches."""
    cfg = replace(config, record_trace=True)
    first, second = run(cfg), run(cfg)
    return trace_lines(first) == trace_lines(second) and first.summary() == second.summary()


def trace_lines(result: SimResult) -> list[str]:
    if result.trace is None:
        raise ValueError("run was made without record_trace")
    return [json.dumps(ev.to_json(), separators=(",", ":")) for ev in result.trace]


def write_trace(result: SimResult, fh) -> None:
    for line in trace_lines(result):
        fh.write(line + "\n")
