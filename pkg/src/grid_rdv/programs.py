"""Agent programs for mark-based rendezvous on the oriented grid.

A program is a resumable state machine. Each round the engine hands it an
:class:`Observation` of where it stands and how it got there, and the program
answers with one action: a :class:`~grid_rdv.grid.Direction` to move, or
:data:`STAY`, or :data:`HALT`. Programs see nothing else, in particular no
global clock and nothing about the other agent except through hits.

Instruction streams (``go_script``, ``cross_script`` ...) are plain iterators
of actions; the algorithm classes splice them together inside a generator.
They are consumed with ``for`` loops, never ``yield from``: the latter would
forward ``send()`` into iterators that do not support it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, NamedTuple, Optional, Sequence, Union

from .grid import (
    Coord,
    Direction,
    Orientation,
    E,
    N,
    S,
    W,
    direction_between,
    step,
)


class Idle(Enum):
    STAY = "stay"
    HALT = "halt"


STAY = Idle.STAY
HALT = Idle.HALT

Action = Union[Direction, Idle]


class VisitClass(Enum):
    DOMESTIC = "domestic"
    FOREIGN = "foreign"
    REVISIT = "revisit"


_FOREIGN = VisitClass.FOREIGN


class DecisionAction(Enum):
    I = "I"  # noqa: E741
    II = "II"

    def __str__(self):
        return self.value


class UnreachableInput(Exception):
    """A decision table got an input none of its rows covers.

    The correctness arguments exclude these inputs, so reaching one means a
    claimed property is false (or the engine is broken).
    """

    def __init__(self, table: str, details: str):
        super().__init__(f"{table}: no row matches {details}")
        self.table = table
        self.details = details


class Observation(NamedTuple):
    node: Coord
    visit_class: VisitClass
    moved: Optional[Direction] = None


@dataclass(frozen=True)
class HitRecord:
    round: int
    node: Coord
    dir: Direction
    phase: Optional[int] = None


# -- scenarios ---------------------------------------------------------------


@dataclass(frozen=True)
class KnownUpperBound:
    D: int
    name = "known"

    def __post_init__(self):
        if self.D < 1:
            raise ValueError(f"D must be positive, got {self.D}")


@dataclass(frozen=True)
class SimultaneousStart:
    name = "simult"


@dataclass(frozen=True)
class HardestScenario:
    name = "hardest"


ScenarioChoice = Union[KnownUpperBound, SimultaneousStart, HardestScenario]


# -- instruction streams -----------------------------------------------------

CROSS_LEGS = (W, E, N, S, E, W, S, N)


def go_script(d: Direction, x: int) -> Iterator[Direction]:
    if x < 1:
        raise ValueError(f"go needs a positive round count, got {x}")
    return itertools.repeat(d, x)


def cross_script(x: int) -> Iterator[Direction]:
    if x < 1:
        raise ValueError(f"cross needs a positive radius, got {x}")
    for d in CROSS_LEGS:
        yield from go_script(d, x)


def squarespiral_script() -> Iterator[Direction]:
    """Counterclockwise square spiral: N, W for 2p-1 steps, S, E for 2p."""
    for p in itertools.count(1):
        yield from go_script(N, 2 * p - 1)
        yield from go_script(W, 2 * p - 1)
        yield from go_script(S, 2 * p)
        yield from go_script(E, 2 * p)


def arm_path(base: tuple[int, int], target: tuple[int, int]) -> list[Direction]:
    """Straight run from ``base`` to an axis-aligned ``target``."""
    dx, dy = target[0] - base[0], target[1] - base[1]
    if dx and dy:
        raise ValueError(f"{target} is not on an axis through {base}")
    if dx:
        return [E if dx > 0 else W] * abs(dx)
    return [N if dy > 0 else S] * abs(dy)


class Trajectory:
    """A walk on the grid, stays excluded."""

    def __init__(self, nodes: Sequence[tuple[int, int]]):
        if not nodes:
            raise ValueError("trajectory needs at least its base node")
        self.nodes = [Coord(*n) for n in nodes]
        for a, b in zip(self.nodes, self.nodes[1:]):
            direction_between(a, b)  # raises on a non-adjacent pair
        xs = [n.x for n in self.nodes]
        ys = [n.y for n in self.nodes]
        self.width = max(xs) - min(xs)
        self.height = max(ys) - min(ys)
        self._members = frozenset(self.nodes)

    def __len__(self):
        """Number of edges."""
        return len(self.nodes) - 1

    def __contains__(self, node):
        return node in self._members

    @property
    def last(self) -> Coord:
        return self.nodes[-1]

    @property
    def pred(self) -> Coord:
        if len(self.nodes) < 2:
            raise ValueError("single-node trajectory has no predecessor")
        return self.nodes[-2]

    def neighbor_membership(self) -> dict[Direction, bool]:
        u = self.last
        return {d: step(u, d) in self._members for d in (W, S, E, N)}

    def reversed(self) -> Trajectory:
        return Trajectory(self.nodes[::-1])


@dataclass(frozen=True)
class TrajectoryStats:
    width: int
    height: int
    pred: Coord
    on_trajectory: dict


def trajectory_stats(t: Trajectory) -> TrajectoryStats:
    return TrajectoryStats(t.width, t.height, t.pred, t.neighbor_membership())


def predecessor_probe_script(
    t: Trajectory, u: tuple[int, int], hit_dir: Direction
) -> Iterator[Action]:
    if Coord(*u) != t.last:
        raise ValueError("probe must start at the last node of the trajectory")
    wait = t.height if hit_dir.orientation is Orientation.HORIZONTAL else t.width
    yield from itertools.repeat(STAY, wait)
    back = direction_between(u, t.pred)
    yield back
    yield back.opposite


def swing_script(t: Trajectory) -> Iterator[Direction]:
    """Walk the trajectory backwards to its base and forwards again, forever."""
    forward = [direction_between(a, b) for a, b in zip(t.nodes, t.nodes[1:])]
    backward = [d.opposite for d in reversed(forward)]
    if not forward:
        return
    while True:
        yield from backward
        yield from forward


# -- decision tables ---------------------------------------------------------


def _describe(hits: Sequence[HitRecord]) -> str:
    return "[" + ", ".join(f"{h.dir.value}@({h.node.x},{h.node.y})" for h in hits) + "]"


def classify_table1(hits: Sequence[HitRecord], northmost_visited: tuple[int, int]) -> DecisionAction:
    """Decision after the first cross(D) of the known-bound algorithm."""
    if not hits:
        return DecisionAction.I
    dirs = [h.dir for h in hits]
    kinds = {d.orientation for d in dirs}
    if len(hits) == 2 and len(kinds) == 2:
        return DecisionAction.II
    if all(d is S for d in dirs):
        return DecisionAction.II
    if all(d is N for d in dirs):
        return DecisionAction.I
    if kinds == {Orientation.HORIZONTAL}:
        return DecisionAction.II if dirs[0] is E else DecisionAction.I
    if kinds == {Orientation.VERTICAL}:
        # heterogeneous here; condition C is an N-hit at the North-most node
        c = any(h.dir is N and h.node == northmost_visited for h in hits)
        return DecisionAction.I if c else DecisionAction.II
    raise UnreachableInput("table1", _describe(hits))


def classify_table2(hits: Sequence[HitRecord]) -> DecisionAction:
    """Decision at the start of a phase, from the previous phase's hits."""
    if not hits:
        return DecisionAction.I
    dirs = {h.dir for h in hits}
    kinds = {d.orientation for d in dirs}
    if len(hits) == 2 and len(kinds) == 2:
        return DecisionAction.II
    if len(dirs) == 1:
        (d,) = dirs
        return DecisionAction.II if d in (S, E) else DecisionAction.I
    raise UnreachableInput("table2", _describe(hits))


def classify_table3(on_t: dict[Direction, bool]) -> DecisionAction:
    """Decision from which neighbors of the hit node lie on the main trajectory."""
    w, s, e, n = (bool(on_t[d]) for d in (W, S, E, N))
    if not w and s and not n:
        return DecisionAction.II
    if not s and not e and n:
        return DecisionAction.I
    if not w and not s and e:
        return DecisionAction.I
    if w and not e and not n:
        return DecisionAction.II
    bits = "".join(f"{d.value}={int(on_t[d])}" for d in (W, S, E, N))
    raise UnreachableInput("table3", bits)


# -- algorithms --------------------------------------------------------------


class AgentProgram:
    """Base class: bookkeeping shared by all three algorithms.

    Subclasses implement ``_script(first_obs)`` as a generator that yields
    actions and receives the next observation from each ``yield``.
    """

    def __init__(self):
        self.local_round = 0
        self.position: Optional[Coord] = None
        self.hits: list[HitRecord] = []
        self.decision: Optional[DecisionAction] = None
        self.phase: Optional[int] = None
        self.halted = False
        self._gen = None

    def act(self, obs: Observation) -> Action:
        if self.halted:
            return HALT
        self.position = obs[0]
        if obs[1] is _FOREIGN:
            self.hits.append(HitRecord(self.local_round, obs[0], obs[2], self.phase))
        gen = self._gen
        if gen is None:
            gen = self._gen = self._script(obs)
            action = next(gen)
        else:
            action = gen.send(obs)
        self.local_round += 1
        if action is HALT:
            self.halted = True
        return action

    def _script(self, obs: Observation):
        raise NotImplementedError

    @property
    def decided(self) -> bool:
        return self.decision is not None

    def _halt_at_first_hit(self, base):
        if not self.hits:
            # only a broken table can ask for this
            raise UnreachableInput("action II", "no foreign node has been visited")
        for d in arm_path(base, self.hits[0].node):
            yield d
        yield HALT


class KnownUpperBoundProgram(AgentProgram):
    def __init__(self, D: int):
        if D < 1:
            raise ValueError(f"D must be positive, got {D}")
        super().__init__()
        self.D = D
        self.decision_hits: list[HitRecord] = []

    def _script(self, obs):
        base = obs.node
        northmost = base
        for d in cross_script(self.D):
            obs = yield d
            if obs.node.y > northmost.y:
                northmost = obs.node
        self.decision_hits = list(self.hits)
        self.decision = classify_table1(self.decision_hits, northmost)
        if self.decision is DecisionAction.II:
            yield from self._halt_at_first_hit(base)
        while True:
            for d in cross_script(self.D):
                yield d


class SimultaneousStartProgram(AgentProgram):
    def __init__(self):
        super().__init__()
        self.phase = 0
        self.phase_decisions: list[DecisionAction] = []

    def _script(self, obs):
        base = obs.node
        previous: list[HitRecord] = []
        for i in itertools.count():
            self.phase = i
            self.decision = classify_table2(previous)
            self.phase_decisions.append(self.decision)
            if self.decision is DecisionAction.II:
                yield from self._halt_at_first_hit(base)
            start = len(self.hits)
            for d in cross_script(2**i):
                yield d
            previous = self.hits[start:]


class HardestScenarioProgram(AgentProgram):
    def __init__(self):
        super().__init__()
        self.trajectory: Optional[Trajectory] = None
        self.hit_dir: Optional[Direction] = None

    def _script(self, obs):
        nodes = [obs.node]
        for d in squarespiral_script():
            obs = yield d
            nodes.append(obs.node)
            if obs.visit_class is VisitClass.FOREIGN:
                break
        t = Trajectory(nodes)
        self.trajectory = t
        self.hit_dir = obs.moved
        for a in predecessor_probe_script(t, t.last, obs.moved):
            yield a
        self.decision = classify_table3(t.neighbor_membership())
        if self.decision is DecisionAction.II:
            yield HALT
        for d in swing_script(t):
            yield d


def known_upper_bound_program(D: int) -> KnownUpperBoundProgram:
    return KnownUpperBoundProgram(D)


def simultaneous_start_program() -> SimultaneousStartProgram:
    return SimultaneousStartProgram()


def hardest_scenario_program() -> HardestScenarioProgram:
    return HardestScenarioProgram()


def make_program(scenario: ScenarioChoice) -> AgentProgram:
    if isinstance(scenario, KnownUpperBound):
        return KnownUpperBoundProgram(scenario.D)
    if isinstance(scenario, SimultaneousStart):
        return SimultaneousStartProgram()
    if isinstance(scenario, HardestScenario):
        return HardestScenarioProgram()
    raise TypeError(f"unknown scenario {scenario!r}")


def parse_scenario(name: str, D: Optional[int] = None) -> ScenarioChoice:
    name = name.strip().lower()
    if name in ("known", "known_upper_bound", "kub"):
        if D is None:
            raise ValueError("the known scenario needs D")
        return KnownUpperBound(D)
    if name in ("simult", "simultaneous", "simultaneous_start"):
        return SimultaneousStart()
    if name in ("hardest", "hardest_scenario"):
        return HardestScenario()
    raise ValueError(f"unknown scenario {name!r}")
