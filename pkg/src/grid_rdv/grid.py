"""Coordinates and compass directions on the infinite oriented grid.

Nodes are never allocated; a node is just a pair of integers. ``x`` grows
to the East and ``y`` grows to the North.
"""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple

# Python ints never wrap; this limit stands in for checked machine arithmetic.
COORD_LIMIT = 2**62


class CoordinateRangeError(OverflowError):
    pass


class Coord(NamedTuple):
    x: int
    y: int

    def __add__(self, other):  # type: ignore[override]
        return checked_coord(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return checked_coord(self.x - other[0], self.y - other[1])


def checked_coord(x: int, y: int) -> Coord:
    if not (-COORD_LIMIT <= x <= COORD_LIMIT and -COORD_LIMIT <= y <= COORD_LIMIT):
        raise CoordinateRangeError(f"coordinate ({x}, {y}) outside +/-2^62")
    return Coord(x, y)


class Orientation(Enum):
    HORIZONTAL = "H"
    VERTICAL = "V"


class Direction(Enum):
    """Compass direction; ``dx``, ``dy``, ``cw``, ``ccw``, ``opposite`` and
    ``orientation`` are plain attributes set below (enum hashing is slow)."""

    N = "N"
    E = "E"
    S = "S"
    W = "W"

    def __repr__(self):
        return f"Direction.{self.value}"

    @property
    def delta(self) -> tuple[int, int]:
        return (self.dx, self.dy)

    @classmethod
    def parse(cls, text: str) -> Direction:
        return cls(text.strip().upper())


N, E, S, W = Direction.N, Direction.E, Direction.S, Direction.W

for _d, (_dx, _dy), _cw, _ori in (
    (N, (0, 1), E, Orientation.VERTICAL),
    (E, (1, 0), S, Orientation.HORIZONTAL),
    (S, (0, -1), W, Orientation.VERTICAL),
    (W, (-1, 0), N, Orientation.HORIZONTAL),
):
    _d.dx, _d.dy, _d.cw, _d.orientation = _dx, _dy, _cw, _ori
for _d in Direction:
    _d.ccw = _d.cw.cw.cw
    _d.opposite = _d.cw.cw
del _d, _dx, _dy, _cw, _ori

_BY_DELTA = {d.delta: d for d in Direction}


def step(c: tuple[int, int], d: Direction) -> Coord:
    """Neighbor of ``c`` through port ``d``."""
    x = c[0] + d.dx
    y = c[1] + d.dy
    if -COORD_LIMIT <= x <= COORD_LIMIT and -COORD_LIMIT <= y <= COORD_LIMIT:
        return Coord(x, y)
    return checked_coord(x, y)


def direction_between(a: tuple[int, int], b: tuple[int, int]) -> Direction:
    """Port at ``a`` leading to the adjacent node ``b``."""
    try:
        return _BY_DELTA[(b[0] - a[0], b[1] - a[1])]
    except KeyError:
        raise ValueError(f"{a} and {b} are not adjacent") from None


def manhattan(a: tuple[int, int], b: tuple[int, int]) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def opposite(d: Direction) -> Direction:
    return d.opposite


def cw(d: Direction) -> Direction:
    return d.cw


def ccw(d: Direction) -> Direction:
    return d.ccw


def orientation(d: Direction) -> Orientation:
    return d.orientation


def neighbors(c: tuple[int, int]) -> dict[Direction, Coord]:
    return {d: step(c, d) for d in Direction}
