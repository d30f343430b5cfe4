"""Deterministic rendezvous of two anonymous mark-leaving agents on the
infinite oriented grid: agent programs, a lockstep simulator and an
adversary sweep harness."""

from .engine import SimConfig, SimResult, replay_check, run
from .grid import Coord, Direction, manhattan, step
from .programs import (
    DecisionAction,
    HardestScenario,
    KnownUpperBound,
    SimultaneousStart,
    UnreachableInput,
)

__all__ = [
    "Coord",
    "DecisionAction",
    "Direction",
    "HardestScenario",
    "KnownUpperBound",
    "SimConfig",
    "SimResult",
    "SimultaneousStart",
    "UnreachableInput",
    "manhattan",
    "replay_check",
    "run",
    "step",
]
