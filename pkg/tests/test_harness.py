import csv
import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from grid_rdv import programs
from grid_rdv.engine import SimConfig, run
from grid_rdv.grid import Coord, manhattan
from grid_rdv.harness import (
    CSV_COLUMNS,
    ORIGIN,
    SweepSpec,
    adversarial_delays,
    ceil_log2,
    check_run,
    fit_exponent,
    known_D_choices,
    no_marking_check,
    no_marking_run,
    proven_bound,
    placements,
    resolve_jobs,
    sweep,
    sweep_configs,
    write_csv,
)
from grid_rdv.programs import HardestScenario, KnownUpperBound, SimultaneousStart


def test_fit_exponent_exact_cases():
    assert fit_exponent({2: 4, 4: 16, 8: 64}) == pytest.approx(2.0, abs=1e-9)
    assert fit_exponent({2: 2, 4: 4, 8: 8}) == pytest.approx(1.0, abs=1e-9)
    assert fit_exponent({1: 3, 2: 24, 3: 81, 5: 375}) == pytest.approx(3.0, abs=1e-9)


@pytest.mark.parametrize("bad", [{2: 4, 4: 16}, {1: 1, 2: 0, 3: 9}, {0: 1, 1: 1, 2: 4}, {}])
def test_fit_exponent_rejects_degenerate(bad):
    with pytest.raises(ValueError):
        fit_exponent(bad)


@given(st.floats(0.5, 3.0), st.floats(0.1, 100.0))
def test_fit_exponent_recovers_power_laws(k, c):
    data = {d: c * d**k for d in (3, 5, 9, 17, 33)}
    assert fit_exponent(data) == pytest.approx(k, abs=1e-6)


def test_adversarial_delays_known():
    got = adversarial_delays(KnownUpperBound(4), (2, 1))
    assert {0, 1, 31, 32, 33, 64} <= set(got)
    assert got == sorted(set(got))


def test_adversarial_delays_hardest_pilot():
    p = Coord(1, -3)
    pilot = run(SimConfig(HardestScenario(), ORIGIN, p))
    assert pilot.agents["a"].hits[0].round == 17
    got = adversarial_delays(HardestScenario(), p)
    assert {16, 17, 18} <= set(got)
    assert got == sorted(set(got))


def test_adversarial_delays_simult():
    assert adversarial_delays(SimultaneousStart(), (3, 0)) == [0]


@pytest.mark.parametrize("dmax", [1, 2, 5, 8])
def test_placements(dmax):
    ps = placements(dmax)
    assert len(ps) == 2 * dmax * (dmax + 1)
    assert len(set(ps)) == len(ps)
    assert all(1 <= manhattan(ORIGIN, p) <= dmax for p in ps)
    assert all(manhattan(ORIGIN, p) >= 3 for p in placements(dmax + 3, 3))


def test_known_D_choices_and_configs():
    assert known_D_choices(1) == [1, 2]
    assert known_D_choices(3) == [3, 4, 6]
    cfgs = sweep_configs(SweepSpec("known", 1, range(3)))
    assert {c.scenario.D for c in cfgs} == {1, 2}
    assert all(c.wake_a == 0 and c.base_a == ORIGIN for c in cfgs)
    explicit = sweep_configs(SweepSpec("known", 2, (0,), D_values=[2], adversarial=False))
    assert {c.scenario.D for c in explicit} == {2} and len(explicit) == len(placements(2))


def test_ceil_log2():
    assert [ceil_log2(d) for d in (1, 2, 3, 4, 5, 8, 9, 64)] == [0, 1, 2, 2, 3, 3, 4, 6]


def test_proven_bounds():
    assert proven_bound(SimConfig(KnownUpperBound(5), ORIGIN, Coord(3, 0))) == 90
    assert proven_bound(SimConfig(HardestScenario(), ORIGIN, Coord(1, 0))) == 28
    assert proven_bound(SimConfig(SimultaneousStart(), ORIGIN, Coord(5, 0))) == 8 * 2 ** (3 + 2)


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("known", 0)
    with pytest.raises(ValueError):
        SweepSpec("hardest", 3, (-1,))
    with pytest.raises(ValueError):
        SweepSpec("hardest", 3, max_failures=10)


@pytest.mark.parametrize("scenario", [KnownUpperBound(1), SimultaneousStart(), HardestScenario()])
def test_no_marking_check(scenario):
    assert no_marking_check(scenario, 2000)
    out = no_marking_run(scenario, 500, (0, 1))
    assert out.ok and out.rounds == 500


@pytest.mark.parametrize("scenario", [KnownUpperBound(1), SimultaneousStart(), HardestScenario()])
def test_marks_on_contrast(scenario):
    res = run(SimConfig(scenario, ORIGIN, Coord(1, 0)))
    assert res.met and res.failure is None


def test_small_sweeps_are_clean():
    for spec in (SweepSpec("known", 3, range(10)), SweepSpec("simult", 6), SweepSpec("hardest", 3, range(8))):
        rep = sweep(spec)
        assert rep.ok and rep.runs > 0 and rep.unreachable == 0
        assert min(rep.bound_margin.values()) >= 0
        assert rep.decided_pairs == rep.differing_pairs or spec.scenario == "simult"


def test_sweep_independent_of_jobs():
    spec1 = SweepSpec("hardest", 2, range(4), jobs=1)
    spec2 = SweepSpec("hardest", 2, range(4), jobs=2)
    a, b = sweep(spec1), sweep(spec2)
    assert a.rows == b.rows
    assert a.max_normalized_time_by_distance == b.max_normalized_time_by_distance


def test_csv_output_columns():
    rep = sweep(SweepSpec("known", 2, (0, 5)))
    buf = io.StringIO()
    write_csv(rep, buf)
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    assert list(rows[0]) == CSV_COLUMNS == [
        "scenario", "dx", "dy", "distance", "delay", "D", "met", "meet_round",
        "normalized_time", "paper_bound", "margin", "action_a", "action_b", "phases", "crossings",
    ]
    assert len(rows) == rep.runs
    assert all(int(r["margin"]) >= 0 for r in rows)


def test_check_run_flags_a_corrupted_table(monkeypatch):
    monkeypatch.setattr(programs, "classify_table1", lambda hits, top: programs.DecisionAction.I)
    rep = sweep(SweepSpec("known", 2, range(20)))
    assert not rep.ok
    cfg, res, problems = rep.failures[0]
    assert problems and check_run(cfg, res) == problems


def test_failures_keep_at_least_100(monkeypatch):
    monkeypatch.setattr(programs, "classify_table3", lambda on_t: (_ for _ in ()).throw(
        programs.UnreachableInput("table3", "forced")))
    rep = sweep(SweepSpec("hardest", 6, range(3), adversarial=False))
    # runs that meet before the table is consulted stay clean
    assert rep.failure_count == rep.unreachable > 100
    assert len(rep.failures) >= 100


def test_resolve_jobs_env(monkeypatch):
    monkeypatch.setenv("GRID_RDV_JOBS", "3")
    assert resolve_jobs(None) == 3
    assert resolve_jobs(2) == 2
    assert resolve_jobs(0) == 1


def test_fitted_exponent_in_small_sweep():
    rep = sweep(SweepSpec("hardest", 8, (0,), distance_min=2))
    assert rep.fitted_exponent is not None
    assert 0.5 < rep.fitted_exponent < 2.5
    assert math.isfinite(rep.fitted_exponent)
