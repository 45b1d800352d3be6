"""Simulation tests with exactly predictable outcomes.

The certified strategies of the bundled games concretize to delays that are
computable by hand:

  M1   the chosen move is the infimum endpoint of the open window into
       1 < c < 2 (it ties the thin move at value 1 and sorts first), so a
       run takes the single step 1 + eps; with eps = 1/1000 every run costs
       exactly 1001/1000.
  M1x  the maximizer's move is the supremum endpoint of the same window,
       approached from below: every run costs 1999/1000.
  M2   the only move is thin (c = 1), so delays are exact and a run's total
       time equals its number of rounds, geometric with mean 2.

The window into 1 < c < 2 from c = 0 is (1, 2): with eps = 1/8 the inf move
concretizes to 9/8 and the sup move to 15/8, and an oversized eps = 2 clamps
both to the midpoint 3/2.
"""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from timedgames.brg import BoundaryAction, boundary_actions, explore
from timedgames.fixtures import one_shot, one_shot_max, retry
from timedgames.regions import ClockValuation, region_of
from timedgames.simulate import (
    ConcretizedStrategy,
    StrategyGapError,
    concretize_action,
    estimate_value,
    simulate_run,
)
from timedgames.solver import solve_exact


def solved(arena):
    g = explore(arena)
    res = solve_exact(g)
    return g, res, ConcretizedStrategy.from_solution(g, res.choice)


def val(arena, x) -> ClockValuation:
    return ClockValuation(arena.ctx, (Fraction(x),))


def test_concretize_endpoints_and_clamp():
    m1 = one_shot()
    zero = val(m1, 0)
    acts = boundary_actions(m1, "l0", region_of(zero))
    labels = [a.label() for a in acts]
    assert labels == [
        "a at c=1 in [1<c<2]",
        "a at c=1 in [c=1]",
        "a at c=2 in [1<c<2]",
        "a at c=2 in [c=2]",
    ]
    eps = Fraction(1, 8)
    assert concretize_action(zero, acts[0], eps) == Fraction(9, 8)
    assert concretize_action(zero, acts[1], eps) == 1
    assert concretize_action(zero, acts[2], eps) == Fraction(15, 8)
    assert concretize_action(zero, acts[3], eps) == 2
    assert concretize_action(zero, acts[0], Fraction(2)) == Fraction(3, 2)
    assert concretize_action(zero, acts[2], Fraction(2)) == Fraction(3, 2)


def test_concretize_fire_now_and_past_boundary():
    m1 = one_shot()
    at = val(m1, "5/4")
    acts = boundary_actions(m1, "l0", region_of(at))
    assert acts[0].label() == "a now in [1<c<2]"
    assert concretize_action(at, acts[0], Fraction(1, 1000)) == 0
    past = BoundaryAction("a", region_of(val(m1, "1/2")), 1, "c")
    with pytest.raises(StrategyGapError, match="past"):
        concretize_action(at, past, Fraction(1, 1000))


def test_strategy_table_picks_certified_moves():
    m1 = one_shot()
    _, _, strat = solved(m1)
    act = strat.action_for("l0", region_of(val(m1, 0)))
    assert act.label() == "a at c=1 in [1<c<2]"
    m1x = one_shot_max()
    _, _, stratx = solved(m1x)
    actx = stratx.action_for("l0", region_of(val(m1x, 0)))
    assert actx.label() == "a at c=2 in [1<c<2]"


def test_strategy_gap_raises():
    m1 = one_shot()
    empty = ConcretizedStrategy(m1, {})
    with pytest.raises(StrategyGapError, match="no move"):
        empty.action_for("l0", region_of(val(m1, 0)))


def test_m1_runs_cost_exactly_one_plus_eps():
    m1 = one_shot()
    _, _, strat = solved(m1)
    est = estimate_value(m1, strat, 50, seed=9)
    assert est.reached == 50
    assert est.mean_exact == Fraction(1001, 1000)
    assert est.halfwidth == 0.0


def test_m1_decaying_eps_halves_first_step():
    m1 = one_shot()
    _, _, strat = solved(m1)
    rec = simulate_run(m1, strat, random.Random(0), decaying=True)
    assert rec.reached
    assert rec.total_time == 1 + Fraction(1, 2000)


def test_m1x_runs_cost_exactly_two_minus_eps():
    m1x = one_shot_max()
    _, _, strat = solved(m1x)
    est = estimate_value(m1x, strat, 50, seed=9)
    assert est.reached == 50
    assert est.mean_exact == Fraction(1999, 1000)


def test_m2_estimate_matches_value():
    m2 = retry()
    _, res, strat = solved(m2)
    assert res.values[0] == 2
    est = estimate_value(m2, strat, 2000, seed=42)
    assert est.reached == 2000
    assert est.halfwidth < 0.1
    assert abs(est.mean - 2.0) <= 3 * est.halfwidth
    again = estimate_value(m2, strat, 2000, seed=42)
    assert again.mean_exact == est.mean_exact


def test_m2_run_times_are_round_counts():
    m2 = retry()
    _, _, strat = solved(m2)
    rng = random.Random(3)
    for _ in range(20):
        rec = simulate_run(m2, strat, rng, record_trace=True)
        assert rec.reached
        assert rec.total_time == rec.steps
        assert len(rec.trace) == rec.steps
        assert all(t == 1 for _, _, t in rec.trace)


def test_step_cap_cuts_runs():
    m2 = retry()
    _, _, strat = solved(m2)
    est = estimate_value(m2, strat, 1000, seed=5, step_cap=1)
    assert 0.35 < est.unreached_fraction < 0.65
    # every surviving run succeeded on its first try, at time exactly 1
    assert est.mean_exact == 1


def test_no_reached_runs_reports_nan():
    m2 = retry()
    _, _, strat = solved(m2)
    est = estimate_value(m2, strat, 5, seed=5, step_cap=0)
    assert est.reached == 0
    assert est.mean_exact is None
    assert est.mean != est.mean  # nan
    assert est.unreached_fraction == 1.0
