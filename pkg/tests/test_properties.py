"""Property-layer tests against hand-computed value functions.

Closed forms used as oracles, each derived from the optimality equations:

  M1   V(l0, x) = 1 - x on [0, 1], and 0 on [1, 2] (fire immediately).
  M1x  V(l0, x) = 2 - x on [0, 2] (maximizer waits until c = 2).
  M2   V(l0, 0) = 1 + (1/2) V(l0, 0) so V(l0, 0) = 2, and from x the wait
       to c = 1 costs 1 - x, so V(l0, x) = 2 - x on [0, 1].
  M3   V(l1, y) = 1 - y (maximizer delays to c = 1, then must move);
       V(l0, x) = (1 - x) + (1/2) V(l1, 0) = 3/2 - x on [0, 1].

3/2 - x is affine with slope -1 but its offset is not an integer, so the
integer-offset fit must reject it; that asymmetry between M2 and M3 is the
point of several tests below.
"""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from timedgames.fixtures import one_shot, one_shot_max, retry, retry_handoff
from timedgames.model import ConcreteState
from timedgames.properties import (
    _rooted_value,
    check_quasi_simple,
    check_time_monotone,
    fit_simple,
    grid_one_step_value,
    sample_states,
    value_at,
)
from timedgames.regions import ClockValuation, region_of
from timedgames.solver import SimpleForm

M1 = one_shot()
M1X = one_shot_max()
M2 = retry()
M3 = retry_handoff()


def val(arena, x) -> ClockValuation:
    return ClockValuation(arena.ctx, (Fraction(x),))


def reg(arena, x):
    return region_of(val(arena, x))


def test_value_at_m2_midpoint():
    assert value_at(M2, "l0", val(M2, "1/2")) == Fraction(3, 2)


def test_value_closed_forms_on_grid():
    for j in range(17):
        x = Fraction(j, 8)
        expect = Fraction(1) - x if x <= 1 else Fraction(0)
        assert value_at(M1, "l0", val(M1, x)) == expect
        assert value_at(M1X, "l0", val(M1X, x)) == 2 - x
    for j in range(9):
        x = Fraction(j, 8)
        assert value_at(M2, "l0", val(M2, x)) == 2 - x
        assert value_at(M3, "l0", val(M3, x)) == Fraction(3, 2) - x
        assert value_at(M3, "l1", val(M3, x)) == 1 - x


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=64))
def test_value_m1_affine_everywhere(n):
    x = Fraction(n, 64)
    assert value_at(M1, "l0", val(M1, x)) == 1 - x


def test_value_at_is_cached():
    v = val(M2, "3/8")
    value_at(M2, "l0", v)
    hits = _rooted_value.cache_info().hits
    value_at(M2, "l0", v)
    assert _rooted_value.cache_info().hits == hits + 1


def test_fit_simple_slope_forms():
    assert fit_simple(M1, "l0", reg(M1, "1/2")) == SimpleForm(1, "c")
    assert fit_simple(M1X, "l0", reg(M1X, "1/2")) == SimpleForm(2, "c")
    assert fit_simple(M2, "l0", reg(M2, "1/2")) == SimpleForm(2, "c")
    assert fit_simple(M3, "l1", reg(M3, "1/2")) == SimpleForm(1, "c")


def test_fit_simple_constant_regions():
    assert fit_simple(M1, "l0", reg(M1, "3/2")) == SimpleForm(0, None)
    assert fit_simple(M1, "lf", reg(M1, "1/2")) == SimpleForm(0, None)
    # on a thin region every sample coincides, so the constant wins
    assert fit_simple(M1, "l0", reg(M1, 1)) == SimpleForm(0, None)


def test_fit_simple_rejects_fractional_offset():
    assert fit_simple(M3, "l0", reg(M3, "1/2")) is None


def test_fit_simple_rejects_other_slopes():
    steep = lambda loc, v: 2 - 2 * v.value("c")
    assert fit_simple(M1, "l0", reg(M1, "1/2"), evaluator=steep) is None


CLEAN_CASES = [
    (M1, "l0", "1/2"),
    (M1, "l0", "3/2"),
    (M1X, "l0", "1/2"),
    (M2, "l0", "1/2"),
    (M3, "l0", "1/2"),
    (M3, "l1", "1/2"),
]


@pytest.mark.parametrize("arena,loc,x", CLEAN_CASES)
def test_quasi_simple_clean(arena, loc, x):
    report = check_quasi_simple(arena, loc, reg(arena, x), pairs=80, seed=5)
    assert report.ok, report.summary()
    assert report.pairs_checked == 80
    assert report.diag_pairs_checked == 80
    assert report.max_lipschitz_ratio <= report.k_bound


def test_quasi_simple_slope_is_tight():
    # V = 1 - x makes every pair hit the Lipschitz and shift bounds exactly
    report = check_quasi_simple(M1, "l0", reg(M1, "1/2"), pairs=60, seed=1)
    assert report.max_lipschitz_ratio == 1


def test_quasi_simple_point_region_is_vacuous():
    report = check_quasi_simple(M1, "l0", reg(M1, 0), pairs=10, seed=2)
    assert report.ok
    assert report.pairs_checked == 0
    assert report.diag_pairs_checked == 0


def test_quasi_simple_detects_planted_fault():
    # adding nu(c)^2 keeps continuity but breaks monotone decrease, and on
    # [1, 2] the difference quotient reaches x + y > 2 = K
    bent = lambda loc, v: value_at(M1, loc, v) + v.value("c") ** 2
    report = check_quasi_simple(M1, "lf", reg(M1, "3/2"), pairs=60, seed=7,
                                evaluator=bent)
    assert not report.ok
    assert report.monotonicity_violations
    assert report.lipschitz_violations
    assert report.max_lipschitz_ratio > report.k_bound


def test_time_monotone_clean():
    state = ConcreteState("l0", val(M1, 0))
    assert check_time_monotone(M1, state, "a", reg(M1, "3/2"), grid=12) == []
    # a thin target admits one delay only
    assert check_time_monotone(M1, state, "a", reg(M1, 1)) == []


def test_time_monotone_detects_decreasing_evaluator():
    sink = lambda loc, v: -2 * v.value("c")
    state = ConcreteState("l0", val(M1, 0))
    bad = check_time_monotone(M1, state, "a", reg(M1, "3/2"), grid=8,
                              evaluator=sink)
    assert bad
    t1, t2, f1, f2 = bad[0]
    assert t1 < t2 and f2 < f1


def test_time_monotone_rejects_bad_inputs():
    state = ConcreteState("l0", val(M1, 0))
    with pytest.raises(ValueError, match="no edge"):
        check_time_monotone(M1, state, "zzz", reg(M1, "3/2"))
    with pytest.raises(ValueError, match="not enabled"):
        check_time_monotone(M1, state, "a", reg(M1, "1/2"))
    late = ConcreteState("l0", val(M1, "3/2"))
    with pytest.raises(ValueError, match="future"):
        check_time_monotone(M1, late, "a", reg(M1, 1))


def test_grid_one_step_matches_exact_value():
    cases = [
        (M1, ConcreteState("l0", val(M1, 0))),
        (M1X, ConcreteState("l0", val(M1X, 0))),
        (M2, ConcreteState("l0", val(M2, "1/2"))),
        (M3, ConcreteState("l1", val(M3, "1/4"))),
    ]
    for arena, state in cases:
        g = grid_one_step_value(arena, state)
        assert g == value_at(arena, state.location, state.valuation)


def test_grid_refinement_never_degrades():
    for state in sample_states(M2, 4, seed=3):
        exact = value_at(M2, state.location, state.valuation)
        gap64 = abs(grid_one_step_value(M2, state, denominator=64) - exact)
        gap256 = abs(grid_one_step_value(M2, state, denominator=256) - exact)
        assert gap256 <= gap64


def test_sample_states_deterministic_and_legal():
    a = sample_states(M3, 6, seed=11)
    b = sample_states(M3, 6, seed=11)
    assert a == b
    assert len(a) == 6
    for loc, v in a:
        assert not M3.is_final(loc)
        assert all(0 <= x <= M3.ctx.k for x in v.values)
