"""Model parsing, validation findings, and the concrete timed semantics."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest

from timedgames import fixtures, model as md
from timedgames.regions import ClockContext, ClockValuation, parse_constraint

MODELS = Path(__file__).resolve().parent.parent / "models"


def test_fixture_files_match_builders():
    for name, build in fixtures.FIXTURES.items():
        on_disk = md.load_model(str(MODELS / ("%s.model" % name)))
        assert on_disk == build(), name


def test_dump_parse_round_trip():
    for build in fixtures.FIXTURES.values():
        arena = build()
        assert md.parse_model(md.dump_model(arena)) == arena


def test_fixtures_validate_clean():
    for build in fixtures.FIXTURES.values():
        assert md.validate(build()) == []


def test_unreachable_variant_parses_and_validates():
    arena = md.load_model(str(MODELS / "M2-unreachable.model"))
    # structurally fine: the trouble it exists for is semantic (no path to
    # the final location), which is the solver's job to detect
    assert md.validate(arena) == []


# ----------------------------------------------------------------- parsing

def test_parse_rational():
    assert md.parse_rational("1/2") == Fraction(1, 2)
    assert md.parse_rational(3) == Fraction(3)
    assert md.parse_rational("7") == Fraction(7)
    for bad in (0.5, "0.5", "1e-3", True, None, "1/"):
        with pytest.raises(md.ModelError):
            md.parse_rational(bad)
    assert md.format_rational(Fraction(2)) == "2/1"
    assert md.format_rational(Fraction(1, 3)) == "1/3"


def _m1_text(**edits) -> str:
    arena = fixtures.one_shot()
    text = md.dump_model(arena)
    for old, new in edits.items():
        assert old in text
        text = text.replace(old, new)
    return text


def test_parse_rejects_float_probability():
    with pytest.raises(md.ModelError, match="float"):
        md.parse_model(_m1_text(**{"prob: 1/1": "prob: 0.5"}))


def test_parse_rejects_duplicate_source_action():
    text = _m1_text()
    dup = (
        "- source: l0\n"
        "  action: a\n"
        "  guard: c >= 1\n"
        "  branches:\n"
        "  - {prob: 1/1, resets: [], target: lf}\n"
    )
    text += "\n"  # dump ends without trailing blank line
    text = text.replace("edges:\n", "edges:\n" + dup)
    with pytest.raises(md.ModelError, match="share"):
        md.parse_model(text)


def test_parse_rejects_unknown_names():
    with pytest.raises(md.ModelError):
        md.parse_model(_m1_text(**{"target: lf": "target: nowhere"}))
    with pytest.raises(md.ModelError):
        md.parse_model(_m1_text(**{"guard: c >= 1 & c <= 2": "guard: d >= 1"}))
    with pytest.raises(md.ModelError):
        md.parse_model(_m1_text(**{"location: l0": "location: zz"}))


def test_parse_rejects_bad_bounds_and_k():
    with pytest.raises(md.ModelError):
        md.parse_model(_m1_text(**{"guard: c >= 1 & c <= 2": "guard: c >= 3"}))
    with pytest.raises(md.ModelError):
        md.parse_model(_m1_text(**{"k: 2": "k: 0"}))
    with pytest.raises(md.ModelError):
        md.parse_model(_m1_text(**{"k: 2": "k: 2.0"}))


def test_parse_rejects_nonpositive_probability():
    text = _m1_text(**{"prob: 1/1": "prob: 0/1"})
    with pytest.raises(md.ModelError, match="positive"):
        md.parse_model(text)


# -------------------------------------------------------------- validation

def test_validate_flags_probability_sum():
    arena = fixtures.retry()
    edges = list(arena.edges)
    a = edges[0]
    edges[0] = md.Edge(a.source, a.action, a.guard, (a.branches[0],))
    broken = md.Arena(arena.name, arena.ctx, arena.locations, tuple(edges), arena.initial)
    findings = md.validate(broken)
    assert any("sum to 1/2" in f for f in findings)


def test_validate_flags_zeno_cycle():
    # self-loop that neither resets nor waits: firing at c = 0 forever
    ctx = ClockContext(("c",), 2)
    arena = md.Arena(
        name="zeno",
        ctx=ctx,
        locations=(
            md.Location("l0", "min", False, parse_constraint("c <= 2", ctx)),
            md.Location("lf", "min", True, parse_constraint("true", ctx)),
        ),
        edges=(
            md.Edge("l0", "spin", parse_constraint("true", ctx),
                    (md.Branch(Fraction(1), frozenset(), "l0"),)),
            md.Edge("lf", "f", parse_constraint("c >= 1", ctx),
                    (md.Branch(Fraction(1), frozenset({"c"}), "lf"),)),
        ),
        initial=md.ConcreteState("l0", ClockValuation(ctx, (Fraction(0),))),
    )
    findings = md.validate(arena)
    assert any("Zeno" in f for f in findings)


def test_validate_flags_dead_region():
    # the guard is only satisfiable outside the invariant
    ctx = ClockContext(("c",), 2)
    arena = md.Arena(
        name="dead",
        ctx=ctx,
        locations=(
            md.Location("l0", "min", False, parse_constraint("c <= 1", ctx)),
            md.Location("lf", "min", True, parse_constraint("c <= 2", ctx)),
        ),
        edges=(
            md.Edge("l0", "a", parse_constraint("c = 2", ctx),
                    (md.Branch(Fraction(1), frozenset(), "lf"),)),
            md.Edge("lf", "f", parse_constraint("c >= 1", ctx),
                    (md.Branch(Fraction(1), frozenset({"c"}), "lf"),)),
        ),
        initial=md.ConcreteState("l0", ClockValuation(ctx, (Fraction(0),))),
    )
    findings = md.validate(arena)
    assert any("no action available" in f for f in findings)


def test_validate_flags_bad_initial():
    arena = fixtures.retry()
    bad = md.Arena(
        arena.name, arena.ctx, arena.locations, arena.edges,
        md.ConcreteState("l0", ClockValuation(arena.ctx, (Fraction(3, 2),))),
    )
    findings = md.validate(bad)
    assert any("invariant" in f for f in findings)


# ------------------------------------------------------- concrete semantics

def test_timed_action_allowed_m1():
    arena = fixtures.one_shot()
    s0 = arena.initial
    assert md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(1), "a"))
    assert md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(3, 2), "a"))
    assert md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(2), "a"))
    assert not md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(1, 2), "a"))
    assert not md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(5, 2), "a"))
    assert not md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(-1), "a"))
    assert not md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(1), "nope"))


def test_timed_action_blocked_by_invariant():
    # guard would allow c = 3/2 but the invariant caps the stay at c <= 1
    ctx = ClockContext(("c",), 2)
    arena = md.Arena(
        name="inv",
        ctx=ctx,
        locations=(
            md.Location("l0", "min", False, parse_constraint("c <= 1", ctx)),
            md.Location("lf", "min", True, parse_constraint("c <= 2", ctx)),
        ),
        edges=(
            md.Edge("l0", "a", parse_constraint("c >= 1", ctx),
                    (md.Branch(Fraction(1), frozenset(), "lf"),)),
            md.Edge("lf", "f", parse_constraint("c >= 1", ctx),
                    (md.Branch(Fraction(1), frozenset({"c"}), "lf"),)),
        ),
        initial=md.ConcreteState("l0", ClockValuation(ctx, (Fraction(0),))),
    )
    s0 = arena.initial
    assert md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(1), "a"))
    assert not md.timed_action_allowed(arena, s0, md.TimedAction(Fraction(3, 2), "a"))


def test_concrete_step_retry():
    arena = fixtures.retry()
    out = md.concrete_step(arena, arena.initial, md.TimedAction(Fraction(1), "a"))
    ctx = arena.ctx
    assert out == {
        md.ConcreteState("lf", ClockValuation(ctx, (Fraction(1),))): Fraction(1, 2),
        md.ConcreteState("l0", ClockValuation(ctx, (Fraction(0),))): Fraction(1, 2),
    }
    with pytest.raises(md.ModelError):
        md.concrete_step(arena, arena.initial, md.TimedAction(Fraction(1, 2), "a"))


def test_concrete_step_merges_equal_branches():
    ctx = ClockContext(("c",), 2)
    arena = md.Arena(
        name="merge",
        ctx=ctx,
        locations=(
            md.Location("l0", "min", False, parse_constraint("c <= 2", ctx)),
            md.Location("lf", "min", True, parse_constraint("c <= 2", ctx)),
        ),
        edges=(
            md.Edge("l0", "a", parse_constraint("c >= 1", ctx), (
                md.Branch(Fraction(1, 2), frozenset(), "lf"),
                md.Branch(Fraction(1, 2), frozenset(), "lf"),
            )),
            md.Edge("lf", "f", parse_constraint("c >= 1", ctx),
                    (md.Branch(Fraction(1), frozenset({"c"}), "lf"),)),
        ),
        initial=md.ConcreteState("l0", ClockValuation(ctx, (Fraction(0),))),
    )
    out = md.concrete_step(arena, arena.initial, md.TimedAction(Fraction(1), "a"))
    assert out == {
        md.ConcreteState("lf", ClockValuation(ctx, (Fraction(1),))): Fraction(1),
    }
