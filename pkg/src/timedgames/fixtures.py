"""Small example games used throughout the tests and scripts.

M1   one guarded jump: wait into 1 <= c <= 2, then move to the final
     location.  Minimizer fires as early as possible, expected time 1.
M1x  the same automaton with the first location owned by the maximizer,
     who waits until c = 2; expected time 2.
M2   retry loop: firing at c = 1 succeeds with probability 1/2 and
     otherwise resets the clock and tries again; expected time 2.
M3   min/max handoff: the failed branch of M2 hands control to a
     maximizer location that must move within one unit; value 3/2.

The same games live under models/ in the file format; a test keeps the two
copies in sync.
"""

from __future__ import annotations

from fractions import Fraction

from .model import Arena, Branch, ConcreteState, Edge, Location
from .regions import ClockContext, ClockValuation, parse_constraint

__all__ = ["FIXTURES", "one_shot", "one_shot_max", "retry", "retry_handoff"]


def _ctx1() -> ClockContext:
    return ClockContext(("c",), 2)


def _initial(ctx: ClockContext) -> ConcreteState:
    return ConcreteState("l0", ClockValuation(ctx, (Fraction(0),) * len(ctx.clocks)))


def one_shot(owner: str = "min") -> Arena:
    ctx = _ctx1()
    le2 = parse_constraint("c <= 2", ctx)
    return Arena(
        name="M1" if owner == "min" else "M1x",
        ctx=ctx,
        locations=(
            Location("l0", owner, False, le2),
            Location("lf", "min", True, le2),
        ),
        edges=(
            Edge("l0", "a", parse_constraint("c >= 1 & c <= 2", ctx),
                 (Branch(Fraction(1), frozenset(), "lf"),)),
            Edge("lf", "f", parse_constraint("c >= 1", ctx),
                 (Branch(Fraction(1), frozenset({"c"}), "lf"),)),
        ),
        initial=_initial(ctx),
    )


def one_shot_max() -> Arena:
    return one_shot(owner="max")


def retry() -> Arena:
    ctx = _ctx1()
    return Arena(
        name="M2",
        ctx=ctx,
        locations=(
            Location("l0", "min", False, parse_constraint("c <= 1", ctx)),
            Location("lf", "min", True, parse_constraint("c <= 2", ctx)),
        ),
        edges=(
            Edge("l0", "a", parse_constraint("c = 1", ctx), (
                Branch(Fraction(1, 2), frozenset(), "lf"),
                Branch(Fraction(1, 2), frozenset({"c"}), "l0"),
            )),
            Edge("lf", "f", parse_constraint("c >= 1", ctx),
                 (Branch(Fraction(1), frozenset({"c"}), "lf"),)),
        ),
        initial=_initial(ctx),
    )


def retry_handoff() -> Arena:
    ctx = _ctx1()
    return Arena(
        name="M3",
        ctx=ctx,
        locations=(
            Location("l0", "min", False, parse_constraint("c <= 1", ctx)),
            Location("l1", "max", False, parse_constraint("c <= 1", ctx)),
            Location("lf", "min", True, parse_constraint("c <= 2", ctx)),
        ),
        edges=(
            Edge("l0", "a", parse_constraint("c = 1", ctx), (
                Branch(Fraction(1, 2), frozenset(), "lf"),
                Branch(Fraction(1, 2), frozenset({"c"}), "l1"),
            )),
            Edge("l1", "b", parse_constraint("c >= 0 & c <= 1", ctx),
                 (Branch(Fraction(1), frozenset(), "lf"),)),
            Edge("lf", "f", parse_constraint("c >= 1", ctx),
                 (Branch(Fraction(1), frozenset({"c"}), "lf"),)),
        ),
        initial=_initial(ctx),
    )


FIXTURES = {
    "M1": one_shot,
    "M1x": one_shot_max,
    "M2": retry,
    "M3": retry_handoff,
}
