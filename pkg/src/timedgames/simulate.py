"""Monte Carlo play of a solved game against its own certified strategies.

The solver's choice vector picks one abstract move per graph node.  Abstract
moves name a boundary instant, which a concrete run cannot always hit: an
infimum or supremum of an open delay window is approached, not attained.
`concretize_action` turns the abstract move into an exact rational delay,
stepping epsilon inside the window on the correct side, so a simulated run
costs at most epsilon more (minimizer) or less (maximizer) per step than the
abstract move.  With `decaying=True` the slack at step n is epsilon/2^(n+1),
keeping the total drift of an arbitrarily long run under epsilon.

Strategies are keyed by (location, region): every valuation a run can reach
inside one region shares its action set, so the table built from the first
explored node per key plays from any point of the region's closure.  When
several nodes share a key with genuinely different optimal moves the table
keeps the first, which can cost accuracy on models beyond the bundled ones;
the run legality check guards the delays themselves either way.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .brg import BoundaryAction, Brg
from .model import Arena, ConcreteState, TimedAction, timed_action_allowed
from .regions import ClockRegion, ClockValuation, delay_window, region_of


class StrategyGapError(Exception):
    """The strategy table has no move for a reached (location, region)."""


@dataclass(frozen=True)
class ConcretizedStrategy:
    arena: Arena
    table: dict

    @classmethod
    def from_solution(cls, g: Brg, choice) -> "ConcretizedStrategy":
        table = {}
        for i, s in enumerate(g.states):
            if choice[i] is None:
                continue
            key = (s.location, s.region.key())
            if key not in table:
                table[key] = g.actions[i][choice[i]]
        return cls(g.arena, table)

    def action_for(self, location: str, region: ClockRegion) -> BoundaryAction:
        try:
            return self.table[(location, region.key())]
        except KeyError:
            raise StrategyGapError(
                "no move for %s in [%s]" % (location, region.label())
            ) from None


def concretize_action(
    valuation: ClockValuation, act: BoundaryAction, epsilon: Fraction
) -> Fraction:
    """An exact delay realizing the abstract move from this valuation.

    Fire-now and thin-boundary moves are exact.  A move naming an endpoint
    of an open window steps epsilon inside it, clamped to half the window
    so the delay always lands in the target region.
    """
    if act.b is None:
        return Fraction(0)
    t0 = act.b - valuation.value(act.c)
    if t0 < 0:
        raise StrategyGapError(
            "boundary %s=%d lies in the past of %s"
            % (act.c, act.b, dict(valuation.as_dict()))
        )
    if region_of(valuation.shift(t0)) == act.target:
        return t0
    w = delay_window(valuation, act.target)
    if w is None:
        raise StrategyGapError(
            "[%s] is not reachable by delay from %s"
            % (act.target.label(), dict(valuation.as_dict()))
        )
    delta = min(Fraction(epsilon), (w.hi - w.lo) / 2)
    if t0 == w.hi:
        return t0 - delta
    if t0 == w.lo:
        return t0 + delta
    raise AssertionError("boundary instant %s is not an endpoint of the window" % t0)


@dataclass(frozen=True)
class RunRecord:
    reached: bool
    total_time: Fraction
    steps: int
    last: ConcreteState
    trace: tuple = ()


def _sample_branch(edge, rng: random.Random):
    den = math.lcm(*(br.prob.denominator for br in edge.branches))
    r = rng.randrange(den)
    acc = 0
    for br in edge.branches:
        acc += br.prob.numerator * (den // br.prob.denominator)
        if r < acc:
            return br
    raise AssertionError("branch probabilities do not cover the unit interval")


def simulate_run(
    arena: Arena,
    strategy: ConcretizedStrategy,
    rng: random.Random,
    *,
    epsilon: Fraction = Fraction(1, 1000),
    step_cap: int = 10_000,
    decaying: bool = False,
    check_legal: bool = True,
    record_trace: bool = False,
) -> RunRecord:
    state = arena.initial
    total = Fraction(0)
    trace: list = []
    steps = 0
    while not arena.is_final(state.location):
        if steps >= step_cap:
            return RunRecord(False, total, steps, state, tuple(trace))
        act = strategy.action_for(state.location, region_of(state.valuation))
        eps_eff = epsilon / (1 << (steps + 1)) if decaying else epsilon
        t = concretize_action(state.valuation, act, eps_eff)
        move = TimedAction(t, act.action)
        if check_legal and not timed_action_allowed(arena, state, move):
            raise StrategyGapError(
                "concretized move %s is illegal from (%s, %s)"
                % (move, state.location, dict(state.valuation.as_dict()))
            )
        if record_trace:
            trace.append((state, act.action, t))
        shifted = state.valuation.shift(t)
        br = _sample_branch(arena.edge(state.location, act.action), rng)
        total += t
        state = ConcreteState(br.target, shifted.reset(br.resets))
        steps += 1
    return RunRecord(True, total, steps, state, tuple(trace))


@dataclass
class EstimateResult:
    runs: int
    reached: int
    mean_exact: Fraction | None
    mean: float
    halfwidth: float
    epsilon: Fraction
    seed: int

    @property
    def unreached_fraction(self) -> float:
        return (self.runs - self.reached) / self.runs

    def summary(self) -> str:
        if self.reached == 0:
            return "0/%d runs reached the final set" % self.runs
        return "mean %.6f +/- %.6f over %d/%d runs (seed %d)" % (
            self.mean,
            self.halfwidth,
            self.reached,
            self.runs,
            self.seed,
        )


def estimate_value(
    arena: Arena,
    strategy: ConcretizedStrategy,
    runs: int,
    *,
    seed: int = 0,
    epsilon: Fraction = Fraction(1, 1000),
    step_cap: int = 10_000,
    decaying: bool = False,
    check_legal: bool = True,
) -> EstimateResult:
    """Sample mean of the accumulated time over runs that reach the final
    set, with a normal-approximation 95% halfwidth.  Runs cut off by the
    step cap are excluded from the mean and reported via `reached`."""
    if runs <= 0:
        raise ValueError("runs must be positive")
    rng = random.Random(seed)
    times: list[Fraction] = []
    for _ in range(runs):
        rec = simulate_run(
            arena,
            strategy,
            rng,
            epsilon=epsilon,
            step_cap=step_cap,
            decaying=decaying,
            check_legal=check_legal,
        )
        if rec.reached:
            times.append(rec.total_time)
    if not times:
        return EstimateResult(runs, 0, None, float("nan"), float("nan"),
                              epsilon, seed)
    n = len(times)
    mean_exact = sum(times, Fraction(0)) / n
    mean = float(mean_exact)
    if n > 1:
        var = sum((float(t) - mean) ** 2 for t in times) / (n - 1)
        halfwidth = 1.96 * math.sqrt(var / n)
    else:
        halfwidth = 0.0
    return EstimateResult(runs, n, mean_exact, mean, halfwidth, epsilon, seed)
