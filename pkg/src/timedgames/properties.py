"""Executable checks of the structural properties the solver relies on.

The central object is `value_at`, the certified game value from an arbitrary
concrete state, computed by rooting the boundary region graph there.  On top
of it:

  * `fit_simple` reconstructs a one-clock affine form e - nu(c) (or a
    constant) for the value function on a region, when one exists;
  * `check_quasi_simple` samples pairs in a region's closure and tests the
    value function for K-Lipschitz continuity (sup norm) and, along
    diagonal shifts by t on a subset of clocks, for monotone decrease by at
    most t;
  * `check_time_monotone` tests that the one-step function
    t + sum_branches p * value(successor at delay t) is nondecreasing in t
    inside one enabled region's delay window;
  * `grid_one_step_value` optimizes that one-step function over a dense
    delay grid, the reference point for consistency between the graph
    abstraction and the concrete semantics.

All checks take an `evaluator` override so a deliberately broken value
function can be used to prove the checks have teeth.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from .brg import BrgState, explore
from .model import Arena, ConcreteState
from .regions import (
    ClockRegion,
    ClockValuation,
    closure_contains,
    delay_window,
    future_chain,
    region_of,
    representative,
    sample_closure,
    sample_interior,
    satisfies,
    valuation_satisfies,
)
from .solver import SimpleForm, solve_exact

Evaluator = Callable[[str, ClockValuation], Fraction]


@lru_cache(maxsize=None)
def _rooted_value(arena: Arena, location: str, valuation: ClockValuation) -> Fraction:
    root = BrgState(location, valuation, region_of(valuation))
    g = explore(arena, root=root)
    return solve_exact(g).values[0]


def value_at(arena: Arena, location: str, valuation: ClockValuation) -> Fraction:
    """Certified expected time to the final set from a concrete state,
    via a graph rooted at that exact state.  Cached per state."""
    return _rooted_value(arena, location, valuation)


def _default_evaluator(arena: Arena) -> Evaluator:
    return lambda location, valuation: value_at(arena, location, valuation)


# ------------------------------------------------------------- simple fit

def fit_simple(
    arena: Arena,
    location: str,
    region: ClockRegion,
    *,
    samples: int = 6,
    seed: int = 0,
    evaluator: Evaluator | None = None,
) -> SimpleForm | None:
    """A constant or e - nu(c) form matching the value on interior samples.

    Values at the representative plus random interior points pin the form
    down: such forms differ on a region as soon as they differ anywhere on
    it, so agreement on the samples identifies the form whenever one exists.
    Returns None when no sampled form has an integer offset or fits.
    """
    ev = evaluator or _default_evaluator(arena)
    rng = random.Random(seed)
    points = [representative(region)]
    for _ in range(samples - 1):
        points.append(sample_interior(region, rng))
    points = list(dict.fromkeys(points))
    vals = [ev(location, p) for p in points]
    first = vals[0]
    if all(v == first for v in vals) and first.denominator == 1:
        return SimpleForm(int(first), None)
    for c in arena.ctx.clocks:
        offsets = {v + p.value(c) for v, p in zip(vals, points)}
        if len(offsets) == 1:
            e = offsets.pop()
            if e.denominator == 1:
                return SimpleForm(int(e), c)
    return None


# --------------------------------------------------------- quasi-simpleness

@dataclass
class PropertyReport:
    location: str
    region: ClockRegion
    k_bound: Fraction
    pairs_checked: int = 0
    diag_pairs_checked: int = 0
    lipschitz_violations: list = field(default_factory=list)
    monotonicity_violations: list = field(default_factory=list)
    nonexpansive_violations: list = field(default_factory=list)
    max_lipschitz_ratio: Fraction | None = None

    @property
    def ok(self) -> bool:
        return not (
            self.lipschitz_violations
            or self.monotonicity_violations
            or self.nonexpansive_violations
        )

    def summary(self) -> str:
        return (
            "%s [%s]: %d pairs, %d shift pairs, violations %d/%d/%d"
            % (
                self.location,
                self.region.label(),
                self.pairs_checked,
                self.diag_pairs_checked,
                len(self.lipschitz_violations),
                len(self.monotonicity_violations),
                len(self.nonexpansive_violations),
            )
        )


def check_quasi_simple(
    arena: Arena,
    location: str,
    region: ClockRegion,
    *,
    pairs: int = 200,
    k_bound: Fraction | None = None,
    seed: int = 0,
    denominator: int = 64,
    evaluator: Evaluator | None = None,
) -> PropertyReport:
    """Sampled check that the value function is K-Lipschitz on the region's
    closure and, along diagonal time shifts, decreases by at most the shift.

    Pairs are rational points of the closure with bounded denominators.  The
    diagonal part draws a base point, a shift t > 0, and a nonempty clock
    subset, keeping only shifted points that stay inside the closure; kept
    pairs must satisfy F(nu) >= F(nu') and F(nu) - F(nu') <= t.
    """
    ev = evaluator or _default_evaluator(arena)
    K = Fraction(k_bound) if k_bound is not None else Fraction(1 + len(arena.ctx.clocks))
    rng = random.Random(seed)
    report = PropertyReport(location, region, K)

    attempts = 0
    while report.pairs_checked < pairs and attempts < 50 * pairs:
        attempts += 1
        u = sample_closure(region, rng, denominator)
        v = sample_closure(region, rng, denominator)
        if u == v:
            continue
        fu, fv = ev(location, u), ev(location, v)
        dist = max(abs(a - b) for a, b in zip(u.values, v.values))
        ratio = abs(fu - fv) / dist
        if report.max_lipschitz_ratio is None or ratio > report.max_lipschitz_ratio:
            report.max_lipschitz_ratio = ratio
        if ratio > K:
            report.lipschitz_violations.append((u.values, v.values, fu, fv, ratio))
        report.pairs_checked += 1

    attempts = 0
    n = len(arena.ctx.clocks)
    while report.diag_pairs_checked < pairs and attempts < 50 * pairs:
        attempts += 1
        u = sample_closure(region, rng, denominator)
        t = Fraction(rng.randint(1, arena.ctx.k * denominator), denominator)
        mask = rng.randint(1, (1 << n) - 1)
        shifted = tuple(
            x + t if mask >> i & 1 else x for i, x in enumerate(u.values)
        )
        if any(x > arena.ctx.k for x in shifted):
            continue
        v = ClockValuation(arena.ctx, shifted)
        if not closure_contains(region, v):
            continue
        fu, fv = ev(location, u), ev(location, v)
        if fu < fv:
            report.monotonicity_violations.append((u.values, v.values, fu, fv, t))
        if fu - fv > t:
            report.nonexpansive_violations.append((u.values, v.values, fu, fv, t))
        report.diag_pairs_checked += 1
    return report


# --------------------------------------------------------- time monotonicity

def check_time_monotone(
    arena: Arena,
    state: ConcreteState,
    action: str,
    target: ClockRegion,
    *,
    grid: int = 16,
    evaluator: Evaluator | None = None,
) -> list:
    """Violations of one-step monotonicity in the delay.

    Restricted to delays steering into one region, the one-step function
    t + sum p * F(successor) must be nondecreasing; this compares it at
    consecutive grid points of the delay window.  A thin target admits a
    single delay, so the check is vacuous there.
    """
    ev = evaluator or _default_evaluator(arena)
    loc, v = state
    e = arena.edge(loc, action)
    if e is None:
        raise ValueError("no edge (%s, %s)" % (loc, action))
    if not satisfies(target, e.guard):
        raise ValueError("action %s is not enabled on [%s]" % (action, target.label()))
    w = delay_window(v, target)
    if w is None:
        raise ValueError("[%s] is not in the future of the state" % target.label())

    def one_step(t: Fraction) -> Fraction:
        shifted = v.shift(t)
        total = Fraction(t)
        for br in e.branches:
            total += br.prob * ev(br.target, shifted.reset(br.resets))
        return total

    if w.lo == w.hi:
        return []
    ts = []
    if w.closed_lo:
        ts.append(w.lo)
    step = (w.hi - w.lo) / (grid + 1)
    ts.extend(w.lo + step * j for j in range(1, grid + 1))
    out = []
    prev_t = prev_f = None
    for t in ts:
        f = one_step(t)
        if prev_f is not None and f < prev_f:
            out.append((prev_t, t, prev_f, f))
        prev_t, prev_f = t, f
    return out


# ------------------------------------------------------- grid consistency

def enabled_regions(arena: Arena, state: ConcreteState, action: str) -> list[ClockRegion]:
    """Regions of the state's future chain where the action can fire, the
    location invariant holding up to them."""
    loc, v = state
    e = arena.edge(loc, action)
    if e is None:
        return []
    inv = arena.location_named(loc).invariant
    out = []
    for r in future_chain(region_of(v)):
        if not satisfies(r, inv):
            break
        if satisfies(r, e.guard):
            out.append(r)
    return out


def grid_one_step_value(
    arena: Arena,
    state: ConcreteState,
    *,
    denominator: int = 64,
    evaluator: Evaluator | None = None,
) -> Fraction:
    """Best one-step value over a dense grid of legal delays.

    Thin enabled regions contribute their exact instant; thick ones an
    evenly spaced grid strictly inside their delay window, plus the left
    endpoint when the state already sits in the region.  The optimum over
    this grid converges to the true one-step optimum as the grid refines,
    and the two agree outright when the guards are closed on the optimal
    side, as in the bundled models.
    """
    ev = evaluator or _default_evaluator(arena)
    loc, v = state
    minimize = arena.owner_of(loc) == "min"
    best: Fraction | None = None
    for e in arena.edges_from(loc):
        for r in enabled_regions(arena, state, e.action):
            w = delay_window(v, r)
            assert w is not None
            ts: list[Fraction] = []
            if w.lo == w.hi:
                ts.append(w.lo)
            else:
                if w.closed_lo:
                    ts.append(w.lo)
                step = (w.hi - w.lo) / denominator
                ts.extend(w.lo + step * j for j in range(1, denominator))
            for t in ts:
                shifted = v.shift(t)
                val = Fraction(t)
                for br in e.branches:
                    val += br.prob * ev(br.target, shifted.reset(br.resets))
                if best is None or (val < best if minimize else val > best):
                    best = val
    if best is None:
        raise ValueError("no legal timed action from (%s, %s)" % (loc, v.as_dict()))
    return best


def sample_states(
    arena: Arena, count: int, *, seed: int = 0, denominator: int = 8
) -> list[ConcreteState]:
    """Deterministic sample of non-final concrete states on a rational grid,
    each satisfying its location invariant."""
    pool = []
    for l in arena.locations:
        if l.final:
            continue
        coords = [Fraction(j, denominator) for j in range(arena.ctx.k * denominator + 1)]
        # grid over all clocks would explode for many clocks; the bundled
        # models have one, and a diagonal slice keeps it honest otherwise
        if len(arena.ctx.clocks) == 1:
            grid = [(c,) for c in coords]
        else:
            grid = [(c,) * len(arena.ctx.clocks) for c in coords]
        for values in grid:
            v = ClockValuation(arena.ctx, values)
            if valuation_satisfies(v, l.invariant):
                pool.append(ConcreteState(l.name, v))
    rng = random.Random(seed)
    if count >= len(pool):
        return pool
    return rng.sample(pool, count)
