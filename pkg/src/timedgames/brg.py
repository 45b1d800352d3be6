"""The boundary region graph: a finite stochastic game whose values agree
with the expected-time game on the underlying timed arena.

A node is a pair of a concrete state and a region, ((l, nu), (l, zeta)) with
nu in the closure of zeta; we store it as (location, valuation, region).
The region component says which region's action set the node plays; the
valuation component pins the exact point whose value the node carries.  The
root uses the region of its own valuation; off-diagonal nodes (valuation on
the boundary of the region) appear as targets of the interval-endpoint
actions below.

Actions are region-determined.  For every region zeta_a on the future chain
of zeta whose prefix stays inside the location invariant and whose points
satisfy the guard of an edge (l, a):

  * zeta_a thin: one action firing exactly when the boundary (b, c) of
    zeta_a is hit; it costs b - nu(c).
  * zeta_a thick, reached later than zeta: two actions, one approaching the
    infimum of the firing interval (boundary of the thin region just before
    zeta_a) and one approaching the supremum (boundary of the thin successor
    of zeta_a, which is exempt from the invariant because it is only a
    limit).  The guard is read in zeta_a in both cases.
  * zeta_a = zeta thick: one zero-cost action firing right now.  Waiting is
    available separately through the other cases, and the one-step value is
    monotone in the delay within a region, so the interval [0, w) of stays
    inside the current region needs exactly this one extra endpoint.

Two actions with the same (action, b, c, target region) are the same action
and are emitted once.  Rewards b - nu(c) are nonnegative for every valuation
in the closure of zeta because b is at least the supremum of c over zeta.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from .model import Arena, ModelError
from .regions import (
    ClockRegion,
    ClockValuation,
    boundary_coordinates,
    closure_contains,
    future_chain,
    is_thin,
    region_of,
    reset_region,
    satisfies,
    time_successor,
    valuation_satisfies,
)

DEFAULT_STATE_CAP = 100_000


class ExplorationLimit(RuntimeError):
    """Raised when the explored graph crosses the configured state cap."""


@dataclass(frozen=True)
class BrgState:
    location: str
    valuation: ClockValuation
    region: ClockRegion

    def label(self) -> str:
        vals = ",".join(
            "%s=%s" % (c, v) for c, v in self.valuation.as_dict().items()
        )
        return "%s | %s | [%s]" % (self.location, vals, self.region.label())


@dataclass(frozen=True)
class BoundaryAction:
    """An abstract timed move: action name, the region the guard is read in,
    and the boundary instant (b, c) the delay steers to.  b = c = None is
    the fire-now endpoint of a thick current region."""

    action: str
    target: ClockRegion
    b: int | None
    c: str | None

    def sort_key(self, ctx) -> tuple:
        ci = -1 if self.c is None else ctx.index(self.c)
        return (self.action, -1 if self.b is None else self.b, ci, self.target.key())

    def label(self) -> str:
        if self.b is None:
            return "%s now in [%s]" % (self.action, self.target.label())
        return "%s at %s=%d in [%s]" % (self.action, self.c, self.b, self.target.label())


def boundary_actions(arena: Arena, location: str, region: ClockRegion) -> list[BoundaryAction]:
    """The action set shared by all nodes with this location and region."""
    loc = arena.location_named(location)
    chain: list[ClockRegion] = []
    for r in future_chain(region):
        if not satisfies(r, loc.invariant):
            break
        chain.append(r)
    out: dict[tuple, BoundaryAction] = {}
    for idx, r in enumerate(chain):
        for e in arena.edges_from(location):
            if not satisfies(r, e.guard):
                continue
            if is_thin(r):
                bc = boundary_coordinates(region, r)
                assert bc is not None  # r is on the future chain of region
                acts = [BoundaryAction(e.action, r, bc[0], bc[1])]
            else:
                acts = []
                if r == region:
                    acts.append(BoundaryAction(e.action, r, None, None))
                else:
                    lo = boundary_coordinates(region, chain[idx - 1])
                    assert lo is not None
                    acts.append(BoundaryAction(e.action, r, lo[0], lo[1]))
                succ = time_successor(r)
                assert succ is not None  # thick regions always have one
                hi = boundary_coordinates(region, succ)
                assert hi is not None
                acts.append(BoundaryAction(e.action, r, hi[0], hi[1]))
            for a in acts:
                out.setdefault((a.action, a.b, a.c, a.target.key()), a)
    return sorted(out.values(), key=lambda a: a.sort_key(arena.ctx))


def action_delay(state: BrgState, act: BoundaryAction) -> Fraction:
    """The exact cost b - nu(c) of steering to the action's boundary."""
    if act.b is None:
        return Fraction(0)
    assert act.c is not None
    t = act.b - state.valuation.value(act.c)
    if t < 0:
        raise ModelError(
            "negative delay %s for %s at %s; valuation outside the region closure"
            % (t, act.label(), state.label())
        )
    return t


def action_successors(
    arena: Arena, state: BrgState, act: BoundaryAction
) -> dict[BrgState, Fraction]:
    """Successor distribution: shift to the boundary, then branch and reset."""
    e = arena.edge(state.location, act.action)
    assert e is not None
    shifted = state.valuation.shift(action_delay(state, act))
    out: dict[BrgState, Fraction] = {}
    for br in e.branches:
        target_region = reset_region(act.target, br.resets)
        inv = arena.location_named(br.target).invariant
        if not satisfies(target_region, inv):
            raise ModelError(
                "edge (%s, %s) lands in [%s], outside the invariant of %s"
                % (state.location, act.action, target_region.label(), br.target)
            )
        succ = BrgState(br.target, shifted.reset(br.resets), target_region)
        assert closure_contains(succ.region, succ.valuation)
        out[succ] = out.get(succ, Fraction(0)) + br.prob
    return out


@dataclass
class Brg:
    """The explored graph.  Parallel lists indexed by state id: the action
    list of each state is in canonical order, and each distribution is a
    tuple of (successor id, probability) sorted by successor id."""

    arena: Arena
    states: list[BrgState] = field(default_factory=list)
    actions: list[list[BoundaryAction]] = field(default_factory=list)
    rewards: list[list[Fraction]] = field(default_factory=list)
    dists: list[list[tuple[tuple[int, Fraction], ...]]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.states)

    def owner(self, i: int) -> str:
        return self.arena.owner_of(self.states[i].location)

    def is_final(self, i: int) -> bool:
        return self.arena.is_final(self.states[i].location)

    def action_count(self) -> int:
        return sum(len(a) for a in self.actions)

    def transition_count(self) -> int:
        return sum(len(d) for dist in self.dists for d in dist)


def explore(arena: Arena, root: BrgState | None = None, cap: int = DEFAULT_STATE_CAP) -> Brg:
    """Breadth-first reachable construction from the root.

    The default root pairs the arena's initial state with the region of its
    own valuation.  States are numbered in discovery order, which together
    with the canonical action order makes the graph a deterministic function
    of the input.
    """
    if root is None:
        loc, v = arena.initial
        root = BrgState(loc, v, region_of(v))
    if not closure_contains(root.region, root.valuation):
        raise ModelError("root valuation must lie in the closure of its region")
    if not valuation_satisfies(root.valuation, arena.location_named(root.location).invariant):
        raise ModelError("root state violates its location invariant")

    g = Brg(arena)
    index: dict[BrgState, int] = {}
    action_cache: dict[tuple[str, ClockRegion], list[BoundaryAction]] = {}

    def intern(s: BrgState) -> int:
        i = index.get(s)
        if i is None:
            if len(g.states) >= cap:
                raise ExplorationLimit(
                    "state cap %d crossed while exploring %s" % (cap, arena.name or "arena")
                )
            i = len(g.states)
            index[s] = i
            g.states.append(s)
            queue.append(i)
        return i

    queue: deque[int] = deque()
    intern(root)
    while queue:
        i = queue.popleft()
        s = g.states[i]
        key = (s.location, s.region)
        acts = action_cache.get(key)
        if acts is None:
            acts = boundary_actions(arena, s.location, s.region)
            action_cache[key] = acts
        g.actions.append(acts)
        g.rewards.append([action_delay(s, a) for a in acts])
        row = []
        for a in acts:
            dist = action_successors(arena, s, a)
            row.append(tuple(sorted((intern(t), p) for t, p in dist.items())))
        g.dists.append(row)
    return g


def _gvquote(s: str) -> str:
    return '"%s"' % s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(g: Brg) -> str:
    """Graphviz rendering: boxes for min states, diamonds for max states,
    double border on finals, one point node per action."""
    lines = ["digraph brg {", "  rankdir=LR;", '  node [fontname="Helvetica"];']
    for i, s in enumerate(g.states):
        shape = "box" if g.owner(i) == "min" else "diamond"
        extra = ", peripheries=2" if g.is_final(i) else ""
        lines.append(
            "  s%d [shape=%s%s, label=%s];" % (i, shape, extra, _gvquote(s.label()))
        )
    for i in range(g.n):
        for j, a in enumerate(g.actions[i]):
            mid = "s%d_a%d" % (i, j)
            lines.append("  %s [shape=point];" % mid)
            lines.append(
                "  s%d -> %s [label=%s];"
                % (i, mid, _gvquote("%s  cost %s" % (a.label(), g.rewards[i][j])))
            )
            for t, p in g.dists[i][j]:
                lines.append("  %s -> s%d [label=%s];" % (mid, t, _gvquote(str(p))))
    lines.append("}")
    return "\n".join(lines) + "\n"
