"""Game arenas over probabilistic timed automata and their concrete semantics.

An arena is a finite set of locations, each owned by the minimizer or the
maximizer and carrying an invariant, plus guarded probabilistic edges.  An
edge is identified by its source location and action name; its distribution
is a list of branches, each with an exact rational probability, a reset set,
and a target location.  Final locations are where the reachability objective
stops the clock; they are not forced to be absorbing.

The file format is YAML.  Probabilities and initial clock values are written
as strings like "1/2" (plain integers allowed); float literals are rejected
so nothing inexact can enter the pipeline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

import networkx as nx
import yaml

from .regions import (
    ClockConstraint,
    ClockContext,
    ClockRegion,
    ClockValuation,
    RegionError,
    enumerate_regions,
    future_chain,
    parse_constraint,
    region_of,
    satisfies,
    valuation_satisfies,
)

MIN = "min"
MAX = "max"

_RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")


class ModelError(ValueError):
    """Raised for unparseable or structurally broken model inputs."""


def parse_rational(value) -> Fraction:
    """Exact rational from an int or a "num/den" string; floats are refused."""
    if isinstance(value, bool):
        raise ModelError("expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise ModelError(
            "float literal %r is not allowed; write an exact rational like \"1/2\"" % value
        )
    if isinstance(value, str) and _RATIONAL_RE.match(value.strip()):
        return Fraction(value.strip())
    raise ModelError("cannot parse %r as an exact rational" % (value,))


def format_rational(value) -> str:
    """Render as "num/den" (denominator kept even when it is 1)."""
    f = Fraction(value)
    return "%d/%d" % (f.numerator, f.denominator)


@dataclass(frozen=True)
class Location:
    name: str
    owner: str
    final: bool
    invariant: ClockConstraint


@dataclass(frozen=True)
class Branch:
    prob: Fraction
    resets: frozenset[str]
    target: str


@dataclass(frozen=True)
class Edge:
    source: str
    action: str
    guard: ClockConstraint
    branches: tuple[Branch, ...]


class ConcreteState(NamedTuple):
    location: str
    valuation: ClockValuation


class TimedAction(NamedTuple):
    delay: Fraction
    action: str


@dataclass(frozen=True)
class Arena:
    """A probabilistic timed game: locations with owners, guarded edges,
    and a designated initial state."""

    name: str
    ctx: ClockContext
    locations: tuple[Location, ...]
    edges: tuple[Edge, ...]
    initial: ConcreteState

    def __post_init__(self) -> None:
        names = [l.name for l in self.locations]
        if len(set(names)) != len(names):
            raise ModelError("duplicate location names")
        for l in self.locations:
            if l.owner not in (MIN, MAX):
                raise ModelError("owner of %s must be %r or %r" % (l.name, MIN, MAX))
        by_key = set()
        for e in self.edges:
            if e.source not in names:
                raise ModelError("edge from unknown location %r" % e.source)
            if (e.source, e.action) in by_key:
                raise ModelError(
                    "two edges share (source, action) = (%s, %s); the action "
                    "relation must be a partial function" % (e.source, e.action)
                )
            by_key.add((e.source, e.action))
            if not e.branches:
                raise ModelError("edge (%s, %s) has no branches" % (e.source, e.action))
            for br in e.branches:
                if br.target not in names:
                    raise ModelError("branch to unknown location %r" % br.target)
                if br.prob <= 0:
                    raise ModelError(
                        "branch probability must be positive, got %s on (%s, %s)"
                        % (br.prob, e.source, e.action)
                    )
        if self.initial.location not in names:
            raise ModelError("initial location %r does not exist" % self.initial.location)

    def location_named(self, name: str) -> Location:
        for l in self.locations:
            if l.name == name:
                return l
        raise ModelError("unknown location %r" % name)

    def is_final(self, name: str) -> bool:
        return self.location_named(name).final

    def owner_of(self, name: str) -> str:
        return self.location_named(name).owner

    def edge(self, location: str, action: str) -> Edge | None:
        for e in self.edges:
            if e.source == location and e.action == action:
                return e
        return None

    def edges_from(self, location: str) -> list[Edge]:
        return [e for e in self.edges if e.source == location]


# ----------------------------------------------------------------- parsing

def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ModelError("missing %r in %s" % (key, where))
    return mapping[key]


def parse_model(text: str, name: str = "") -> Arena:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ModelError("not valid YAML: %s" % exc) from exc
    if not isinstance(doc, dict):
        raise ModelError("model document must be a mapping")
    clocks = _require(doc, "clocks", "model")
    if not isinstance(clocks, list) or not all(isinstance(c, str) for c in clocks):
        raise ModelError("clocks must be a list of names")
    k = _require(doc, "k", "model")
    if not isinstance(k, int) or isinstance(k, bool):
        raise ModelError("k must be an integer")
    try:
        ctx = ClockContext(tuple(clocks), k)
    except RegionError as exc:
        raise ModelError(str(exc)) from exc

    locations = []
    for entry in _require(doc, "locations", "model"):
        lname = _require(entry, "name", "location")
        owner = entry.get("owner", MIN)
        final = bool(entry.get("final", False))
        inv_text = entry.get("invariant", "true")
        try:
            inv = parse_constraint(inv_text, ctx)
        except RegionError as exc:
            raise ModelError("invariant of %s: %s" % (lname, exc)) from exc
        locations.append(Location(lname, owner, final, inv))

    edges = []
    for entry in doc.get("edges", []):
        source = _require(entry, "source", "edge")
        action = _require(entry, "action", "edge")
        try:
            guard = parse_constraint(entry.get("guard", "true"), ctx)
        except RegionError as exc:
            raise ModelError("guard of (%s, %s): %s" % (source, action, exc)) from exc
        branches = []
        for br in _require(entry, "branches", "edge (%s, %s)" % (source, action)):
            prob = parse_rational(_require(br, "prob", "branch"))
            resets = br.get("resets", [])
            if not isinstance(resets, list):
                raise ModelError("resets must be a list of clock names")
            for c in resets:
                ctx.index(c)
            branches.append(
                Branch(prob, frozenset(resets), _require(br, "target", "branch"))
            )
        edges.append(Edge(source, action, guard, tuple(branches)))

    init = _require(doc, "initial", "model")
    iloc = _require(init, "location", "initial")
    ival = _require(init, "valuation", "initial")
    if not isinstance(ival, dict):
        raise ModelError("initial valuation must map clock names to rationals")
    vmap = {c: parse_rational(x) for c, x in ival.items()}
    try:
        valuation = ClockValuation.from_map(ctx, vmap)
    except RegionError as exc:
        raise ModelError("initial valuation: %s" % exc) from exc

    try:
        return Arena(
            name=name or doc.get("name", ""),
            ctx=ctx,
            locations=tuple(locations),
            edges=tuple(edges),
            initial=ConcreteState(iloc, valuation),
        )
    except RegionError as exc:
        raise ModelError(str(exc)) from exc


def load_model(path: str) -> Arena:
    import os

    with open(path) as fh:
        text = fh.read()
    base = os.path.splitext(os.path.basename(path))[0]
    return parse_model(text, name=base)


def dump_model(arena: Arena) -> str:
    """Serialize back to the file format (used for fixture/file round-trips)."""
    doc = {
        "name": arena.name,
        "clocks": list(arena.ctx.clocks),
        "k": arena.ctx.k,
        "locations": [
            {
                "name": l.name,
                "owner": l.owner,
                "final": l.final,
                "invariant": l.invariant.render(),
            }
            for l in arena.locations
        ],
        "edges": [
            {
                "source": e.source,
                "action": e.action,
                "guard": e.guard.render(),
                "branches": [
                    {
                        "prob": format_rational(br.prob),
                        "resets": sorted(br.resets),
                        "target": br.target,
                    }
                    for br in e.branches
                ],
            }
            for e in arena.edges
        ],
        "initial": {
            "location": arena.initial.location,
            "valuation": {
                c: format_rational(v) for c, v in arena.initial.valuation.as_dict().items()
            },
        },
    }
    return yaml.safe_dump(doc, sort_keys=False)


# -------------------------------------------------------------- validation

def region_actions_available(arena: Arena, location: str, region: ClockRegion) -> bool:
    """Whether some action can be taken from (location, region): a region on
    the invariant-respecting future chain satisfies some guard."""
    loc = arena.location_named(location)
    outgoing = arena.edges_from(location)
    for r in future_chain(region):
        if not satisfies(r, loc.invariant):
            break
        for e in outgoing:
            if satisfies(r, e.guard):
                return True
    return False


def check_structural_nonzeno(arena: Arena) -> list[list[str]]:
    """Location-graph cycles that fail the structural non-Zenoness test.

    Every cycle (every way of choosing branches around a cycle of locations)
    must contain a clock that is reset on one of its edges and bounded from
    below by 1 on the guard of another (or the same) edge.  Guard-implies
    checks are done region-exactly: a guard bounds c from below by 1 when
    every region satisfying the guard also satisfies c >= 1.
    """
    ctx = arena.ctx
    regions = enumerate_regions(ctx)
    ge_one = {c: parse_constraint("%s >= 1" % c, ctx) for c in ctx.clocks}

    def guard_forces_ge_one(guard: ClockConstraint, clock: str) -> bool:
        return all(
            satisfies(r, ge_one[clock]) for r in regions if satisfies(r, guard)
        )

    graph = nx.DiGraph()
    graph.add_nodes_from(l.name for l in arena.locations)
    hop: dict[tuple[str, str], list[tuple[Edge, Branch]]] = {}
    for e in arena.edges:
        for br in e.branches:
            graph.add_edge(e.source, br.target)
            hop.setdefault((e.source, br.target), []).append((e, br))

    bad: list[list[str]] = []
    for cycle in nx.simple_cycles(graph):
        pairs = list(zip(cycle, cycle[1:] + cycle[:1]))
        # every combination of parallel branches along the cycle must pass
        def combinations(i: int, chosen: list[tuple[Edge, Branch]]):
            if i == len(pairs):
                yield list(chosen)
                return
            for eb in hop[pairs[i]]:
                yield from combinations(i + 1, chosen + [eb])

        for combo in combinations(0, []):
            ok = False
            for c in ctx.clocks:
                resets_c = any(c in br.resets for _, br in combo)
                forces_c = any(guard_forces_ge_one(e.guard, c) for e, _ in combo)
                if resets_c and forces_c:
                    ok = True
                    break
            if not ok:
                bad.append(list(cycle))
                break
    return bad


def validate(arena: Arena) -> list[str]:
    """Structural findings that make the game semantics degenerate.

    Covers probability sums, constraint constants outside [0, k] (possible
    when arenas are built in code rather than parsed), initial-state sanity,
    location/region pairs with no available action, and structurally Zeno
    location cycles.  Returns human-readable findings; empty means clean.
    """
    findings = []
    for e in arena.edges:
        total = sum(br.prob for br in e.branches)
        if total != 1:
            findings.append(
                "edge (%s, %s): branch probabilities sum to %s, not 1"
                % (e.source, e.action, total)
            )
    for e in arena.edges:
        for atom in e.guard.atoms:
            if not (0 <= atom.bound <= arena.ctx.k):
                findings.append(
                    "edge (%s, %s): guard constant %d outside [0, %d]"
                    % (e.source, e.action, atom.bound, arena.ctx.k)
                )
    for l in arena.locations:
        for atom in l.invariant.atoms:
            if not (0 <= atom.bound <= arena.ctx.k):
                findings.append(
                    "invariant of %s: constant %d outside [0, %d]"
                    % (l.name, atom.bound, arena.ctx.k)
                )

    init_loc, init_val = arena.initial
    if any(v > arena.ctx.k for v in init_val.values):
        findings.append("initial valuation exceeds the clock bound")
    else:
        inv = arena.location_named(init_loc).invariant
        if not valuation_satisfies(init_val, inv):
            findings.append("initial valuation violates the invariant of %s" % init_loc)

    all_regions = enumerate_regions(arena.ctx)
    for l in arena.locations:
        for r in all_regions:
            if not satisfies(r, l.invariant):
                continue
            if not region_actions_available(arena, l.name, r):
                findings.append(
                    "no action available from (%s, %s)" % (l.name, r.label())
                )

    for cycle in check_structural_nonzeno(arena):
        findings.append(
            "structurally Zeno location cycle: %s (no clock is both reset "
            "and bounded below by 1 around it)" % " -> ".join(cycle)
        )
    return findings


# ------------------------------------------------------- concrete semantics

def timed_action_allowed(arena: Arena, state: ConcreteState, ta: TimedAction) -> bool:
    """Whether delaying by ta.delay and firing ta.action is legal at state.

    Requires the edge to exist, the delayed valuation to stay within the
    clock bound and satisfy the guard, and the location invariant to hold
    throughout the delay (checked region by region along the future chain,
    which is exact because invariants are region-constant).
    """
    loc, v = state
    e = arena.edge(loc, ta.action)
    if e is None:
        return False
    if ta.delay < 0:
        return False
    shifted = v.shift(ta.delay)
    if any(x > arena.ctx.k for x in shifted.values):
        return False
    if not valuation_satisfies(shifted, e.guard):
        return False
    inv = arena.location_named(loc).invariant
    target_region = region_of(shifted)
    for r in future_chain(region_of(v)):
        if not satisfies(r, inv):
            return False
        if r == target_region:
            return True
    raise ModelError("delay did not land on the future chain")  # unreachable


def concrete_step(
    arena: Arena, state: ConcreteState, ta: TimedAction
) -> dict[ConcreteState, Fraction]:
    """The successor distribution of a legal timed action, branches with the
    same outcome merged."""
    if not timed_action_allowed(arena, state, ta):
        raise ModelError(
            "timed action (%s, %s) not allowed at (%s, %s)"
            % (ta.delay, ta.action, state.location, dict(state.valuation.as_dict()))
        )
    loc, v = state
    e = arena.edge(loc, ta.action)
    assert e is not None
    shifted = v.shift(ta.delay)
    out: dict[ConcreteState, Fraction] = {}
    for br in e.branches:
        succ = ConcreteState(br.target, shifted.reset(br.resets))
        out[succ] = out.get(succ, Fraction(0)) + br.prob
    return out
