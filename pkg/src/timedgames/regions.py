"""Clock valuations, clock constraints, and the region construction.

A region is stored in canonical form as the integer part of every clock plus
an ordered partition of the clocks by fractional part.  ``blocks[0]`` is the
set of clocks with fractional part zero and is always present, possibly
empty; ``blocks[1:]`` are the nonempty groups of clocks with equal positive
fractional part, listed in increasing order of that fraction.  Clocks whose
integer part equals the bound ``k`` are forced into the zero block, which
caps the number of regions and makes time successors well defined.

A region is *thin* when the zero block is nonempty (some clock sits exactly
on an integer) and *thick* otherwise.  Letting time pass alternates between
the two kinds: from a thin region the zero-block clocks pick up a fresh
smallest positive fraction, and from a thick region the clocks with the
largest fraction reach the next integer.

Everything here is exact.  Valuation coordinates are ``fractions.Fraction``
and all comparisons are decided with integer arithmetic on the canonical
form.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Sequence


OPS = ("<", "<=", "=", ">=", ">")


class RegionError(ValueError):
    """Raised for malformed contexts, valuations, or regions."""


@dataclass(frozen=True)
class ClockContext:
    """A fixed ordered set of clock names and the shared integer bound k.

    The clock order is significant: it breaks ties whenever several clocks
    could serve as the boundary coordinate of a thin region, and it fixes
    the canonical ordering of action sets.
    """

    clocks: tuple[str, ...]
    k: int

    def __post_init__(self) -> None:
        if not self.clocks:
            raise RegionError("context needs at least one clock")
        if len(set(self.clocks)) != len(self.clocks):
            raise RegionError("duplicate clock names: %r" % (self.clocks,))
        if self.k < 1:
            raise RegionError("clock bound k must be at least 1, got %d" % self.k)

    def index(self, clock: str) -> int:
        try:
            return self.clocks.index(clock)
        except ValueError:
            raise RegionError("unknown clock %r" % clock) from None


@dataclass(frozen=True)
class ClockValuation:
    """An exact point in clock space, one Fraction per clock of the context."""

    ctx: ClockContext
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.ctx.clocks):
            raise RegionError("valuation arity mismatch")
        if any(v < 0 for v in self.values):
            raise RegionError("clock values must be nonnegative: %r" % (self.values,))

    @classmethod
    def from_map(cls, ctx: ClockContext, mapping: Mapping[str, Fraction]) -> "ClockValuation":
        missing = [c for c in ctx.clocks if c not in mapping]
        if missing:
            raise RegionError("valuation missing clocks %r" % missing)
        extra = [c for c in mapping if c not in ctx.clocks]
        if extra:
            raise RegionError("valuation has unknown clocks %r" % extra)
        return cls(ctx, tuple(Fraction(mapping[c]) for c in ctx.clocks))

    def value(self, clock: str) -> Fraction:
        return self.values[self.ctx.index(clock)]

    def shift(self, t: Fraction) -> "ClockValuation":
        """The valuation after t time units; t may push clocks past k."""
        t = Fraction(t)
        if t < 0:
            raise RegionError("cannot shift by negative time %s" % t)
        return ClockValuation(self.ctx, tuple(v + t for v in self.values))

    def reset(self, clocks: frozenset[str] | set[str]) -> "ClockValuation":
        idxs = {self.ctx.index(c) for c in clocks}
        return ClockValuation(
            self.ctx,
            tuple(Fraction(0) if i in idxs else v for i, v in enumerate(self.values)),
        )

    def as_dict(self) -> dict[str, Fraction]:
        return dict(zip(self.ctx.clocks, self.values))


@dataclass(frozen=True)
class SimpleConstraint:
    """One atom: ``left OP bound`` or ``left - right OP bound``."""

    left: str
    right: str | None
    op: str
    bound: int

    def __post_init__(self) -> None:
        if self.op not in OPS:
            raise RegionError("bad operator %r" % self.op)

    def render(self) -> str:
        lhs = self.left if self.right is None else "%s - %s" % (self.left, self.right)
        return "%s %s %d" % (lhs, self.op, self.bound)


@dataclass(frozen=True)
class ClockConstraint:
    """A conjunction of simple atoms; the empty conjunction is `true`."""

    atoms: tuple[SimpleConstraint, ...]

    def render(self) -> str:
        if not self.atoms:
            return "true"
        return " & ".join(a.render() for a in self.atoms)


TRUE = ClockConstraint(())


def parse_constraint(text: str, ctx: ClockContext) -> ClockConstraint:
    """Parse an `&`-conjunction of atoms ``c OP n`` / ``c - c' OP n``.

    Clock names must belong to the context and constants must lie in
    [0, k]; anything else is rejected so that region-level evaluation of
    the constraint is exact.
    """
    text = text.strip()
    if text in ("", "true"):
        return TRUE
    atom_re = re.compile(
        r"^\s*([A-Za-z_]\w*)\s*(?:-\s*([A-Za-z_]\w*))?\s*(<=|>=|=|<|>)\s*(\d+)\s*$"
    )
    atoms = []
    for part in text.split("&"):
        m = atom_re.match(part)
        if m is None:
            raise RegionError("cannot parse constraint atom %r" % part.strip())
        left, right, op, bound_s = m.groups()
        bound = int(bound_s)
        ctx.index(left)
        if right is not None:
            ctx.index(right)
            if right == left:
                raise RegionError("diagonal atom compares %r with itself" % left)
        if bound > ctx.k:
            raise RegionError(
                "constant %d exceeds clock bound k=%d in %r" % (bound, ctx.k, part.strip())
            )
        atoms.append(SimpleConstraint(left, right, op, bound))
    return ClockConstraint(tuple(atoms))


@dataclass(frozen=True)
class ClockRegion:
    """Canonical region: per-clock integer parts plus the fraction partition.

    ``ints[i]`` is the integer part of clock i, in [0, k].  ``blocks`` is a
    tuple of tuples of clock indices: ``blocks[0]`` holds the clocks with
    zero fraction (possibly empty), the remaining blocks are nonempty and
    ordered by increasing fractional part.  Indices inside a block are
    ascending.  A clock with integer part k must sit in the zero block.
    """

    ctx: ClockContext
    ints: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.ctx.clocks)
        if len(self.ints) != n:
            raise RegionError("region arity mismatch")
        if any(not (0 <= m <= self.ctx.k) for m in self.ints):
            raise RegionError("integer parts out of range: %r" % (self.ints,))
        seen = [i for b in self.blocks for i in b]
        if sorted(seen) != list(range(n)):
            raise RegionError("blocks are not a partition of the clocks")
        if not self.blocks:
            raise RegionError("zero block must be present (possibly empty)")
        if any(not b for b in self.blocks[1:]):
            raise RegionError("positive fraction blocks must be nonempty")
        if any(tuple(sorted(b)) != b for b in self.blocks):
            raise RegionError("blocks must list clock indices in ascending order")
        for i, m in enumerate(self.ints):
            if m == self.ctx.k and i not in self.blocks[0]:
                raise RegionError("clock at the bound k must have zero fraction")

    def key(self) -> tuple:
        """Total order on regions of one context, used for determinism."""
        return (self.ints, self.blocks)

    def block_of(self, idx: int) -> int:
        for j, b in enumerate(self.blocks):
            if idx in b:
                return j
        raise RegionError("clock index %d not in region" % idx)

    def label(self) -> str:
        """Human-readable description, e.g. ``0<x<1, y=1, frac(x)<frac(z)``."""
        parts = []
        for i, name in enumerate(self.ctx.clocks):
            m = self.ints[i]
            if i in self.blocks[0]:
                parts.append("%s=%d" % (name, m))
            else:
                parts.append("%d<%s<%d" % (m, name, m + 1))
        positive = self.blocks[1:]
        if sum(len(b) for b in positive) > 1:
            order = "<".join(
                "=".join("frac(%s)" % self.ctx.clocks[i] for i in b) for b in positive
            )
            parts.append(order)
        return ", ".join(parts)


def region_of(valuation: ClockValuation) -> ClockRegion:
    """The canonical region containing a valuation with all clocks in [0, k]."""
    ctx = valuation.ctx
    ints = []
    fracs = []
    for v in valuation.values:
        if v > ctx.k:
            raise RegionError("clock value %s exceeds bound k=%d" % (v, ctx.k))
        m = v.numerator // v.denominator
        ints.append(m)
        fracs.append(v - m)
    groups: dict[Fraction, list[int]] = {}
    for i, f in enumerate(fracs):
        groups.setdefault(f, []).append(i)
    zero = tuple(groups.pop(Fraction(0), []))
    blocks = (zero,) + tuple(tuple(groups[f]) for f in sorted(groups))
    return ClockRegion(ctx, tuple(ints), blocks)


def is_thin(region: ClockRegion) -> bool:
    """Thin regions have some clock exactly on an integer."""
    return len(region.blocks[0]) > 0


def time_successor(region: ClockRegion) -> ClockRegion | None:
    """The next region hit when time flows, or None at the bound.

    From a thin region the zero-block clocks acquire a fresh smallest
    positive fraction (unless one of them already sits at k, in which case
    time cannot pass without leaving the bounded space).  From a thick
    region the clocks with the largest fraction reach their next integer.
    """
    if is_thin(region):
        if any(region.ints[i] == region.ctx.k for i in region.blocks[0]):
            return None
        blocks = ((), region.blocks[0]) + region.blocks[1:]
        return ClockRegion(region.ctx, region.ints, blocks)
    last = region.blocks[-1]
    ints = tuple(m + 1 if i in last else m for i, m in enumerate(region.ints))
    blocks = (last,) + region.blocks[1:-1]
    return ClockRegion(region.ctx, ints, blocks)


def future_chain(region: ClockRegion) -> Iterator[ClockRegion]:
    """The region itself followed by its iterated time successors."""
    r: ClockRegion | None = region
    while r is not None:
        yield r
        r = time_successor(r)


def reset_region(region: ClockRegion, clocks: frozenset[str] | set[str]) -> ClockRegion:
    """The region after setting the given clocks to zero."""
    idxs = {region.ctx.index(c) for c in clocks}
    ints = tuple(0 if i in idxs else m for i, m in enumerate(region.ints))
    zero = tuple(sorted(set(region.blocks[0]) | idxs))
    positive = tuple(
        tuple(i for i in b if i not in idxs) for b in region.blocks[1:]
    )
    blocks = (zero,) + tuple(b for b in positive if b)
    return ClockRegion(region.ctx, ints, blocks)


def _atom_holds(region: ClockRegion, atom: SimpleConstraint) -> bool:
    i = region.ctx.index(atom.left)
    m = region.ints[i]
    if atom.right is None:
        zero = i in region.blocks[0]
        n = atom.bound
        if atom.op == "<":
            return m < n
        if atom.op == "<=":
            return m < n or (m == n and zero)
        if atom.op == "=":
            return m == n and zero
        if atom.op == ">=":
            return m >= n
        return m > n or (m == n and not zero)
    j = region.ctx.index(atom.right)
    d = m - region.ints[j]
    bi, bj = region.block_of(i), region.block_of(j)
    n = atom.bound
    if bi == bj:
        # equal fractions, the difference is exactly the integer d
        if atom.op == "<":
            return d < n
        if atom.op == "<=":
            return d <= n
        if atom.op == "=":
            return d == n
        if atom.op == ">=":
            return d >= n
        return d > n
    if bi > bj:
        lo = d  # difference lies strictly inside (d, d+1)
    else:
        lo = d - 1  # strictly inside (d-1, d)
    if atom.op in ("<", "<="):
        return lo + 1 <= n
    if atom.op == "=":
        return False
    return n <= lo


def satisfies(region: ClockRegion, constraint: ClockConstraint) -> bool:
    """Whether every point of the region satisfies the constraint.

    Constraint constants are integers bounded by k, so a constraint holds
    either everywhere or nowhere on a region; this decides which, from the
    canonical form alone.
    """
    return all(_atom_holds(region, a) for a in constraint.atoms)


def valuation_satisfies(valuation: ClockValuation, constraint: ClockConstraint) -> bool:
    """Pointwise constraint check, used by the concrete semantics."""
    for atom in constraint.atoms:
        lhs = valuation.value(atom.left)
        if atom.right is not None:
            lhs = lhs - valuation.value(atom.right)
        n = atom.bound
        ok = (
            lhs < n if atom.op == "<"
            else lhs <= n if atom.op == "<="
            else lhs == n if atom.op == "="
            else lhs >= n if atom.op == ">="
            else lhs > n
        )
        if not ok:
            return False
    return True


def boundary_coordinates(region: ClockRegion, thin: ClockRegion) -> tuple[int, str] | None:
    """The (b, c) pair naming the time at which `thin` is hit from `region`.

    Defined when `thin` lies on the future chain of `region` (reflexively).
    Any clock of the target's zero block works, since from a fixed start
    point they all name the same delay b - nu(c); the first such clock in
    context order is returned so the choice is deterministic.
    """
    if not is_thin(thin):
        raise RegionError("boundary coordinates target a thin region")
    for r in future_chain(region):
        if r == thin:
            c = min(thin.blocks[0])
            return (thin.ints[c], region.ctx.clocks[c])
    return None


def closure_contains(region: ClockRegion, valuation: ClockValuation) -> bool:
    """Whether the valuation lies in the topological closure of the region.

    The closure keeps zero-block clocks pinned to their integer, lets a
    positive-block clock range over the closed unit interval above its
    integer part, keeps fractions inside one block equal, and relaxes the
    strict fraction order between blocks to non-strict.
    """
    if valuation.ctx != region.ctx:
        raise RegionError("context mismatch")
    fracs: list[Fraction | None] = [None] * len(valuation.values)
    for i, v in enumerate(valuation.values):
        m = region.ints[i]
        if i in region.blocks[0]:
            if v != m:
                return False
            continue
        if not (m <= v <= m + 1):
            return False
        fracs[i] = v - m
    positive = region.blocks[1:]
    for b in positive:
        vals = {fracs[i] for i in b}
        if len(vals) != 1:
            return False
    for b1, b2 in zip(positive, positive[1:]):
        if fracs[b1[0]] > fracs[b2[0]]:  # type: ignore[operator]
            return False
    return True


@dataclass(frozen=True)
class DiagDelta:
    """Witness for the diagonal order: each moved clock advanced by exactly t."""

    t: Fraction
    moved: tuple[str, ...]


def diag_leq(v1: ClockValuation, v2: ClockValuation) -> DiagDelta | None:
    """Whether v2 dominates v1 diagonally: some clocks shifted by a common
    t > 0, the rest unchanged.  Returns the witness or None."""
    if v1.ctx != v2.ctx:
        raise RegionError("context mismatch")
    t: Fraction | None = None
    moved = []
    for name, a, b in zip(v1.ctx.clocks, v1.values, v2.values):
        d = b - a
        if d == 0:
            continue
        if d < 0:
            return None
        if t is None:
            t = d
        elif d != t:
            return None
        moved.append(name)
    if t is None:
        return None
    return DiagDelta(t, tuple(moved))


@dataclass(frozen=True)
class DelayWindow:
    """The set of delays {t >= 0 : nu + t in target}, as one interval."""

    lo: Fraction
    hi: Fraction
    closed_lo: bool
    closed_hi: bool

    def contains(self, t: Fraction) -> bool:
        if t < self.lo or t > self.hi:
            return False
        if t == self.lo and not self.closed_lo:
            return False
        if t == self.hi and not self.closed_hi:
            return False
        return True


def delay_window(valuation: ClockValuation, target: ClockRegion) -> DelayWindow | None:
    """Exact delay interval from a valuation into a region of its future chain.

    Thin targets are hit at a single instant.  A thick target is an open
    interval between two boundary instants, except that the valuation's own
    region contributes a half-open interval starting now.  Returns None when
    the target is not in the future of the valuation's region.
    """
    start = region_of(valuation)
    t_enter = Fraction(0)
    prev_thin_time: Fraction | None = None
    for r in future_chain(start):
        if is_thin(r):
            c = min(r.blocks[0])
            t_here = r.ints[c] - valuation.values[c]
            prev_thin_time = t_here
            if r == target:
                return DelayWindow(t_here, t_here, True, True)
        else:
            if r == target:
                lo = t_enter if prev_thin_time is None else prev_thin_time
                succ = time_successor(r)
                assert succ is not None  # thick regions always have one
                c = min(succ.blocks[0])
                hi = succ.ints[c] - valuation.values[c]
                closed_lo = prev_thin_time is None  # target is the current region
                return DelayWindow(lo, hi, closed_lo, False)
    return None


def representative(region: ClockRegion) -> ClockValuation:
    """The canonical interior point: positive block j gets fraction j/(m+1)."""
    m = len(region.blocks) - 1
    values = [Fraction(region.ints[i]) for i in range(len(region.ints))]
    for j, b in enumerate(region.blocks[1:], start=1):
        for i in b:
            values[i] += Fraction(j, m + 1)
    return ClockValuation(region.ctx, tuple(values))


def sample_interior(region: ClockRegion, rng, denominator: int = 64) -> ClockValuation:
    """A random point of the region with coordinates in (1/d)*Z."""
    m = len(region.blocks) - 1
    if denominator - 1 < m:
        raise RegionError("denominator too small for %d fraction blocks" % m)
    numerators = sorted(rng.sample(range(1, denominator), m))
    values = [Fraction(region.ints[i]) for i in range(len(region.ints))]
    for j, b in enumerate(region.blocks[1:]):
        for i in b:
            values[i] += Fraction(numerators[j], denominator)
    return ClockValuation(region.ctx, tuple(values))


def sample_closure(region: ClockRegion, rng, denominator: int = 64) -> ClockValuation:
    """A random point of the region's closure with coordinates in (1/d)*Z."""
    m = len(region.blocks) - 1
    numerators = sorted(rng.randrange(0, denominator + 1) for _ in range(m))
    values = [Fraction(region.ints[i]) for i in range(len(region.ints))]
    for j, b in enumerate(region.blocks[1:]):
        for i in b:
            values[i] += Fraction(numerators[j], denominator)
    return ClockValuation(region.ctx, tuple(values))


def _ordered_partitions(items: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], ...]]:
    if not items:
        yield ()
        return
    n = len(items)
    for mask in range(1, 1 << n):
        first = tuple(items[i] for i in range(n) if mask >> i & 1)
        rest = tuple(items[i] for i in range(n) if not mask >> i & 1)
        for tail in _ordered_partitions(rest):
            yield (first,) + tail


def enumerate_regions(ctx: ClockContext) -> list[ClockRegion]:
    """All regions of the context, sorted by canonical key."""
    n = len(ctx.clocks)
    out = []
    for ints in itertools.product(range(ctx.k + 1), repeat=n):
        forced = tuple(i for i in range(n) if ints[i] == ctx.k)
        free = tuple(i for i in range(n) if ints[i] < ctx.k)
        fn = len(free)
        for zmask in range(1 << fn):
            zero_extra = tuple(free[i] for i in range(fn) if zmask >> i & 1)
            rest = tuple(free[i] for i in range(fn) if not zmask >> i & 1)
            zero = tuple(sorted(forced + zero_extra))
            for positive in _ordered_partitions(rest):
                out.append(ClockRegion(ctx, ints, (zero,) + positive))
    out.sort(key=lambda r: r.key())
    return out
