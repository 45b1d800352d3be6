"""Solvers for the finite min/max game induced by a boundary region graph.

The expected-time pipeline is: check that the target set is reached almost
surely under every strategy pair (no end component among non-final states),
run float value iteration for a warm start, extract positional strategies,
then improve them in exact rational arithmetic, alternating best responses
until neither player can switch.  The final values come from an exact linear
solve of the induced Markov chain and carry a zero-residual certificate of
the optimality equations.

The discounted variant contracts, so it needs no reachability assumption;
by default it treats final states as absorbing with value zero, which is the
reading under which the discounted initial value tends to the expected-time
value as the discount factor tends to one.  `zero_final=False` gives the
pure infinite-horizon payoff where final locations keep acting.

All public entry points work on the explored graph, not the arena, so a
rooted graph for an arbitrary start state solves the game from there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx

from .brg import Brg, BoundaryAction
from .regions import ClockRegion, ClockValuation, representative

INF = math.inf

Value = object  # Fraction, float (value iteration), or math.inf


class TargetUnreachableError(RuntimeError):
    """The explored graph has an end component avoiding the final states, so
    expected reachability times are not finite under every strategy pair."""

    def __init__(self, components: list[list[int]]):
        self.components = components
        super().__init__(
            "final states are not reached almost surely; end components: %s"
            % (components,)
        )


class ConvergenceError(RuntimeError):
    """Iteration budget exhausted before meeting the tolerance."""


@dataclass
class SolveConfig:
    tolerance: float = 1e-9
    max_iterations: int = 1_000_000
    epsilon: Fraction = Fraction(1, 10**9)
    improve_order: str = "min_first"  # or "max_first"


@dataclass
class CertifyReport:
    residual: Fraction | float
    violations: list[int]

    @property
    def ok(self) -> bool:
        return self.residual == 0


@dataclass
class SolveResult:
    values: list
    choice: list
    certified: bool
    mode: str
    lam: Fraction | None
    zero_final: bool
    vi_iterations: int
    vi_residual: float
    improvement_rounds: int
    exact_evaluations: int


# ------------------------------------------------------------ assumptions

def _end_components(g: Brg, states: Iterable[int]) -> list[list[int]]:
    """Maximal end components of the sub-MDP on `states` (actions restricted
    to those whose whole support stays inside), by iterated SCC refinement."""
    result = []
    stack = [frozenset(states)]
    while stack:
        T = stack.pop()
        if not T:
            continue
        allowed = {
            s: [
                j
                for j in range(len(g.actions[s]))
                if all(t in T for t, _ in g.dists[s][j])
            ]
            for s in T
        }
        dead = {s for s in T if not allowed[s]}
        if dead:
            stack.append(T - dead)
            continue
        graph = nx.DiGraph()
        graph.add_nodes_from(T)
        for s in T:
            for j in allowed[s]:
                for t, _ in g.dists[s][j]:
                    graph.add_edge(s, t)
        sccs = [frozenset(c) for c in nx.strongly_connected_components(graph)]
        if len(sccs) == 1:
            # strongly connected and every state can stay: an end component
            # (a singleton only survives `dead` with a genuine self-loop)
            result.append(sorted(T))
            continue
        stack.extend(sccs)
    result.sort()
    return result


def check_almost_sure_reach(g: Brg) -> list[list[int]]:
    """End components among the non-final states; empty means every strategy
    pair reaches the final set with probability one."""
    return _end_components(g, [i for i in range(g.n) if not g.is_final(i)])


# ------------------------------------------------------------ Bellman step

def _one_step(g: Brg, i: int, j: int, values: Sequence, lam) -> Value:
    acc = g.rewards[i][j]
    for t, p in g.dists[i][j]:
        acc = acc + p * values[t]
    if lam is not None:
        acc = lam * acc
    return acc


def improve_step(g: Brg, values: Sequence, *, lam=None, zero_final: bool = True) -> list:
    """One application of the optimality operator.  Exactness follows the
    input: Fraction values give a Fraction result, floats give floats.
    math.inf flows through either way."""
    out = []
    for i in range(g.n):
        zero = Fraction(0) if isinstance(values[i], Fraction) else 0.0
        if zero_final and g.is_final(i):
            out.append(zero)
            continue
        best = None
        minimize = g.owner(i) == "min"
        for j in range(len(g.actions[i])):
            cand = _one_step(g, i, j, values, lam)
            if best is None or (cand < best if minimize else cand > best):
                best = cand
        out.append(best if best is not None else zero)
    return out


def value_iterate(
    g: Brg, cfg: SolveConfig, *, lam=None, zero_final: bool = True
) -> tuple[list[float], int, float]:
    """Float fixpoint iteration from all zeros; returns (values, iterations,
    last residual).  Monotone from below for the expected-time objective, a
    contraction for the discounted one."""
    v = [0.0] * g.n
    lam_f = None if lam is None else float(lam)
    for it in range(1, cfg.max_iterations + 1):
        w = improve_step(g, v, lam=lam_f, zero_final=zero_final)
        w = [float(x) for x in w]
        residual = max((abs(a - b) for a, b in zip(v, w)), default=0.0)
        v = w
        if residual <= cfg.tolerance:
            return v, it, residual
    raise ConvergenceError(
        "value iteration did not reach tolerance %g in %d iterations"
        % (cfg.tolerance, cfg.max_iterations)
    )


def extract_strategies(
    g: Brg, values: Sequence, *, lam=None, zero_final: bool = True
) -> list:
    """Greedy positional choice per state (argmin for the minimizer, argmax
    for the maximizer, first action in canonical order on ties).  Final
    states get None when they are treated as absorbing."""
    choice: list = []
    for i in range(g.n):
        if zero_final and g.is_final(i):
            choice.append(None)
            continue
        best = None
        best_j = None
        minimize = g.owner(i) == "min"
        for j in range(len(g.actions[i])):
            cand = _one_step(g, i, j, values, lam)
            if best is None or (cand < best if minimize else cand > best):
                best, best_j = cand, j
        choice.append(best_j)
    return choice


# ------------------------------------------------------- exact evaluation

def _solve_linear_exact(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over Fractions for a square nonsingular system."""
    n = len(rows)
    a = [list(map(Fraction, rows[i])) + [Fraction(rhs[i])] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ArithmeticError("singular system in exact evaluation")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def evaluate_pair_exact(g: Brg, choice: Sequence) -> list:
    """Exact expected time to the final set in the Markov chain fixed by the
    choice vector.  Final states have value zero.

    A state is infinite exactly when the chain from it reaches, with
    positive probability, somewhere the final set is unreachable from: on
    such runs time keeps accumulating forever (non-Zenoness), so the
    expectation diverges even if the final set stays reachable with the
    complementary probability.
    """
    final = [g.is_final(i) for i in range(g.n)]
    succs: list[list[int]] = [[] for _ in range(g.n)]
    for i in range(g.n):
        if final[i]:
            continue
        j = choice[i]
        if j is None:
            raise ValueError("choice vector leaves non-final state %d unset" % i)
        succs[i] = [t for t, _ in g.dists[i][j]]
    pred: list[list[int]] = [[] for _ in range(g.n)]
    for i in range(g.n):
        for t in succs[i]:
            pred[t].append(i)

    def back_reach(seed: list[int]) -> set[int]:
        seen = set(seed)
        todo = list(seed)
        while todo:
            x = todo.pop()
            for p in pred[x]:
                if p not in seen:
                    seen.add(p)
                    todo.append(p)
        return seen

    can_reach_final = back_reach([i for i in range(g.n) if final[i]])
    doomed = [i for i in range(g.n) if i not in can_reach_final]
    infinite = back_reach(doomed)

    unknown = [
        i for i in range(g.n) if not final[i] and i not in infinite
    ]
    pos = {i: r for r, i in enumerate(unknown)}
    rows = []
    rhs = []
    for i in unknown:
        j = choice[i]
        row = [Fraction(0)] * len(unknown)
        row[pos[i]] += 1
        for t, p in g.dists[i][j]:
            if t in pos:
                row[pos[t]] -= p
            # final successors contribute zero; infinite successors cannot
            # occur here, otherwise i itself would be infinite
        rows.append(row)
        rhs.append(g.rewards[i][j])
    solved = _solve_linear_exact(rows, rhs) if unknown else []

    values: list = [None] * g.n
    for i in range(g.n):
        if final[i]:
            values[i] = Fraction(0)
        elif i in infinite:
            values[i] = INF
        else:
            values[i] = solved[pos[i]]
    return values


def evaluate_pair_discounted(
    g: Brg, choice: Sequence, lam: Fraction, *, zero_final: bool = True
) -> list:
    """Exact discounted value of a strategy pair: v = lam * (r + P v)."""
    lam = Fraction(lam)
    active = [i for i in range(g.n) if not (zero_final and g.is_final(i))]
    pos = {i: r for r, i in enumerate(active)}
    rows = []
    rhs = []
    for i in active:
        j = choice[i]
        if j is None:
            raise ValueError("choice vector leaves state %d unset" % i)
        row = [Fraction(0)] * len(active)
        row[pos[i]] += 1
        for t, p in g.dists[i][j]:
            if t in pos:
                row[pos[t]] -= lam * p
        rows.append(row)
        rhs.append(lam * g.rewards[i][j])
    solved = _solve_linear_exact(rows, rhs) if active else []
    values: list = [Fraction(0)] * g.n
    for i in active:
        values[i] = solved[pos[i]]
    return values


def certify(g: Brg, values: Sequence, *, lam=None, zero_final: bool = True) -> CertifyReport:
    """Exact residual of the optimality equations at `values`.  Zero residual
    and no violating states certify optimality (for the expected-time
    objective this relies on the almost-sure reachability check, under which
    the optimality equations pin down a unique solution)."""
    improved = improve_step(g, values, lam=lam, zero_final=zero_final)
    violations = []
    residual: Fraction | float = Fraction(0)
    for i in range(g.n):
        a, b = values[i], improved[i]
        if a == b:
            continue
        violations.append(i)
        gap = INF if INF in (a, b) else abs(a - b)
        residual = max(residual, gap)
    return CertifyReport(residual, violations)


# ------------------------------------------------------ strategy improvement

def _improvable(g: Brg, values: Sequence, choice: Sequence, owner: str, lam, zero_final) -> list:
    """(state, action) switches that strictly improve against `values`."""
    switches = []
    for i in range(g.n):
        if (zero_final and g.is_final(i)) or g.owner(i) != owner:
            continue
        best = _one_step(g, i, choice[i], values, lam)
        best_j = choice[i]
        minimize = owner == "min"
        for j in range(len(g.actions[i])):
            cand = _one_step(g, i, j, values, lam)
            if cand < best if minimize else cand > best:
                best, best_j = cand, j
        if best_j != choice[i]:
            switches.append((i, best_j))
    return switches


def solve_exact(g: Brg, cfg: SolveConfig | None = None) -> SolveResult:
    """Certified exact values and positional strategies for expected time."""
    cfg = cfg or SolveConfig()
    components = check_almost_sure_reach(g)
    if components:
        raise TargetUnreachableError(components)
    v_float, vi_iters, vi_residual = value_iterate(g, cfg)
    choice = extract_strategies(g, v_float)

    def evaluate(ch):
        return evaluate_pair_exact(g, ch)

    choice, rounds, evaluations = _alternating_best_response(
        g, choice, cfg, evaluate, lam=None, zero_final=True
    )
    values = evaluate_pair_exact(g, choice)
    report = certify(g, values)
    return SolveResult(
        values=values,
        choice=choice,
        certified=report.ok,
        mode="expected-time",
        lam=None,
        zero_final=True,
        vi_iterations=vi_iters,
        vi_residual=vi_residual,
        improvement_rounds=rounds,
        exact_evaluations=evaluations,
    )


def _alternating_best_response(
    g: Brg, choice: list, cfg: SolveConfig, evaluate, *, lam, zero_final
) -> tuple[list, int, int]:
    """Alternating best response from a warm-start pair.

    The inner loop is exact policy iteration for one player against the
    other's fixed strategy; once it stabilizes the other player switches.
    Every switch strictly improves for its owner and every pair's value is
    well defined (by the almost-sure reachability check, or by discounting),
    so the finitely many positional pairs cannot recur and the loop stops at
    a pair satisfying the optimality equations.
    """
    order = ("min", "max") if cfg.improve_order == "min_first" else ("max", "min")
    first, second = order
    choice = list(choice)
    rounds = 0
    evaluations = 0
    while True:
        rounds += 1
        if rounds > cfg.max_iterations:
            raise ConvergenceError(
                "strategy improvement exceeded %d rounds" % cfg.max_iterations
            )
        # exact policy iteration: full best response of the first player
        while True:
            values = evaluate(choice)
            evaluations += 1
            if evaluations > cfg.max_iterations:
                raise ConvergenceError(
                    "strategy improvement exceeded %d evaluations" % cfg.max_iterations
                )
            switches = _improvable(g, values, choice, first, lam, zero_final)
            if not switches:
                break
            for i, j in switches:
                choice[i] = j
        # one greedy switch batch for the second player against that value;
        # its value climbs strictly each round, so pairs cannot recur
        switches = _improvable(g, values, choice, second, lam, zero_final)
        if not switches:
            return choice, rounds, evaluations
        for i, j in switches:
            choice[i] = j


def solve_discounted(
    g: Brg,
    lam,
    cfg: SolveConfig | None = None,
    *,
    zero_final: bool = True,
) -> SolveResult:
    """Certified exact discounted values; lam must satisfy 0 <= lam < 1."""
    cfg = cfg or SolveConfig()
    lam = Fraction(lam)
    if not (0 <= lam < 1):
        raise ValueError("discount factor must lie in [0, 1), got %s" % lam)
    if lam == 0:
        values: list = [Fraction(0)] * g.n
        choice = extract_strategies(g, values, lam=lam, zero_final=zero_final)
        report = certify(g, values, lam=lam, zero_final=zero_final)
        return SolveResult(
            values=values,
            choice=choice,
            certified=report.ok,
            mode="discounted",
            lam=lam,
            zero_final=zero_final,
            vi_iterations=0,
            vi_residual=0.0,
            improvement_rounds=0,
            exact_evaluations=0,
        )
    v_float, vi_iters, vi_residual = value_iterate(g, cfg, lam=lam, zero_final=zero_final)
    choice = extract_strategies(g, v_float, lam=float(lam), zero_final=zero_final)

    def evaluate(ch):
        return evaluate_pair_discounted(g, ch, lam, zero_final=zero_final)

    choice, rounds, evaluations = _alternating_best_response(
        g, choice, cfg, evaluate, lam=lam, zero_final=zero_final
    )
    values = evaluate(choice)
    report = certify(g, values, lam=lam, zero_final=zero_final)
    return SolveResult(
        values=values,
        choice=choice,
        certified=report.ok,
        mode="discounted",
        lam=lam,
        zero_final=zero_final,
        vi_iterations=vi_iters,
        vi_residual=vi_residual,
        improvement_rounds=rounds,
        exact_evaluations=evaluations,
    )


# ------------------------------------------------------------ simple forms

@dataclass(frozen=True)
class SimpleForm:
    """A value function of the shape e - nu(clock) (or the constant e when
    clock is None), with integer e.  On one region such forms are totally
    ordered, and two of them agree on the region as soon as they agree at
    its interior representative."""

    e: int
    clock: str | None = None

    def eval(self, valuation: ClockValuation) -> Fraction:
        if self.clock is None:
            return Fraction(self.e)
        return self.e - valuation.value(self.clock)

    def render(self) -> str:
        return str(self.e) if self.clock is None else "%d - %s" % (self.e, self.clock)


def _compose_form(act: BoundaryAction, resets: frozenset[str], f: SimpleForm) -> SimpleForm:
    """Pull a successor's form back through one boundary action.

    Waiting to the boundary (b, c) costs b - nu(c) and afterwards the
    boundary clock reads b, so a constant e' becomes (b + e') - nu(c) and a
    slope on a reset clock turns into the same; a slope on a clock that
    survives the jump is unchanged because the wait it charges cancels the
    wait just paid.  The fire-now action only applies the resets.
    """
    if act.b is None:
        if f.clock is not None and f.clock in resets:
            return SimpleForm(f.e, None)
        return f
    assert act.c is not None
    if f.clock is None or f.clock in resets:
        return SimpleForm(act.b + f.e, act.c)
    return SimpleForm(f.e, f.clock)


def solve_simple_forms(g: Brg) -> dict[tuple[str, ClockRegion], SimpleForm]:
    """Symbolic region-level solve for games without probabilistic branching.

    Iterates the optimality operator on the lattice of simple forms per
    (location, region) node, starting from zero on final locations and
    "undefined" (plus infinity) elsewhere.  Under the almost-sure
    reachability check the non-final region graph is acyclic, so the
    iteration reaches its fixpoint and every node gets a finite form.
    """
    for row in g.dists:
        for dist in row:
            if len(dist) != 1:
                raise ValueError(
                    "simple-form solving needs point distributions; "
                    "this graph branches probabilistically"
                )
    components = check_almost_sure_reach(g)
    if components:
        raise TargetUnreachableError(components)

    arena = g.arena
    reps: dict[tuple[str, ClockRegion], ClockValuation] = {}
    node_state: dict[tuple[str, ClockRegion], int] = {}
    for i, s in enumerate(g.states):
        key = (s.location, s.region)
        if key not in node_state:
            node_state[key] = i
            reps[key] = representative(s.region)

    forms: dict[tuple[str, ClockRegion], SimpleForm | None] = {}
    for key in node_state:
        forms[key] = SimpleForm(0, None) if arena.is_final(key[0]) else None

    def successor_key(key, j: int) -> tuple[tuple[str, ClockRegion], frozenset[str]]:
        i = node_state[key]
        act = g.actions[i][j]
        e = arena.edge(key[0], act.action)
        assert e is not None and len(e.branches) == 1
        br = e.branches[0]
        (t, _p), = g.dists[i][j]
        succ = g.states[t]
        return (succ.location, succ.region), br.resets

    cap = 64 * len(node_state) + 64
    for _ in range(cap):
        changed = False
        for key in node_state:
            if arena.is_final(key[0]):
                continue
            i = node_state[key]
            maximize = arena.owner_of(key[0]) == "max"
            rep = reps[key]
            best: SimpleForm | None = None
            dead = False
            for j in range(len(g.actions[i])):
                skey, resets = successor_key(key, j)
                f = forms[skey]
                if f is None:
                    if maximize:
                        dead = True
                        break
                    continue
                cand = _compose_form(g.actions[i][j], resets, f)
                if best is None:
                    best = cand
                else:
                    a, b = cand.eval(rep), best.eval(rep)
                    if (a > b) if maximize else (a < b):
                        best = cand
            new = None if dead else best
            old = forms[key]
            same = (
                (new is None and old is None)
                or (new is not None and old is not None and new.eval(rep) == old.eval(rep))
            )
            if not same:
                forms[key] = new
                changed = True
        if not changed:
            break
    else:
        raise ConvergenceError("simple-form iteration did not stabilize")

    out: dict[tuple[str, ClockRegion], SimpleForm] = {}
    for key, f in forms.items():
        if f is None:
            raise ConvergenceError(
                "no finite simple form for %s in [%s]" % (key[0], key[1].label())
            )
        out[key] = f
    return out
