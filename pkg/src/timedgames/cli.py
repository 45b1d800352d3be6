"""Command line front end.

Subcommands:

  validate          load a model file and report structural findings
  brg               build the boundary region graph, optionally as DOT
  solve             expected time to the final set (float, or --exact)
  discounted        exact expected discounted time for a rational lambda
  check-properties  value-function property checks on reachable regions
  simulate          Monte Carlo play of the certified strategies

Exit codes: 0 success and all checks clean, 1 a property check found
violations, 2 bad input (file, model, constraint, or option), 3 the final
set is not reached almost surely under some strategy pair (an end-component
witness goes to stderr), 4 iteration budget exhausted.

JSON output is deterministic: rationals appear as "num/den" strings next to
a 12-significant-digit decimal rendering, and repeated invocations on the
same inputs and seeds produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

from .brg import Brg, ExplorationLimit, explore, export_dot, DEFAULT_STATE_CAP
from .model import ModelError, format_rational, load_model, parse_rational, validate
from .properties import (
    check_quasi_simple,
    fit_simple,
    grid_one_step_value,
    sample_states,
    value_at,
)
from .regions import RegionError
from .simulate import ConcretizedStrategy, StrategyGapError, estimate_value
from .solver import (
    ConvergenceError,
    SolveConfig,
    TargetUnreachableError,
    check_almost_sure_reach,
    extract_strategies,
    solve_discounted,
    solve_exact,
    value_iterate,
)


def _num(v):
    """Uniform JSON rendering of a value: exact rational plus decimal."""
    if v is None:
        return None
    if isinstance(v, Fraction):
        return {"rational": format_rational(v), "decimal": "%.12g" % float(v)}
    if v == math.inf:
        return {"rational": "inf", "decimal": "inf"}
    return {"rational": None, "decimal": "%.12g" % v}


def _emit(args, payload: dict, lines: list[str]) -> None:
    blob = json.dumps(payload, indent=2) + "\n"
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(blob)
    if getattr(args, "json", False) and not out:
        sys.stdout.write(blob)
    else:
        for line in lines:
            print(line)


def _print_witness(g: Brg, exc: TargetUnreachableError) -> None:
    print("the final set is not reached almost surely", file=sys.stderr)
    for comp in exc.components:
        labels = "; ".join(g.states[i].label() for i in comp)
        print("  end component: %s" % labels, file=sys.stderr)


def _config(args) -> SolveConfig:
    cfg = SolveConfig()
    if getattr(args, "tolerance", None) is not None:
        cfg.tolerance = args.tolerance
    if getattr(args, "max_iterations", None) is not None:
        cfg.max_iterations = args.max_iterations
    if getattr(args, "epsilon", None) is not None:
        cfg.epsilon = parse_rational(args.epsilon)
    return cfg


# ------------------------------------------------------------- subcommands

def cmd_validate(args) -> int:
    arena = load_model(args.model)
    findings = validate(arena)
    payload = {"model": arena.name, "ok": not findings, "findings": findings}
    lines = ["%s: no findings" % arena.name] if not findings else [
        "%s: %d finding(s)" % (arena.name, len(findings))
    ] + ["  " + f for f in findings]
    _emit(args, payload, lines)
    return 0 if not findings else 2


def cmd_brg(args) -> int:
    arena = load_model(args.model)
    g = explore(arena, cap=args.cap)
    state_rows = []
    for i, s in enumerate(g.states):
        acts = []
        for j, a in enumerate(g.actions[i]):
            acts.append({
                "label": a.label(),
                "reward": _num(g.rewards[i][j]),
                "successors": [[t, format_rational(p)] for t, p in g.dists[i][j]],
            })
        state_rows.append({
            "id": i,
            "state": s.label(),
            "owner": g.arena.owner_of(s.location),
            "final": g.arena.is_final(s.location),
            "actions": acts,
        })
    payload = {
        "model": arena.name,
        "states": g.n,
        "actions": g.action_count(),
        "transitions": g.transition_count(),
        "nodes": state_rows,
    }
    lines = ["%s: %d states, %d actions, %d transitions"
             % (arena.name, g.n, g.action_count(), g.transition_count())]
    for row in state_rows:
        moves = ", ".join(a["label"] for a in row["actions"]) or "-"
        lines.append("  %2d %-28s %s" % (row["id"], row["state"], moves))
    if args.dot:
        with open(args.dot, "w") as fh:
            fh.write(export_dot(g))
        lines.append("wrote %s" % args.dot)
        payload["dot"] = args.dot
    _emit(args, payload, lines)
    return 0


def _solve_rows(g: Brg, values, choice) -> list[dict]:
    rows = []
    for i in range(g.n):
        move = None
        if choice[i] is not None:
            move = g.actions[i][choice[i]].label()
        rows.append({"id": i, "state": g.states[i].label(),
                     "value": _num(values[i]), "move": move})
    return rows


def cmd_solve(args) -> int:
    arena = load_model(args.model)
    g = explore(arena)
    cfg = _config(args)
    if args.exact:
        try:
            res = solve_exact(g, cfg)
        except TargetUnreachableError as exc:
            _print_witness(g, exc)
            raise
        values, choice = res.values, res.choice
        payload_extra = {
            "certified": res.certified,
            "value_iterations": res.vi_iterations,
            "improvement_rounds": res.improvement_rounds,
            "exact_evaluations": res.exact_evaluations,
        }
    else:
        components = check_almost_sure_reach(g)
        if components:
            exc = TargetUnreachableError(components)
            _print_witness(g, exc)
            raise exc
        values, iters, residual = value_iterate(g, cfg)
        choice = extract_strategies(g, values)
        payload_extra = {
            "certified": False,
            "value_iterations": iters,
            "residual": _num(residual),
        }
    payload = {
        "model": arena.name,
        "objective": "expected-time",
        "exact": bool(args.exact),
        "states": g.n,
        "initial": {"state": g.states[0].label(), "value": _num(values[0])},
        **payload_extra,
        "values": _solve_rows(g, values, choice),
    }
    v0 = payload["initial"]["value"]
    lines = ["%s: value %s at %s"
             % (arena.name, v0["rational"] or v0["decimal"], g.states[0].label())]
    for row in payload["values"]:
        val = row["value"]["rational"] or row["value"]["decimal"]
        lines.append("  %2d %-28s %-10s %s"
                     % (row["id"], row["state"], val, row["move"] or "-"))
    _emit(args, payload, lines)
    return 0


def cmd_discounted(args) -> int:
    arena = load_model(args.model)
    g = explore(arena)
    lam = parse_rational(args.lam)
    cfg = _config(args)
    res = solve_discounted(g, lam, cfg, zero_final=not args.keep_final_rewards)
    payload = {
        "model": arena.name,
        "objective": "expected-discounted-time",
        "lambda": format_rational(lam),
        "zero_final": res.zero_final,
        "states": g.n,
        "certified": res.certified,
        "initial": {"state": g.states[0].label(), "value": _num(res.values[0])},
        "values": _solve_rows(g, res.values, res.choice),
    }
    v0 = payload["initial"]["value"]
    lines = ["%s: discounted value %s at lambda=%s"
             % (arena.name, v0["rational"], format_rational(lam))]
    for row in payload["values"]:
        lines.append("  %2d %-28s %-10s %s"
                     % (row["id"], row["state"], row["value"]["rational"],
                        row["move"] or "-"))
    _emit(args, payload, lines)
    return 0


def cmd_check_properties(args) -> int:
    arena = load_model(args.model)
    g = explore(arena)
    k_bound = (parse_rational(args.k_bound) if args.k_bound is not None
               else Fraction(1 + len(arena.ctx.clocks)))
    seen = {}
    for s in g.states:
        seen.setdefault((s.location, s.region.key()), s)
    region_rows = []
    violations = 0
    for (loc, _), s in seen.items():
        form = fit_simple(arena, loc, s.region, seed=args.seed)
        rep = check_quasi_simple(arena, loc, s.region, pairs=args.pairs,
                                 k_bound=k_bound, seed=args.seed)
        if not rep.ok:
            violations += 1
        region_rows.append({
            "location": loc,
            "region": s.region.label(),
            "simple_form": form.render() if form is not None else None,
            "pairs": rep.pairs_checked,
            "shift_pairs": rep.diag_pairs_checked,
            "lipschitz_violations": len(rep.lipschitz_violations),
            "monotonicity_violations": len(rep.monotonicity_violations),
            "nonexpansive_violations": len(rep.nonexpansive_violations),
            "max_ratio": _num(rep.max_lipschitz_ratio),
        })
    grid_rows = []
    tolerance = Fraction(1, 100)
    for state in sample_states(arena, args.states, seed=args.seed):
        exact = value_at(arena, state.location, state.valuation)
        approx = grid_one_step_value(arena, state, denominator=args.grid)
        gap = abs(approx - exact)
        if gap > tolerance:
            violations += 1
        grid_rows.append({
            "location": state.location,
            "valuation": {c: format_rational(v)
                          for c, v in state.valuation.as_dict().items()},
            "exact": _num(exact),
            "grid_value": _num(approx),
            "gap": _num(gap),
        })
    payload = {
        "model": arena.name,
        "k_bound": format_rational(k_bound),
        "pairs": args.pairs,
        "grid": args.grid,
        "seed": args.seed,
        "ok": violations == 0,
        "regions": region_rows,
        "grid_states": grid_rows,
    }
    lines = ["%s: %s" % (arena.name, "all checks clean" if violations == 0
                         else "%d check(s) failed" % violations)]
    for row in region_rows:
        lines.append("  %s [%s] form=%s violations=%d/%d/%d"
                     % (row["location"], row["region"],
                        row["simple_form"] or "-",
                        row["lipschitz_violations"],
                        row["monotonicity_violations"],
                        row["nonexpansive_violations"]))
    for row in grid_rows:
        vals = ",".join("%s=%s" % cv for cv in row["valuation"].items())
        lines.append("  grid %s %s gap=%s"
                     % (row["location"], vals, row["gap"]["rational"]))
    _emit(args, payload, lines)
    return 0 if violations == 0 else 1


def cmd_simulate(args) -> int:
    arena = load_model(args.model)
    g = explore(arena)
    try:
        res = solve_exact(g)
    except TargetUnreachableError as exc:
        _print_witness(g, exc)
        raise
    strategy = ConcretizedStrategy.from_solution(g, res.choice)
    est = estimate_value(
        arena,
        strategy,
        args.runs,
        seed=args.seed,
        epsilon=parse_rational(args.epsilon),
        step_cap=args.step_cap,
        decaying=args.decaying_epsilon,
    )
    value = res.values[0]
    abs_error = None
    if est.mean_exact is not None:
        abs_error = abs(est.mean_exact - value)
    payload = {
        "model": arena.name,
        "runs": est.runs,
        "seed": est.seed,
        "epsilon": format_rational(est.epsilon),
        "step_cap": args.step_cap,
        "decaying": args.decaying_epsilon,
        "reached": est.reached,
        "unreached_fraction": est.unreached_fraction,
        "estimate": _num(est.mean_exact),
        "halfwidth": est.halfwidth,
        "certified_value": _num(value),
        "abs_error": _num(abs_error),
    }
    lines = [
        "%s: %s" % (arena.name, est.summary()),
        "certified value %s, |estimate - value| = %s"
        % (format_rational(value),
           format_rational(abs_error) if abs_error is not None else "n/a"),
    ]
    _emit(args, payload, lines)
    return 0


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="timedgames",
        description="Solve and check expected-time games on timed automata "
                    "through their boundary region graphs.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, **kw):
        sp = sub.add_parser(name, **kw)
        sp.add_argument("model", help="path to a .model file")
        sp.add_argument("--json", action="store_true",
                        help="print a JSON document instead of text")
        sp.set_defaults(func=func)
        return sp

    add("validate", cmd_validate, help="report structural findings")

    sp = add("brg", cmd_brg, help="build the boundary region graph")
    sp.add_argument("--cap", type=int, default=DEFAULT_STATE_CAP,
                    help="abort exploration beyond this many states")
    sp.add_argument("--dot", metavar="FILE", help="also write a DOT rendering")

    sp = add("solve", cmd_solve, help="expected time to the final set")
    sp.add_argument("--exact", action="store_true",
                    help="certify exact rational values (default: float "
                         "value iteration)")
    sp.add_argument("--tolerance", type=float, default=None,
                    help="value iteration stopping tolerance")
    sp.add_argument("--max-iterations", type=int, default=None)
    sp.add_argument("--epsilon", default=None, metavar="NUM/DEN",
                    help="slack recorded for strategy concretization")
    sp.add_argument("--out", metavar="FILE", help="write the JSON document here")

    sp = add("discounted", cmd_discounted, help="expected discounted time")
    sp.add_argument("--lambda", dest="lam", required=True, metavar="NUM/DEN",
                    help="discount factor, a rational in [0, 1)")
    sp.add_argument("--keep-final-rewards", action="store_true",
                    help="let final states keep acting instead of absorbing "
                         "them at value zero")
    sp.add_argument("--tolerance", type=float, default=None)
    sp.add_argument("--max-iterations", type=int, default=None)
    sp.add_argument("--out", metavar="FILE", help="write the JSON document here")

    sp = add("check-properties", cmd_check_properties,
             help="test value-function properties on reachable regions")
    sp.add_argument("--pairs", type=int, default=40,
                    help="sampled pairs per region and per check")
    sp.add_argument("--grid", type=int, default=64,
                    help="delay grid denominator for the one-step check")
    sp.add_argument("--K", dest="k_bound", default=None, metavar="NUM/DEN",
                    help="Lipschitz bound (default 1 + number of clocks)")
    sp.add_argument("--states", type=int, default=6,
                    help="sampled states for the one-step check")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("simulate", cmd_simulate, help="Monte Carlo play of the "
                                            "certified strategies")
    sp.add_argument("--runs", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--epsilon", default="1/1000", metavar="NUM/DEN",
                    help="concretization slack inside open windows")
    sp.add_argument("--step-cap", type=int, default=10_000)
    sp.add_argument("--decaying-epsilon", action="store_true",
                    help="halve the slack after every step of a run")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TargetUnreachableError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    except (ModelError, RegionError, ExplorationLimit, StrategyGapError,
            ValueError, ZeroDivisionError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
