"""Command line front end.

Subcommands: eval, solve, check, profile, construction, repl.  Exit codes:
0 success, 1 user error (parse, type, or binding), 2 budget exceeded,
3 internal invariant failure (including a failed --verify).  Budgets come
from flags, then the environment variables EQALG_MAX_CANDIDATES,
EQALG_MAX_SPACE, and EQALG_MAX_SOLUTIONS, then the documented defaults.
Stdout is byte-identical across runs for identical inputs and seeds; timing
and metrics go to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import ast
from .constructions import registry
from .evaluator import (
    BindingError,
    BudgetExceeded,
    EvalBudget,
    InternalCheckError,
    evaluate,
    solve,
    solve_nonempty,
)
from .model import ModelError, flat_type
from .parser import ParseError, parse_database, parse_expr, render_relation
from .profiler import DbGenerator, meter_expression, profile
from .typecheck import TypecheckError, infer_type

EXIT_OK = 0
EXIT_USER = 1
EXIT_BUDGET = 2
EXIT_INTERNAL = 3


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"bad integer in {name}: {raw!r}")


def _budget_from(args) -> EvalBudget:
    defaults = EvalBudget()
    return EvalBudget(
        max_candidates=args.max_candidates
        if args.max_candidates is not None
        else _env_int("EQALG_MAX_CANDIDATES", defaults.max_candidates),
        max_space_units=args.max_space
        if args.max_space is not None
        else _env_int("EQALG_MAX_SPACE", defaults.max_space_units),
        max_solutions=args.max_solutions
        if args.max_solutions is not None
        else _env_int("EQALG_MAX_SOLUTIONS", defaults.max_solutions),
    )


def _add_budget_flags(p) -> None:
    p.add_argument("--max-candidates", type=int, default=None)
    p.add_argument("--max-space", type=int, default=None)
    p.add_argument("--max-solutions", type=int, default=None)


def _add_expr_flags(p) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--expr", help="expression text")
    group.add_argument("--expr-file", help="file holding one expression")


def _load_expr(args) -> ast.Expr:
    text = args.expr
    if text is None:
        with open(args.expr_file, encoding="utf-8") as fh:
            text = fh.read()
    return parse_expr(text)


def _load_db(path: str) -> Database:
    with open(path, encoding="utf-8") as fh:
        db, _ = parse_database(fh.read())
    return db


def cmd_eval(args) -> int:
    db = _load_db(args.db)
    e = _load_expr(args)
    value, metrics = evaluate(e, db, _budget_from(args))
    print(render_relation(value))
    if args.metrics:
        print(metrics.format(), file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    db = _load_db(args.db)
    e = _load_expr(args)
    if not isinstance(e, ast.Solve):
        raise ParseError("the solve subcommand needs a solve{...} expression", 1, 1)
    budget = _budget_from(args)
    if args.nonempty:
        found = solve_nonempty(e.binders, e.lhs, e.rhs, db, budget)
        print("true" if found else "false")
        return EXIT_OK
    value, metrics = evaluate(e, db, budget)
    print(render_relation(value))
    if args.metrics:
        print(metrics.format(), file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    e = _load_expr(args)
    violations = ast.check_bindings(e)
    if violations:
        for v in violations:
            print(f"binding violation: {v}", file=sys.stderr)
        return EXIT_USER
    if args.db:
        schema = _load_db(args.db).schema
    else:
        schema = {name: flat_type(2) for name in sorted(ast.free_names(e))}
        if schema:
            print(
                "note: no --db given; free names assumed flat binary", file=sys.stderr
            )
    t = infer_type(e, schema)
    print(t)
    return EXIT_OK


def cmd_construction(args) -> int:
    entry = registry().get(args.name)
    if entry is None:
        known = ", ".join(sorted(registry()))
        raise ParseError(f"unknown construction {args.name!r} (known: {known})", 1, 1)
    db = _load_db(args.db)
    budget = _budget_from(args)
    if entry.harness is not None:
        value = entry.harness(db, budget)
    elif entry.equation is not None:
        value, metrics = solve(*entry.equation, db, budget)
        if args.metrics:
            print(metrics.format(), file=sys.stderr)
    else:
        value, metrics = evaluate(entry.expression, db, budget)
        if args.metrics:
            print(metrics.format(), file=sys.stderr)
    print(render_relation(value))
    if args.verify:
        expected = entry.oracle(db)
        if value == expected:
            print("VERIFY PASS", file=sys.stderr)
        else:
            print("VERIFY FAIL", file=sys.stderr)
            print(f"expected {render_relation(expected)}", file=sys.stderr)
            return EXIT_INTERNAL
    return EXIT_OK


def _parse_n_range(text: str):
    lo, sep, hi = text.partition("..")
    if not sep:
        raise ParseError(f"bad n-range {text!r}, expected A..B", 1, 1)
    return range(int(lo), int(hi) + 1)


def _parse_gen(text: str | None, default_schema: dict, seed: int) -> DbGenerator:
    """--gen forms: 'domain' or 'flat:NAME:TYPE:DENSITY[,NAME:TYPE:DENSITY...]'."""
    from .parser import parse_type

    if text is None:
        if default_schema:
            return DbGenerator(
                schema=default_schema, mode="random-flat", density=1.0, seed=seed
            )
        return DbGenerator(seed=seed)
    if text == "domain":
        return DbGenerator(seed=seed)
    if text.startswith("flat:"):
        schema = {}
        density: dict = {}
        for part in _split_outside_parens(text[len("flat:") :]):
            name, _, rest = part.partition(":")
            type_text, _, dens = rest.rpartition(":")
            schema[name] = parse_type(type_text)
            density[name] = float(dens)
        return DbGenerator(schema=schema, mode="random-flat", density=density, seed=seed)
    raise ParseError(f"bad --gen {text!r}", 1, 1)


def _split_outside_parens(text: str) -> list[str]:
    parts = []
    depth = 0
    start = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def cmd_profile(args) -> int:
    budget = _budget_from(args)
    entry = registry().get(args.eq) if args.eq else None
    if args.eq and entry is None and not os.path.exists(args.eq):
        known = ", ".join(sorted(registry()))
        raise ParseError(f"unknown construction {args.eq!r} (known: {known})", 1, 1)
    if entry is not None:
        equation = entry.equation
        expression = entry.expression
        default_schema = entry.schema
    else:
        with open(args.eq, encoding="utf-8") as fh:
            expression = parse_expr(fh.read())
        if not isinstance(expression, ast.Solve) and not args.meter:
            raise ParseError("profile needs a solve{...} expression (or --meter)", 1, 1)
        equation = (
            (expression.binders, expression.lhs, expression.rhs)
            if isinstance(expression, ast.Solve)
            else None
        )
        default_schema = {}
    gen = _parse_gen(args.gen, default_schema, args.seed)
    n_range = _parse_n_range(args.n_range)
    if args.meter:
        report = meter_expression(expression, gen, n_range, budget)
    else:
        if equation is None:
            raise ParseError("this construction is not a single equation; use --meter", 1, 1)
        report = profile(equation, gen, n_range, budget)
    print(report.format_table())
    for p in report.points:
        print(f"n={p.n} wall_ms={p.wall_ms:.1f}", file=sys.stderr)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.format_file())
    return EXIT_BUDGET if report.truncated else EXIT_OK


def cmd_repl(args) -> int:
    db = _load_db(args.db) if args.db else None
    budget = _budget_from(args)
    show_metrics = False
    stdin = sys.stdin
    while True:
        print("eqalg> ", end="", file=sys.stderr, flush=True)
        line = stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        try:
            if line == ":quit":
                break
            if line == ":metrics":
                show_metrics = not show_metrics
                print(f"metrics {'on' if show_metrics else 'off'}", file=sys.stderr)
                continue
            if line.startswith(":load "):
                db = _load_db(line[len(":load ") :].strip())
                print(f"loaded database with {len(db.domain)} atoms", file=sys.stderr)
                continue
            if line.startswith(":type "):
                e = parse_expr(line[len(":type ") :])
                schema = db.schema if db else {}
                print(infer_type(e, schema))
                continue
            if line.startswith(":"):
                print(f"unknown command {line.split()[0]}", file=sys.stderr)
                continue
            if db is None:
                print("no database loaded; use :load FILE", file=sys.stderr)
                continue
            value, metrics = evaluate(parse_expr(line), db, budget)
            print(render_relation(value))
            if show_metrics:
                print(metrics.format(), file=sys.stderr)
        except (ParseError, TypecheckError, BindingError, ModelError, ast.AstError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
        except BudgetExceeded as exc:
            print(f"budget: {exc}", file=sys.stderr)
    return EXIT_OK


def build_arg_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="eqalg", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate an expression on a database")
    p.add_argument("--db", required=True)
    _add_expr_flags(p)
    p.add_argument("--metrics", action="store_true")
    _add_budget_flags(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("solve", help="solve an equation (a solve{...} expression)")
    p.add_argument("--db", required=True)
    _add_expr_flags(p)
    p.add_argument("--nonempty", action="store_true", help="only report solvability")
    p.add_argument("--metrics", action="store_true")
    _add_budget_flags(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("check", help="parse, binding-check, and type an expression")
    _add_expr_flags(p)
    p.add_argument("--db", default=None)
    _add_budget_flags(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("construction", help="run a named construction")
    p.add_argument("--name", required=True)
    p.add_argument("--db", required=True)
    p.add_argument("--verify", action="store_true", help="compare against the oracle")
    p.add_argument("--metrics", action="store_true")
    _add_budget_flags(p)
    p.set_defaults(fn=cmd_construction)

    p = sub.add_parser("profile", help="profile growth over increasing domains")
    p.add_argument("--eq", required=True, help="construction name or expression file")
    p.add_argument("--n-range", required=True, help="A..B inclusive")
    p.add_argument("--gen", default=None, help="'domain' or 'flat:NAME:TYPE:DENSITY,...'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write machine-readable report here")
    p.add_argument("--meter", action="store_true", help="meter peak space of the expression")
    _add_budget_flags(p)
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("repl", help="interactive loop")
    p.add_argument("--db", default=None)
    _add_budget_flags(p)
    p.set_defaults(fn=cmd_repl)

    return top


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, TypecheckError, BindingError, ModelError, ast.AstError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InternalCheckError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
