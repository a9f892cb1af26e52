"""Expression evaluation: compositional, with budgets and space metering.

Every operator materializes its operand results, combines them, and releases
the operands; a solve node streams candidate assignments one at a time over
the candidate space (binary counter over the canonically ordered row
universe, last variable fastest), keeps one candidate live, and materializes
the solution set.  ``peak_space_units`` tracks the maximum over time of the
total size of live intermediate results, where the size of a value is its
recursive atom-occurrence count plus tuple count; the input database itself
is ambient and not counted.

Two shortcuts over literal re-evaluation, neither observable in results: an
equation side that mentions no bound variable is evaluated once per solve,
not once per candidate, and re-occurrences of one solve node whose free
inputs are the identical values reuse the previous solution set instead of
enumerating again (candidates_tested counts real enumerations).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import ast
from .model import (
    ATOM,
    Database,
    ModelError,
    Rel,
    RelType,
    count_relations,
    tuple_universe,
    value_size,
)
from .typecheck import infer_type


class EvalError(Exception):
    """Base class for evaluation failures."""


class BindingError(EvalError):
    def __init__(self, violations) -> None:
        self.violations = tuple(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class BudgetExceeded(EvalError):
    def __init__(self, which: str, path: str, detail: str) -> None:
        self.which = which  # "candidates" | "space" | "solutions"
        self.path = path
        super().__init__(f"{which} budget exceeded at {path or '<expr>'}: {detail}")


class InternalCheckError(EvalError):
    """An internal invariant failed; indicates a bug, not a user error."""


@dataclass(frozen=True)
class EvalBudget:
    """Caps for evaluation.  Defaults: 10^7 candidates per solve node,
    10^7 space units, 10^6 solutions per solve node."""

    max_candidates: int = 10_000_000
    max_space_units: int = 10_000_000
    max_solutions: int = 1_000_000

    def __post_init__(self):
        for name in ("max_candidates", "max_space_units", "max_solutions"):
            if getattr(self, name) < 1:
                raise ModelError(f"{name} must be positive")


@dataclass
class SolveStats:
    path: str
    candidates_tested: int = 0
    solutions_found: int = 0


@dataclass(frozen=True)
class EvalMetrics:
    peak_space_units: int
    solves: tuple[SolveStats, ...] = ()

    def format(self) -> str:
        lines = [f"peak_space_units {self.peak_space_units}"]
        for s in self.solves:
            lines.append(
                f"solve {s.path or '<expr>'}: candidates_tested {s.candidates_tested},"
                f" solutions_found {s.solutions_found}"
            )
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# operator kernels (value level)


def op_union(a: Rel, b: Rel) -> Rel:
    return Rel(a.rtype, a.rows | b.rows)


def op_difference(a: Rel, b: Rel) -> Rel:
    return Rel(a.rtype, a.rows - b.rows)


def op_product(a: Rel, b: Rel) -> Rel:
    rtype = RelType(a.rtype.components + b.rtype.components)
    return Rel(rtype, frozenset(x + y for x in a.rows for y in b.rows))


def op_project(a: Rel, indices: tuple[int, ...]) -> Rel:
    k = a.rtype.arity
    if any(i > k for i in indices):
        raise ModelError(f"project indices {indices} out of range for arity {k}")
    idx = tuple(i - 1 for i in indices)
    rtype = RelType(tuple(a.rtype.components[i] for i in idx))
    if len(idx) == 1:
        (i0,) = idx
        rows = frozenset((r[i0],) for r in a.rows)
    elif len(idx) == 2:
        i0, j0 = idx
        rows = frozenset((r[i0], r[j0]) for r in a.rows)
    else:
        rows = frozenset(tuple(r[i] for i in idx) for r in a.rows)
    return Rel(rtype, rows)


def op_select(a: Rel, i: int, op: str, j: int) -> Rel:
    k = a.rtype.arity
    if i > k or j > k:
        raise ModelError(f"select indices {i},{j} out of range for arity {k}")
    if a.rtype.components[i - 1] != a.rtype.components[j - 1]:
        raise ModelError("select compares columns of different types")
    i0, j0 = i - 1, j - 1
    if op == "=":
        rows = frozenset(r for r in a.rows if r[i0] == r[j0])
    elif op == "!=":
        rows = frozenset(r for r in a.rows if r[i0] != r[j0])
    else:
        raise ModelError(f"bad selection test {op!r}")
    return Rel(a.rtype, rows)


def op_nest(a: Rel, indices: tuple[int, ...]) -> Rel:
    """Append, per row, the set of projected sub-rows agreeing on all other columns."""
    comps = a.rtype.components
    k = len(comps)
    if any(i > k for i in indices):
        raise ModelError(f"nest indices {indices} out of range for arity {k}")
    idx = tuple(i - 1 for i in indices)
    idx_set = set(idx)
    rest = tuple(c for c in range(k) if c not in idx_set)
    nested_type = RelType(tuple(comps[i] for i in idx))
    groups: dict = {}
    for r in a.rows:
        key = tuple(r[c] for c in rest)
        g = groups.get(key)
        if g is None:
            groups[key] = g = set()
        g.add(tuple(r[i] for i in idx))
    packed = {key: Rel(nested_type, frozenset(g)) for key, g in groups.items()}
    rows = frozenset(r + (packed[tuple(r[c] for c in rest)],) for r in a.rows)
    return Rel(RelType(comps + (nested_type,)), rows)


def op_unnest(a: Rel, index: int) -> Rel:
    comps = a.rtype.components
    if index > len(comps):
        raise ModelError(f"unnest index {index} out of range for arity {len(comps)}")
    inner = comps[index - 1]
    if inner.is_atom:
        raise ModelError(f"unnest on atom column {index}")
    i0 = index - 1
    rows = frozenset(r + y for r in a.rows for y in r[i0].rows)
    return Rel(RelType(comps + inner.components), rows)


def op_powerset(a: Rel) -> Rel:
    subs = [frozenset()]
    for row in a.rows:
        single = frozenset((row,))
        subs += [s | single for s in subs]
    rows = frozenset((Rel(a.rtype, s),) for s in subs)
    return Rel(RelType((a.rtype,)), rows)


def domain_relation(atoms: tuple[str, ...]) -> Rel:
    return Rel(RelType((ATOM,)), frozenset((a,) for a in atoms))


# ---------------------------------------------------------------------------
# compilation to closures


class _Ctx:
    __slots__ = (
        "atoms",
        "domain_rel",
        "live",
        "peak",
        "max_candidates",
        "max_space",
        "max_solutions",
        "solve_stats",
        "solve_cache",
    )

    def __init__(self, db: Database, budget: EvalBudget) -> None:
        self.atoms = db.atoms
        self.domain_rel = domain_relation(db.atoms)
        self.live = 0
        self.peak = 0
        self.max_candidates = budget.max_candidates
        self.max_space = budget.max_space_units
        self.max_solutions = budget.max_solutions
        self.solve_stats: dict[str, SolveStats] = {}
        self.solve_cache: dict = {}  # node id -> (input values, solution set)

    def stats_for(self, path: str) -> SolveStats:
        s = self.solve_stats.get(path)
        if s is None:
            s = self.solve_stats[path] = SolveStats(path)
        return s

    def metrics(self) -> EvalMetrics:
        return EvalMetrics(
            peak_space_units=self.peak,
            solves=tuple(self.solve_stats[p] for p in sorted(self.solve_stats)),
        )


def _grow(ctx, amount: int, path: str) -> None:
    """Add freshly materialized units to the live total; track peak and cap.

    A cap violation always happens at a new historical peak, so the check
    nests under the peak update.
    """
    live = ctx.live + amount
    ctx.live = live
    if live > ctx.peak:
        ctx.peak = live
        if live > ctx.max_space:
            raise BudgetExceeded("space", path, f"live {live} units > cap {ctx.max_space}")


def _compile(e: ast.Expr, path: str):
    """Compile an expression into ``fn(env, ctx) -> Rel``.

    Contract: when ``fn`` returns, exactly the size of its result has been
    added to ``ctx.live``; the caller releases it after consuming it.
    Kernels are inlined here; the ``op_*`` functions above stay the readable
    reference versions for direct use.
    """
    size = value_size
    grow = _grow

    if isinstance(e, ast.Name):
        nm = e.name

        def run(env, ctx, _nm=nm, _p=path):
            v = env[_nm]
            grow(ctx, size(v), _p)
            return v

        return run

    if isinstance(e, ast.Domain):

        def run(env, ctx, _p=path):
            v = ctx.domain_rel
            grow(ctx, size(v), _p)
            return v

        return run

    if isinstance(e, (ast.Union, ast.Difference, ast.Product)):
        f1 = _compile(e.left, f"{path}.left" if path else "left")
        f2 = _compile(e.right, f"{path}.right" if path else "right")

        if isinstance(e, ast.Union):

            def run(env, ctx, _f1=f1, _f2=f2, _p=path):
                a = _f1(env, ctx)
                b = _f2(env, ctx)
                res = Rel(a.rtype, a.rows | b.rows)
                grow(ctx, size(res), _p)
                ctx.live -= size(a) + size(b)
                return res

            return run

        if isinstance(e, ast.Difference):

            def run(env, ctx, _f1=f1, _f2=f2, _p=path):
                a = _f1(env, ctx)
                b = _f2(env, ctx)
                res = Rel(a.rtype, a.rows - b.rows)
                grow(ctx, size(res), _p)
                ctx.live -= size(a) + size(b)
                return res

            return run

        rt_cache: list = [None]

        def run(env, ctx, _f1=f1, _f2=f2, _p=path, _rt=rt_cache):
            a = _f1(env, ctx)
            b = _f2(env, ctx)
            rt = _rt[0]
            if rt is None:
                _rt[0] = rt = RelType(a.rtype.components + b.rtype.components)
            res = Rel(rt, frozenset({x + y for x in a.rows for y in b.rows}))
            grow(ctx, size(res), _p)
            ctx.live -= size(a) + size(b)
            return res

        return run

    if isinstance(e, ast.Project):
        f = _compile(e.arg, f"{path}.arg" if path else "arg")
        idx = tuple(i - 1 for i in e.indices)
        rt_cache = [None]

        def run(env, ctx, _f=f, _idx=idx, _p=path, _rt=rt_cache):
            a = _f(env, ctx)
            rt = _rt[0]
            if rt is None:
                comps = a.rtype.components
                if any(i >= len(comps) for i in _idx):
                    raise ModelError(f"project indices out of range at {_p or '<expr>'}")
                _rt[0] = rt = RelType(tuple(comps[i] for i in _idx))
            if len(_idx) == 1:
                i0 = _idx[0]
                rows = {(r[i0],) for r in a.rows}
            elif len(_idx) == 2:
                i0, j0 = _idx
                rows = {(r[i0], r[j0]) for r in a.rows}
            else:
                rows = {tuple(r[i] for i in _idx) for r in a.rows}
            res = Rel(rt, frozenset(rows))
            grow(ctx, size(res), _p)
            ctx.live -= size(a)
            return res

        return run

    if isinstance(e, ast.Select):
        f = _compile(e.arg, f"{path}.arg" if path else "arg")
        i0, j0 = e.i - 1, e.j - 1
        want_eq = e.op == "="

        if want_eq:

            def run(env, ctx, _f=f, _p=path):
                a = _f(env, ctx)
                res = Rel(a.rtype, frozenset({r for r in a.rows if r[i0] == r[j0]}))
                grow(ctx, size(res), _p)
                ctx.live -= size(a)
                return res

        else:

            def run(env, ctx, _f=f, _p=path):
                a = _f(env, ctx)
                res = Rel(a.rtype, frozenset({r for r in a.rows if r[i0] != r[j0]}))
                grow(ctx, size(res), _p)
                ctx.live -= size(a)
                return res

        return run

    if isinstance(e, ast.Nest):
        f = _compile(e.arg, f"{path}.arg" if path else "arg")
        indices = e.indices

        def run(env, ctx, _f=f, _p=path):
            a = _f(env, ctx)
            res = op_nest(a, indices)
            grow(ctx, size(res), _p)
            ctx.live -= size(a)
            return res

        return run

    if isinstance(e, ast.Unnest):
        f = _compile(e.arg, f"{path}.arg" if path else "arg")
        i0 = e.index - 1
        rt_cache = [None]

        def run(env, ctx, _f=f, _p=path, _rt=rt_cache):
            a = _f(env, ctx)
            rt = _rt[0]
            if rt is None:
                comps = a.rtype.components
                inner = comps[i0]
                if inner.is_atom:
                    raise ModelError(f"unnest on atom column at {_p or '<expr>'}")
                _rt[0] = rt = RelType(comps + inner.components)
            res = Rel(rt, frozenset({r + y for r in a.rows for y in r[i0].rows}))
            grow(ctx, size(res), _p)
            ctx.live -= size(a)
            return res

        return run

    if isinstance(e, ast.Powerset):
        f = _compile(e.arg, f"{path}.arg" if path else "arg")

        def run(env, ctx, _f=f, _p=path):
            a = _f(env, ctx)
            # every subset costs at least one unit; refuse before materializing
            projected = 1 << len(a.rows)
            if ctx.live + projected > ctx.max_space:
                raise BudgetExceeded(
                    "space", _p, f"powerset of {len(a.rows)} rows needs >= {projected} units"
                )
            res = op_powerset(a)
            grow(ctx, size(res), _p)
            ctx.live -= size(a)
            return res

        return run

    if isinstance(e, ast.Solve):
        parts = _solve_parts(e, path)
        res_type = RelType(tuple(t for _, t in e.binders))
        fnames = tuple(sorted(ast.free_names(e)))
        key = id(e)

        def run(env, ctx, _parts=parts, _rt=res_type, _p=path, _node=e, _fn=fnames, _key=key):
            # Re-occurrences of one solve node whose free inputs are the very
            # same values reuse the previous solution set instead of
            # re-enumerating; candidates_tested counts real enumerations.
            cached = ctx.solve_cache.get(_key)
            if cached is not None:
                sig, rel = cached
                if len(sig) == len(_fn) and all(env[nm] is v for nm, v in zip(_fn, sig)):
                    grow(ctx, size(rel), _p)
                    return rel
            rows = _run_solve(_parts, env, ctx, _p, early_exit=False)
            rel = Rel(_rt, rows)
            ctx.solve_cache[_key] = (tuple(env[nm] for nm in _fn), rel)
            return rel

        return run

    raise ModelError(f"cannot compile {type(e).__name__}")


def _solve_parts(e: ast.Solve, path: str):
    names = e.var_names
    types = tuple(t for _, t in e.binders)
    fl = _compile(e.lhs, f"{path}.lhs" if path else "lhs")
    fr = _compile(e.rhs, f"{path}.rhs" if path else "rhs")
    bound = set(names)
    l_inv = not (ast.free_names(e.lhs) & bound)
    r_inv = not (ast.free_names(e.rhs) & bound)
    return names, types, fl, fr, l_inv, r_inv


def _iter_masks(counts):
    if len(counts) == 1:
        for m in range(counts[0]):
            yield (m,)
    else:
        yield from itertools.product(*map(range, counts))


def _subset_tables(universe):
    """Per 8-row chunk of the universe, all 2^chunk subsets, indexed by bit pattern.

    A candidate's rows are then the union of one table entry per mask byte,
    which is much cheaper than decoding bits row by row."""
    if not universe:
        return [[frozenset()]]
    tables = []
    for ofs in range(0, len(universe), 8):
        chunk = universe[ofs : ofs + 8]
        tables.append(
            [
                frozenset(chunk[i] for i in range(len(chunk)) if b >> i & 1)
                for b in range(1 << len(chunk))
            ]
        )
    return tables


def _rows_for_mask(tables, mask: int) -> frozenset:
    rows = tables[0][mask & 255]
    mask >>= 8
    t = 1
    while mask:
        rows |= tables[t][mask & 255]
        mask >>= 8
        t += 1
    return rows


def _run_solve(parts, env, ctx, path, early_exit):
    """Stream candidates; return the frozenset of solution rows (or, with
    early_exit, an empty/singleton frozenset stopped at the first hit).

    On return, ctx.live has grown by exactly the total size of the returned
    rows (the caller owns the materialized solution set).
    """
    names, types, fl, fr, l_inv, r_inv = parts
    size = value_size
    grow = _grow
    n = len(ctx.atoms)
    total = 1
    for t in types:
        total *= count_relations(t, n)
    if total > ctx.max_candidates:
        raise BudgetExceeded(
            "candidates", path, f"candidate space {total} exceeds cap {ctx.max_candidates}"
        )
    stats = ctx.stats_for(path)
    universes = [tuple_universe(t, ctx.atoms) for t in types]
    counts = [1 << len(u) for u in universes]
    all_tables = [_subset_tables(u) for u in universes]
    single = len(types) == 1
    t0 = types[0]
    tables0 = all_tables[0]
    n0 = names[0]
    max_solutions = ctx.max_solutions
    from_tables = _rows_for_mask
    const_l = fl(env, ctx) if l_inv else None
    const_r = fr(env, ctx) if r_inv else None
    sol_rows: list = []
    tested = 0
    found = 0
    try:
        for masks in _iter_masks(counts) if not single else range(counts[0]):
            if single:
                c0 = Rel(t0, from_tables(tables0, masks))
                cand = (c0,)
                csize = size(c0)
                env[n0] = c0
            else:
                cand = tuple(
                    Rel(t, from_tables(tb, m)) for t, tb, m in zip(types, all_tables, masks)
                )
                csize = 0
                for v in cand:
                    csize += size(v)
                for nm, v in zip(names, cand):
                    env[nm] = v
            grow(ctx, csize, path)
            tested += 1
            va = const_l if l_inv else fl(env, ctx)
            vb = const_r if r_inv else fr(env, ctx)
            hit = va.rows == vb.rows
            if not l_inv:
                ctx.live -= size(va)
            if not r_inv:
                ctx.live -= size(vb)
            if hit:
                found += 1
                if found > max_solutions:
                    raise BudgetExceeded(
                        "solutions", path, f"more than {max_solutions} solutions"
                    )
                sol_rows.append(cand)
                grow(ctx, 1 + csize, path)  # solution row stays live
                if early_exit:
                    ctx.live -= csize
                    return frozenset(sol_rows)
            ctx.live -= csize
    except BudgetExceeded as exc:
        raise BudgetExceeded(
            exc.which,
            exc.path,
            f"{exc.args[0].split(': ', 1)[-1]} after {tested} candidates,"
            f" {found} solutions at this node",
        ) from None
    finally:
        stats.candidates_tested += tested
        stats.solutions_found += found
        for nm in names:
            env.pop(nm, None)
        if l_inv and const_l is not None:
            ctx.live -= size(const_l)
        if r_inv and const_r is not None:
            ctx.live -= size(const_r)
    return frozenset(sol_rows)


# ---------------------------------------------------------------------------
# public entry points


def _precheck(e: ast.Expr, db: Database) -> RelType:
    violations = ast.check_bindings(e)
    if violations:
        raise BindingError(violations)
    return infer_type(e, db.schema)


def evaluate(e: ast.Expr, db: Database, budget: EvalBudget | None = None):
    """Evaluate a well-typed expression on a database.

    Returns ``(value, metrics)``; the output type is checked against the
    inferred type as a runtime soundness invariant.
    """
    expected = _precheck(e, db)
    ctx = _Ctx(db, budget or EvalBudget())
    env = dict(db.relations)
    res = _compile(e, "")(env, ctx)
    if res.rtype != expected:
        raise InternalCheckError(
            f"evaluator produced type {res.rtype}, typechecker said {expected}"
        )
    return res, ctx.metrics()


def solve(binders, lhs: ast.Expr, rhs: ast.Expr, db: Database, budget: EvalBudget | None = None):
    """Solution set of the equation ``lhs = rhs`` in the given variables."""
    return evaluate(ast.Solve(tuple(binders), lhs, rhs), db, budget)


def solve_nonempty(
    binders, lhs: ast.Expr, rhs: ast.Expr, db: Database, budget: EvalBudget | None = None
) -> bool:
    """True iff the equation has at least one solution (stops at the first)."""
    node = ast.Solve(tuple(binders), lhs, rhs)
    _precheck(node, db)
    ctx = _Ctx(db, budget or EvalBudget())
    env = dict(db.relations)
    rows = _run_solve(_solve_parts(node, ""), env, ctx, "", early_exit=True)
    return bool(rows)
