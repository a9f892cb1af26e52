"""Independent reference implementations used to check the engine.

Values here are plain Python data: an atom is a str, a relation is a
frozenset of tuples.  Operators are written as direct set comprehensions
from their definitions, and the brute-force equation solver enumerates
candidate assignments with itertools, so none of this shares code with the
engine's kernels, compiler, or solve loop.
"""

from __future__ import annotations

import itertools
import random

from eqalg import ast
from eqalg.model import ATOM, Database, Rel, RelType, flat_type
from eqalg.typecheck import infer_type

# ---------------------------------------------------------------------------
# conversions


def to_plain(v):
    if isinstance(v, str):
        return v
    return frozenset(tuple(to_plain(c) for c in row) for row in v.rows)


def from_plain(rows, rtype: RelType) -> Rel:
    out = set()
    for row in rows:
        out.add(tuple(_component_from_plain(c, t) for c, t in zip(row, rtype.components)))
    return Rel(rtype, frozenset(out))


def _component_from_plain(c, t: RelType):
    if t.is_atom:
        return c
    return from_plain(c, t)


# ---------------------------------------------------------------------------
# operators, straight from the definitions


def o_union(r1, r2):
    return r1 | r2


def o_difference(r1, r2):
    return r1 - r2


def o_product(r1, r2):
    return frozenset(x + y for x in r1 for y in r2)


def o_project(r, indices):
    return frozenset(tuple(row[i - 1] for i in indices) for row in r)


def o_select(r, i, op, j):
    if op == "=":
        return frozenset(row for row in r if row[i - 1] == row[j - 1])
    return frozenset(row for row in r if row[i - 1] != row[j - 1])


def o_nest(r, indices, arity):
    chosen = set(indices)
    rest = [c for c in range(1, arity + 1) if c not in chosen]
    out = set()
    for x in r:
        group = frozenset(
            tuple(y[i - 1] for i in indices)
            for y in r
            if all(y[c - 1] == x[c - 1] for c in rest)
        )
        out.add(x + (group,))
    return frozenset(out)


def o_unnest(r, i):
    return frozenset(x + y for x in r for y in x[i - 1])


def o_powerset(r):
    base = list(r)
    out = []
    for k in range(len(base) + 1):
        for combo in itertools.combinations(base, k):
            out.append((frozenset(combo),))
    return frozenset(out)


def o_domain(atoms):
    return frozenset((a,) for a in atoms)


# ---------------------------------------------------------------------------
# a full reference interpreter (types threaded for empties)


def oracle_eval(e: ast.Expr, env: dict, atoms, schema: dict):
    """Evaluate an expression to a plain value using only the comprehensions above."""
    if isinstance(e, ast.Name):
        return env[e.name]
    if isinstance(e, ast.Domain):
        return o_domain(atoms)
    if isinstance(e, ast.Union):
        return o_union(oracle_eval(e.left, env, atoms, schema), oracle_eval(e.right, env, atoms, schema))
    if isinstance(e, ast.Difference):
        return o_difference(
            oracle_eval(e.left, env, atoms, schema), oracle_eval(e.right, env, atoms, schema)
        )
    if isinstance(e, ast.Product):
        return o_product(
            oracle_eval(e.left, env, atoms, schema), oracle_eval(e.right, env, atoms, schema)
        )
    if isinstance(e, ast.Project):
        return o_project(oracle_eval(e.arg, env, atoms, schema), e.indices)
    if isinstance(e, ast.Select):
        return o_select(oracle_eval(e.arg, env, atoms, schema), e.i, e.op, e.j)
    if isinstance(e, ast.Nest):
        arity = infer_type(e.arg, schema).arity
        return o_nest(oracle_eval(e.arg, env, atoms, schema), e.indices, arity)
    if isinstance(e, ast.Unnest):
        return o_unnest(oracle_eval(e.arg, env, atoms, schema), e.index)
    if isinstance(e, ast.Powerset):
        return o_powerset(oracle_eval(e.arg, env, atoms, schema))
    if isinstance(e, ast.Solve):
        return oracle_solve(e.binders, e.lhs, e.rhs, env, atoms, schema)
    raise AssertionError(f"oracle cannot evaluate {type(e).__name__}")


def plain_relations(t: RelType, atoms):
    """Every plain relation of a type over the atoms, via combinations."""
    spaces = []
    for c in t.components:
        if c.is_atom:
            spaces.append(sorted(atoms))
        else:
            spaces.append(sorted(plain_relations(c, atoms), key=repr))
    universe = [tuple(combo) for combo in itertools.product(*spaces)]
    out = []
    for k in range(len(universe) + 1):
        for combo in itertools.combinations(universe, k):
            out.append(frozenset(combo))
    return out


def oracle_solve(binders, lhs, rhs, env, atoms, schema):
    """Brute-force solution set by filtering every candidate assignment."""
    names = [nm for nm, _ in binders]
    spaces = [plain_relations(t, atoms) for _, t in binders]
    inner_schema = dict(schema)
    for nm, t in binders:
        inner_schema[nm] = t
    out = set()
    for assignment in itertools.product(*spaces):
        inner = dict(env)
        for nm, v in zip(names, assignment):
            inner[nm] = v
        if oracle_eval(lhs, inner, atoms, inner_schema) == oracle_eval(
            rhs, inner, atoms, inner_schema
        ):
            out.add(tuple(assignment))
    return frozenset(out)


def oracle_solution_set(binders, lhs, rhs, db: Database):
    return oracle_solve(
        binders,
        lhs,
        rhs,
        {name: to_plain(rel) for name, rel in db.relations.items()},
        db.atoms,
        db.schema,
    )


# ---------------------------------------------------------------------------
# random generation helpers


def random_type(rng: random.Random, max_depth=2, max_arity=3) -> RelType:
    def comp(depth):
        if depth <= 0 or rng.random() < 0.7:
            return ATOM
        return build(depth - 1)

    def build(depth):
        arity = rng.randint(1, max_arity)
        return RelType(tuple(comp(depth) for _ in range(arity)))

    return build(max_depth)


def random_value(rng: random.Random, t: RelType, atoms, max_rows=4) -> Rel:
    rows = set()
    for _ in range(rng.randint(0, max_rows)):
        rows.add(tuple(_random_component(rng, c, atoms, max_rows) for c in t.components))
    return Rel(t, frozenset(rows))


def _random_component(rng, c: RelType, atoms, max_rows):
    if c.is_atom:
        return rng.choice(atoms)
    return random_value(rng, c, atoms, max_rows=max(1, max_rows - 1))


def random_flat_rel(rng: random.Random, arity: int, atoms, density=0.4) -> Rel:
    rows = {
        combo
        for combo in itertools.product(sorted(atoms), repeat=arity)
        if rng.random() < density
    }
    return Rel(flat_type(arity), frozenset(rows))


def random_digraph(rng: random.Random, n: int, p: float | None = None) -> Rel:
    atoms = tuple(f"x{i}" for i in range(1, n + 1))
    if p is None:
        p = 0.5
    return random_flat_rel(rng, 2, atoms, density=p)


# random well-typed expressions ------------------------------------------------

_UNARY = RelType((ATOM,))


def random_expr(rng: random.Random, schema: dict, steps=6, allow_solve=True, solve_var_types=None):
    """Grow a pool of well-typed expressions over the schema; return one.

    Kept deliberately tame: small arities, nesting depth capped, powersets
    rare, solve variables flat, so evaluation stays affordable on tiny
    domains.
    """
    if solve_var_types is None:
        solve_var_types = (_UNARY, flat_type(2))
    pool = [(ast.Name(nm), t) for nm, t in sorted(schema.items())]
    pool.append((ast.Domain(), _UNARY))
    fresh = itertools.count(1)

    def depth_of(t: RelType) -> int:
        if t.is_atom:
            return 0
        return 1 + max(depth_of(c) for c in t.components)

    for _ in range(steps):
        op = rng.choice(
            ["union", "minus", "times", "project", "select", "nest", "unnest", "solve", "power"]
        )
        e1, t1 = rng.choice(pool)
        if op in ("union", "minus"):
            same = [(e, t) for e, t in pool if t == t1]
            e2, _ = rng.choice(same)
            node = ast.Union(e1, e2) if op == "union" else ast.Difference(e1, e2)
            pool.append((node, t1))
        elif op == "times":
            e2, t2 = rng.choice(pool)
            if t1.arity + t2.arity <= 5:
                pool.append((ast.Product(e1, e2), RelType(t1.components + t2.components)))
        elif op == "project":
            k = t1.arity
            indices = tuple(rng.randint(1, k) for _ in range(rng.randint(1, k)))
            pool.append(
                (ast.Project(indices, e1), RelType(tuple(t1.components[i - 1] for i in indices)))
            )
        elif op == "select":
            k = t1.arity
            pairs = [
                (i, j)
                for i in range(1, k + 1)
                for j in range(1, k + 1)
                if t1.components[i - 1] == t1.components[j - 1]
            ]
            i, j = rng.choice(pairs)
            pool.append((ast.Select(i, rng.choice(["=", "!="]), j, e1), t1))
        elif op == "nest":
            if depth_of(t1) >= 2 or t1.arity > 3:
                continue
            k = t1.arity
            count = rng.randint(1, k)
            indices = tuple(sorted(rng.sample(range(1, k + 1), count)))
            nested = RelType(tuple(t1.components[i - 1] for i in indices))
            pool.append((ast.Nest(indices, e1), RelType(t1.components + (nested,))))
        elif op == "unnest":
            cols = [i for i, c in enumerate(t1.components, start=1) if not c.is_atom]
            if not cols:
                continue
            i = rng.choice(cols)
            inner = t1.components[i - 1]
            pool.append((ast.Unnest(i, e1), RelType(t1.components + inner.components)))
        elif op == "power":
            if rng.random() < 0.85 or depth_of(t1) >= 2:
                continue
            pool.append((ast.Powerset(e1), RelType((t1,))))
        elif op == "solve" and allow_solve:
            var = f"V{next(fresh)}"
            vt = rng.choice(list(solve_var_types))
            base = [(e, t) for e, t in pool if t == vt]
            if base:
                eb, _ = rng.choice(base)
                node = ast.Solve(((var, vt),), ast.Union(ast.Name(var), eb), eb)
            else:
                node = ast.Solve(((var, vt),), ast.Name(var), ast.Name(var))
            pool.append((node, RelType((vt,))))
    # prefer something non-trivial
    candidates = pool[len(schema) + 1 :] or pool
    return rng.choice(candidates)[0]
