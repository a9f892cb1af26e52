import itertools
import random

import pytest

from eqalg import ast
from eqalg.ast import Name
from eqalg.evaluator import EvalBudget, evaluate, op_nest, solve, solve_nonempty
from eqalg.model import Database, ModelError, Rel, RelType, flat_type
from eqalg.constructions import (
    build_nest_sparse_expr,
    build_parity_eq,
    build_power_table,
    build_powerset_eq,
    build_powerset_of_powerset_eq,
    build_run,
    build_run_equation,
    build_singleton_eq,
    build_tc_powerset_expr,
    build_tc_sparse_expr,
    check_run_equation,
    compose,
    registry,
    tc_sparse_via_harness,
    warshall_tc,
    _oracle_parity,
)

from oracles import random_flat_rel

FLAT1 = flat_type(1)
FLAT2 = flat_type(2)
BUDGET = EvalBudget(max_candidates=10**7, max_space_units=2 * 10**9, max_solutions=10**6)


def binrel(*pairs):
    return Rel(FLAT2, frozenset(pairs))


def db_with_r(atoms, r):
    return Database(atoms, {"R": r})


# ---------------------------------------------------------------------------
# composition and power tables


def test_compose_examples():
    assert compose(binrel(("a", "b")), binrel(("b", "c"))) == binrel(("a", "c"))
    assert compose(binrel(("a", "b")), binrel()) == binrel()
    got = compose(binrel(("a", "b"), ("b", "c")), binrel(("b", "c"), ("c", "a")))
    assert got == binrel(("a", "c"), ("b", "a"))


def test_compose_rejects_non_binary():
    with pytest.raises(ModelError):
        compose(Rel(FLAT1, frozenset()), binrel())


def test_power_table_path():
    r = binrel(("a", "b"), ("b", "c"))
    table = build_power_table(r)
    assert table.power[2] == binrel(("a", "c"))
    assert table.upto[2] == binrel(("a", "b"), ("b", "c"), ("a", "c"))
    assert table.fresh[2] == binrel(("a", "c"))
    assert table.fresh[3] == binrel()
    assert table.upto[len(r.rows)] == warshall_tc(r)


def test_power_table_closed_relation_has_no_fresh_pairs():
    r = binrel(("a", "b"), ("b", "c"), ("a", "c"))
    table = build_power_table(r)
    assert table.fresh[2] == binrel()


def test_power_table_empty():
    table = build_power_table(binrel())
    assert table.power[1] == binrel()


# ---------------------------------------------------------------------------
# the stage relation


def test_run_path_has_expected_rows():
    r = binrel(("a", "b"), ("b", "c"))
    run = build_run(r)
    # one non-empty stage: 2 reached pairs x 3 next pairs x 1 fresh pair
    assert len(run.rows) == 6
    assert run.rtype == flat_type(6)


def test_run_empty_for_closed():
    assert build_run(binrel(("a", "b"), ("b", "c"), ("a", "c"))).rows == frozenset()


def _independent_run(r: Rel) -> frozenset:
    """Stage relation recomputed with dict-based relation powers."""
    pairs = set(r.rows)
    powers = [None, set(pairs)]
    for _ in range(len(pairs) + 1):
        prev = powers[-1]
        powers.append({(a, d) for (a, b) in prev for (c, d) in pairs if b == c})
    upto = [set()]
    for i in range(1, len(powers)):
        upto.append(upto[-1] | powers[i])
    out = set()
    for i in range(1, len(pairs) + 1):
        fresh = powers[i + 1] - upto[i]
        for u in upto[i]:
            for v in upto[i + 1]:
                for w in fresh:
                    out.add(u + v + w)
    return frozenset(out)


def test_run_matches_independent_reimplementation():
    rng = random.Random(8)
    path4 = binrel(("a", "b"), ("b", "c"), ("c", "d"))
    assert build_run(path4).rows == _independent_run(path4)
    for _ in range(15):
        n = rng.randint(2, 5)
        atoms = tuple(f"x{i}" for i in range(1, n + 1))
        r = random_flat_rel(rng, 2, atoms, 0.3)
        assert build_run(r).rows == _independent_run(r)


def test_run_satisfies_equation_and_mutants_fail():
    rng = random.Random(77)
    r = binrel(("a", "b"), ("b", "c"))
    db = db_with_r(("a", "b", "c"), r)
    run = build_run(r)
    assert check_run_equation(db, run, BUDGET)
    removed = Rel(flat_type(6), run.rows - {sorted(run.rows)[0]})
    assert not check_run_equation(db, removed, BUDGET)
    foreign = Rel(flat_type(6), run.rows | {("a",) * 6})
    assert not check_run_equation(db, foreign, BUDGET)


def test_run_equation_free_names():
    binders, lhs, rhs = build_run_equation()
    node = ast.Solve(binders, lhs, rhs)
    assert ast.free_names(node) == {"R"}


def test_tc_sparse_harness_examples():
    db = db_with_r(("a", "b", "c"), binrel(("a", "b"), ("b", "c")))
    assert tc_sparse_via_harness(db, BUDGET) == binrel(("a", "b"), ("b", "c"), ("a", "c"))
    closed = binrel(("a", "b"), ("b", "c"), ("a", "c"))
    assert tc_sparse_via_harness(db_with_r(("a", "b", "c"), closed), BUDGET) == closed
    cycle = binrel(("a", "b"), ("b", "a"))
    assert tc_sparse_via_harness(db_with_r(("a", "b"), cycle), BUDGET) == binrel(
        ("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")
    )


def test_tc_sparse_expr_is_wellformed():
    e = build_tc_sparse_expr()
    assert ast.check_bindings(e) == []
    from eqalg.typecheck import infer_type

    assert infer_type(e, {"R": FLAT2}) == FLAT2


# ---------------------------------------------------------------------------
# minimization pipeline


def test_tc_powerset_single_edge():
    got, _ = evaluate(build_tc_powerset_expr(), db_with_r(("a", "b"), binrel(("a", "b"))), BUDGET)
    assert got == binrel(("a", "b"))


def test_tc_powerset_cycle():
    got, _ = evaluate(
        build_tc_powerset_expr(), db_with_r(("a", "b"), binrel(("a", "b"), ("b", "a"))), BUDGET
    )
    assert got == binrel(("a", "a"), ("a", "b"), ("b", "a"), ("b", "b"))


def test_inner_solve_collects_closed_supersets():
    r = binrel(("a", "b"))
    db = db_with_r(("a", "b"), r)
    T = Name("T")
    etc = ast.Union(
        ast.Difference(ast.Project((1, 4), ast.Select(2, "=", 3, ast.Product(T, T))), T),
        ast.Difference(Name("R"), T),
    )
    got, _ = solve((("T", FLAT2),), etc, ast.Difference(Name("R"), Name("R")), db, BUDGET)
    expected = set()
    pairs = [("a", "a"), ("a", "b"), ("b", "a"), ("b", "b")]
    for k in range(5):
        for combo in itertools.combinations(pairs, k):
            t = frozenset(combo)
            closed = all((x, w) in t for (x, y) in t for (z, w) in t if y == z)
            if r.rows <= t and closed:
                expected.add((Rel(FLAT2, t),))
    assert got.rows == frozenset(expected)


# ---------------------------------------------------------------------------
# parity


def test_parity_nonempty_iff_even():
    binders, lhs, rhs = build_parity_eq()
    for n, expect in [(1, False), (2, True), (3, False), (4, True)]:
        atoms = tuple(f"x{i}" for i in range(1, n + 1))
        assert solve_nonempty(binders, lhs, rhs, Database(atoms, {}), BUDGET) is expect


def test_parity_two_atoms_solutions():
    binders, lhs, rhs = build_parity_eq()
    got, _ = solve(binders, lhs, rhs, Database(("a", "b"), {}), BUDGET)
    assert got.rows == frozenset({(binrel(("a", "b")),), (binrel(("b", "a")),)})


def test_parity_counts_match_combinatorial_oracle_up_to_four():
    binders, lhs, rhs = build_parity_eq()
    for n in (1, 2, 3, 4):
        atoms = tuple(f"x{i}" for i in range(1, n + 1))
        db = Database(atoms, {})
        got, _ = solve(binders, lhs, rhs, db, BUDGET)
        assert got == _oracle_parity(db)


def test_parity_body_empty_on_perfect_matching():
    _, lhs, _ = build_parity_eq()
    db = Database(("a", "b"), {"X": binrel(("a", "b"))})
    v, _ = evaluate(lhs, db, BUDGET)
    assert not v.rows


# ---------------------------------------------------------------------------
# singleton


def test_singleton_solutions_listed():
    binders, lhs, rhs = build_singleton_eq()
    got, _ = solve(binders, lhs, rhs, Database(("a", "b", "c"), {}), BUDGET)
    singles = {(Rel(FLAT1, frozenset({(a,)})),) for a in ("a", "b", "c")}
    assert got.rows == frozenset(singles)


def test_singleton_count_is_linear():
    binders, lhs, rhs = build_singleton_eq()
    for n in range(1, 7):
        atoms = tuple(f"x{i}" for i in range(1, n + 1))
        got, _ = solve(binders, lhs, rhs, Database(atoms, {}), BUDGET)
        assert len(got.rows) == n


# ---------------------------------------------------------------------------
# subset collections


def test_powerset_eq_matches_powerset_operator():
    db = Database(("a", "b"), {"R": Rel(FLAT1, frozenset({("a",)}))})
    via_solve, _ = evaluate(build_powerset_eq(), db, BUDGET)
    via_op, _ = evaluate(ast.Powerset(Name("R")), db, BUDGET)
    assert via_solve == via_op


def test_powerset_eq_cardinality():
    for rows in ([], [("a",)], [("a",), ("b",)], [("a",), ("b",), ("c",)]):
        atoms = ("a", "b", "c")
        db = Database(atoms, {"R": Rel(FLAT1, frozenset(rows))})
        got, _ = evaluate(build_powerset_eq(), db, BUDGET)
        assert len(got.rows) == 2 ** len(rows)


def test_powerset_of_powerset_counts():
    db = Database(("a",), {"R": Rel(FLAT1, frozenset({("a",)}))})
    got, _ = evaluate(build_powerset_of_powerset_eq(), db, BUDGET)
    assert len(got.rows) == 4


# ---------------------------------------------------------------------------
# nesting without the nest operator


def test_nest_sparse_example():
    r = binrel(("a", "b"), ("a", "c"))
    got, _ = evaluate(build_nest_sparse_expr(), db_with_r(("a", "b", "c"), r), BUDGET)
    assert got == op_nest(r, (2,))


def test_nest_sparse_empty():
    got, _ = evaluate(build_nest_sparse_expr(), db_with_r(("a",), binrel()), BUDGET)
    assert got.rows == frozenset()


def test_nest_sparse_random_matches_op_nest():
    rng = random.Random(31)
    for _ in range(15):
        n = rng.randint(1, 5)
        atoms = tuple(f"x{i}" for i in range(1, n + 1))
        r = random_flat_rel(rng, 2, atoms, 0.35)
        got, _ = evaluate(build_nest_sparse_expr(), db_with_r(atoms, r), BUDGET)
        assert got == op_nest(r, (2,))


def test_nest_sparse_solution_count_is_first_column_plus_one():
    binders = None
    e = build_nest_sparse_expr()
    # dig out the inner solve to count its solutions directly
    solve_node = e
    while not isinstance(solve_node, ast.Solve):
        solve_node = ast.children(solve_node)[0]
    rng = random.Random(9)
    for _ in range(10):
        n = rng.randint(1, 4)
        atoms = tuple(f"x{i}" for i in range(1, n + 1))
        r = random_flat_rel(rng, 2, atoms, 0.4)
        got, _ = solve(solve_node.binders, solve_node.lhs, solve_node.rhs, db_with_r(atoms, r), BUDGET)
        firsts = {a for (a, _) in r.rows}
        assert len(got.rows) == len(firsts) + 1  # plus the all-empty pair


def test_nest_sparse_rejects_other_indices():
    with pytest.raises(ModelError):
        build_nest_sparse_expr((1,))


def test_warshall_examples():
    assert warshall_tc(binrel(("a", "b"), ("b", "c"))) == binrel(
        ("a", "b"), ("b", "c"), ("a", "c")
    )
    assert warshall_tc(binrel()) == binrel()
    rng = random.Random(14)
    for _ in range(10):
        r = random_flat_rel(rng, 2, ("a", "b", "c", "d"), 0.3)
        once = warshall_tc(r)
        assert warshall_tc(once) == once


def _bfs_closure(rows):
    out = set()
    succ = {}
    for a, b in rows:
        succ.setdefault(a, set()).add(b)
    for start in {a for a, _ in rows}:
        frontier = set(succ.get(start, ()))
        reached = set()
        while frontier:
            reached |= frontier
            frontier = {c for b in frontier for c in succ.get(b, ())} - reached
        out.update((start, b) for b in reached)
    return frozenset(out)


def test_warshall_agrees_with_bfs_reachability():
    rng = random.Random(15)
    for _ in range(40):
        n = rng.randint(1, 6)
        atoms = tuple(f"x{i}" for i in range(1, n + 1))
        r = random_flat_rel(rng, 2, atoms, rng.choice([0.15, 0.3, 0.6]))
        assert warshall_tc(r).rows == _bfs_closure(r.rows)


def test_registry_exposes_all_constructions():
    names = set(registry())
    assert names == {"parity", "singleton", "powerset", "tc-powerset", "tc-sparse", "nest-sparse"}
