"""Core data model: relation types, nested set values, databases, enumeration.

A relation type is either the atom type or a tuple of component types.  A
value is an atom symbol (plain ``str``) or a :class:`Rel`, a finite set of
equal-typed tuples.  ``Rel`` deduplicates on construction and keeps its rows
in a ``frozenset``; the canonical *order* of rows (the single source of
determinism for rendering and enumeration) is materialized lazily.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union


class ModelError(Exception):
    """Malformed type, value, or database."""


ATOM_RE = re.compile(r"[A-Za-z0-9_]+\Z")


# ---------------------------------------------------------------------------
# relation types


@dataclass(frozen=True)
class RelType:
    """Shape descriptor: ``components is None`` marks the atom type."""

    components: tuple[RelType, ...] | None = None

    def __post_init__(self) -> None:
        comps = self.components
        if comps is not None and len(comps) == 0:
            raise ModelError("tuple type needs at least one component")
        # units per row when every component is an atom; None otherwise
        flat_size = None
        if comps is not None and all(c.components is None for c in comps):
            flat_size = len(comps) + 1
        object.__setattr__(self, "flat_row_size", flat_size)

    @property
    def is_atom(self) -> bool:
        return self.components is None

    @property
    def arity(self) -> int:
        if self.components is None:
            raise ModelError("atom type has no arity")
        return len(self.components)

    @property
    def is_flat(self) -> bool:
        """True for tuple types whose components are all atoms."""
        return self.flat_row_size is not None

    def __str__(self) -> str:
        if self.components is None:
            return "0"
        return "(" + ",".join(str(c) for c in self.components) + ")"


ATOM = RelType()


def flat_type(arity: int) -> RelType:
    if arity < 1:
        raise ModelError("arity must be >= 1")
    return RelType((ATOM,) * arity)


# ---------------------------------------------------------------------------
# values

Value = Union[str, "Rel"]
Row = "tuple[Value, ...]"


class Rel:
    """A nested relation value: its type plus a frozenset of rows.

    Construction deduplicates (set semantics).  Instances are immutable and
    hashable; hash, size, and the sorted row list are computed on demand and
    cached, so they are cheap to use as tuple components of other relations.
    """

    __slots__ = ("rtype", "rows", "_hash", "_size", "_key", "_sorted")

    def __init__(self, rtype: RelType, rows: Iterable[tuple]) -> None:
        if rtype.is_atom:
            raise ModelError("relation value cannot have atom type")
        self.rtype = rtype
        self.rows = rows if isinstance(rows, frozenset) else frozenset(rows)
        self._hash = None
        self._size = None
        self._key = None
        self._sorted = None

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Rel):
            return NotImplemented
        return self.rows == other.rows and self.rtype == other.rtype

    def __ne__(self, other: object) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = self._hash = hash((self.rtype, self.rows))
        return h

    def __len__(self) -> int:
        return len(self.rows)

    def __repr__(self) -> str:
        from .parser import render_relation  # cycle-free at call time

        return f"Rel({self.rtype}, {render_relation(self)})"

    def sorted_rows(self) -> tuple:
        """Rows in canonical order (atoms lexicographic, relations by sorted row lists)."""
        s = self._sorted
        if s is None:
            s = self._sorted = tuple(sorted(self.rows, key=row_sort_key))
        return s


def value_sort_key(v: Value):
    """Total-order key; agrees with equality on values of one type."""
    if isinstance(v, str):
        return v
    k = v._key
    if k is None:
        k = v._key = tuple(sorted(row_sort_key(r) for r in v.rows))
    return k


def row_sort_key(row: tuple):
    return tuple(value_sort_key(c) for c in row)


def value_size(v: Value) -> int:
    """Space units of a value: recursive atom occurrences plus tuple count."""
    if type(v) is str:
        return 1
    s = v._size
    if s is None:
        per_row = v.rtype.flat_row_size
        if per_row is not None:
            s = len(v.rows) * per_row
        else:
            s = 0
            for row in v.rows:
                s += 1
                for c in row:
                    s += value_size(c)
        v._size = s
    return s


def check_value(v: Value, expected: RelType) -> None:
    """Deep structural validation of a value against a type."""
    if expected.is_atom:
        if not isinstance(v, str):
            raise ModelError(f"expected an atom, got a relation of type {getattr(v, 'rtype', '?')}")
        if not ATOM_RE.match(v):
            raise ModelError(f"bad atom symbol {v!r}")
        return
    if not isinstance(v, Rel):
        raise ModelError(f"expected a relation of type {expected}, got atom {v!r}")
    if v.rtype != expected:
        raise ModelError(f"value has type {v.rtype}, expected {expected}")
    comps = expected.components
    k = len(comps)
    for row in v.rows:
        if not isinstance(row, tuple) or len(row) != k:
            raise ModelError(f"row {row!r} does not have arity {k}")
        for c, t in zip(row, comps):
            check_value(c, t)


def canonicalize(v: Value) -> Value:
    """Return the canonical representative of ``v`` (validated, deduplicated).

    Deduplication happens at every nesting level on construction, so this
    validates deeply and returns the value itself; it is idempotent.
    """
    if isinstance(v, str):
        if not ATOM_RE.match(v):
            raise ModelError(f"bad atom symbol {v!r}")
        return v
    check_value(v, v.rtype)
    return v


def deep_equal(v1: Value, v2: Value) -> bool:
    """Set equality of two values of the same type; type mismatch is an error."""
    if isinstance(v1, str) and isinstance(v2, str):
        return v1 == v2
    if isinstance(v1, Rel) and isinstance(v2, Rel):
        if v1.rtype != v2.rtype:
            raise ModelError(f"deep_equal across types {v1.rtype} and {v2.rtype}")
        return v1.rows == v2.rows
    raise ModelError("deep_equal between an atom and a relation")


def empty_rel(rtype: RelType) -> Rel:
    return Rel(rtype, frozenset())


# ---------------------------------------------------------------------------
# enumeration of all relations of a type over a domain


def count_relations(t: RelType, n: int) -> int:
    """Number of relations of type ``t`` over a domain of ``n`` atoms (exact)."""
    if t.is_atom:
        raise ModelError("count_relations needs a tuple type")
    if n < 1:
        raise ModelError("domain size must be >= 1")
    tuples = 1
    for c in t.components:
        tuples *= n if c.is_atom else count_relations(c, n)
    return 1 << tuples


def tuple_universe(t: RelType, atoms: tuple[str, ...]) -> list:
    """All possible rows of type ``t`` over ``atoms``, in canonical order."""
    spaces = []
    for c in t.components:
        if c.is_atom:
            spaces.append(list(atoms))
        else:
            spaces.append(sorted(enumerate_relations(c, atoms), key=value_sort_key))
    out = [()]
    for space in spaces:
        out = [row + (v,) for row in out for v in space]
    return out


def enumerate_relations(t: RelType, domain: Iterable[str]) -> Iterator[Rel]:
    """Yield every relation of type ``t`` over ``domain`` exactly once.

    Order: the row universe is sorted canonically and subsets follow a binary
    counter with the lowest row as the lowest bit.  Lazy: one candidate is
    materialized at a time beyond the fixed universe bookkeeping.
    """
    if t.is_atom:
        raise ModelError("cannot enumerate relations of atom type")
    atoms = tuple(sorted(set(domain)))
    if not atoms:
        raise ModelError("domain must be non-empty")
    universe = tuple_universe(t, atoms)
    for mask in range(1 << len(universe)):
        yield Rel(t, rows_from_mask(universe, mask))


def rows_from_mask(universe: list, mask: int) -> frozenset:
    sel = []
    while mask:
        low = mask & -mask
        sel.append(universe[low.bit_length() - 1])
        mask ^= low
    return frozenset(sel)


# ---------------------------------------------------------------------------
# databases


NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class Database:
    """A non-empty finite atom domain plus named, typed relations.

    Immutable after construction; every atom reachable inside a stored
    relation must belong to the domain, and no relation may be named ``D``
    (the reserved domain symbol).
    """

    __slots__ = ("domain", "relations", "atoms")

    def __init__(self, domain: Iterable[str], relations: Mapping[str, Rel]) -> None:
        self.domain = frozenset(domain)
        self.relations = dict(relations)
        if not self.domain:
            raise ModelError("database domain must be non-empty")
        for a in self.domain:
            if not isinstance(a, str) or not ATOM_RE.match(a):
                raise ModelError(f"bad atom symbol {a!r}")
        for name, rel in self.relations.items():
            if not NAME_RE.match(name) or name == "D":
                raise ModelError(f"bad relation name {name!r}")
            if not isinstance(rel, Rel):
                raise ModelError(f"relation {name} must be a Rel value")
            check_value(rel, rel.rtype)
            for atom in iter_atoms(rel):
                if atom not in self.domain:
                    raise ModelError(f"relation {name} mentions atom {atom!r} outside the domain")
        self.atoms = tuple(sorted(self.domain))

    @property
    def schema(self) -> dict[str, RelType]:
        return {name: rel.rtype for name, rel in self.relations.items()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Database):
            return NotImplemented
        return self.domain == other.domain and self.relations == other.relations

    def __hash__(self):
        return hash((self.domain, tuple(sorted((n, r) for n, r in self.relations.items()))))


def iter_atoms(v: Value) -> Iterator[str]:
    """All atom occurrences inside a value, at any depth."""
    if isinstance(v, str):
        yield v
        return
    for row in v.rows:
        for c in row:
            yield from iter_atoms(c)


def rename_value(v: Value, mapping: Mapping[str, str]) -> Value:
    """Apply an atom renaming throughout a value."""
    if isinstance(v, str):
        return mapping[v]
    return Rel(v.rtype, frozenset(tuple(rename_value(c, mapping) for c in row) for row in v.rows))


def rename_database(db: Database, mapping: Mapping[str, str]) -> Database:
    return Database(
        (mapping[a] for a in db.domain),
        {name: rename_value(rel, mapping) for name, rel in db.relations.items()},
    )
