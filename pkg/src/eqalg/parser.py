"""Surface syntax: expression text, database files, and deterministic rendering.

Both grammars are whitespace-insensitive and support ``#`` line comments; see
GRAMMAR.md in the repository root for the full grammar.  Rendering emits one
canonical spelling, so ``parse(render(x)) == x`` for expressions and
databases alike.
"""

from __future__ import annotations

from . import ast
from .model import ATOM, ATOM_RE, Database, ModelError, NAME_RE, Rel, RelType, Value

KEYWORDS = {
    "union", "minus", "times", "project", "select", "nest", "unnest",
    "powerset", "solve", "empty", "domain", "D",
}


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        self.line = line
        self.col = col
        super().__init__(f"{message} (line {line}, column {col})")


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind: str, text: str, line: int, col: int) -> None:
        self.kind = kind  # "word" | "punct" | "eof"
        self.text = text
        self.line = line
        self.col = col


_PUNCT2 = ("!=",)
_PUNCT1 = "()[]{},:|="


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text[i : i + 2] in _PUNCT2:
            toks.append(_Token("punct", text[i : i + 2], line, col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT1:
            toks.append(_Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isalnum() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Token("word", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(_Token("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, message: str) -> "ParseError":
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind == "eof" or tok.text != text:
            raise self.fail(f"expected {text!r}, found {tok.text!r}" if tok.text else f"expected {text!r}")
        return self.next()

    def expect_eof(self) -> None:
        tok = self.peek()
        if tok.kind != "eof":
            raise self.fail(f"trailing input starting at {tok.text!r}")

    # ---- shared pieces

    def parse_int(self) -> int:
        tok = self.peek()
        if tok.kind != "word" or not tok.text.isdigit():
            raise self.fail(f"expected a column index, found {tok.text!r}")
        self.next()
        value = int(tok.text)
        if value < 1:
            raise ParseError("column indices are 1-based", tok.line, tok.col)
        return value

    def parse_name(self) -> str:
        tok = self.peek()
        if tok.kind != "word" or not NAME_RE.match(tok.text) or tok.text in KEYWORDS:
            raise self.fail(f"expected a relation name, found {tok.text!r}")
        self.next()
        return tok.text

    def parse_type(self) -> RelType:
        tok = self.peek()
        if tok.kind == "word" and tok.text == "0":
            self.next()
            return ATOM
        self.expect("(")
        comps = [self.parse_type()]
        while self.peek().text == ",":
            self.next()
            comps.append(self.parse_type())
        self.expect(")")
        return RelType(tuple(comps))

    def parse_index_list(self) -> tuple[int, ...]:
        self.expect("[")
        out = [self.parse_int()]
        while self.peek().text == ",":
            self.next()
            out.append(self.parse_int())
        self.expect("]")
        return tuple(out)

    # ---- expressions

    def parse_expr(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "(":
            self.next()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if tok.kind != "word":
            raise self.fail(f"expected an expression, found {tok.text!r}")
        kw = tok.text
        if kw == "D":
            self.next()
            return ast.Domain()
        if kw in ("union", "minus", "times"):
            self.next()
            self.expect("(")
            left = self.parse_expr()
            self.expect(",")
            right = self.parse_expr()
            self.expect(")")
            cls = {"union": ast.Union, "minus": ast.Difference, "times": ast.Product}[kw]
            return cls(left, right)
        if kw == "project" or kw == "nest":
            self.next()
            indices = self.parse_index_list()
            self.expect("(")
            arg = self.parse_expr()
            self.expect(")")
            return (ast.Project if kw == "project" else ast.Nest)(indices, arg)
        if kw == "select":
            self.next()
            self.expect("[")
            i = self.parse_int()
            op_tok = self.next()
            if op_tok.text not in ("=", "!="):
                raise ParseError(f"expected '=' or '!=', found {op_tok.text!r}", op_tok.line, op_tok.col)
            j = self.parse_int()
            self.expect("]")
            self.expect("(")
            arg = self.parse_expr()
            self.expect(")")
            return ast.Select(i, op_tok.text, j, arg)
        if kw == "unnest":
            self.next()
            self.expect("[")
            i = self.parse_int()
            self.expect("]")
            self.expect("(")
            arg = self.parse_expr()
            self.expect(")")
            return ast.Unnest(i, arg)
        if kw == "powerset":
            self.next()
            self.expect("(")
            arg = self.parse_expr()
            self.expect(")")
            return ast.Powerset(arg)
        if kw == "solve":
            return self.parse_solve()
        if kw == "empty":
            raise self.fail("'empty' is only allowed as an equation side inside solve{...}")
        if kw in KEYWORDS:
            raise self.fail(f"keyword {kw!r} cannot start an expression here")
        if NAME_RE.match(kw):
            self.next()
            return ast.Name(kw)
        raise self.fail(f"expected an expression, found {kw!r}")

    def parse_solve(self) -> ast.Expr:
        start = self.expect("solve")
        self.expect("{")
        self.expect("(")
        binders = [self.parse_binder()]
        while self.peek().text == ",":
            self.next()
            binders.append(self.parse_binder())
        self.expect(")")
        self.expect("|")
        lhs = self.parse_expr()
        op_tok = self.next()
        if op_tok.text == "=":
            if self.peek().kind == "word" and self.peek().text == "empty":
                self.next()
                rhs = ast.empty_like(lhs)
            else:
                rhs = self.parse_expr()
        elif op_tok.text == "!=":
            self.expect("empty")
            lhs, rhs = ast.rewrite_diseq_to_eq(lhs)
        else:
            raise ParseError(f"expected '=' or '!=', found {op_tok.text!r}", op_tok.line, op_tok.col)
        self.expect("}")
        try:
            return ast.Solve(tuple(binders), lhs, rhs)
        except ast.AstError as exc:
            raise ParseError(str(exc), start.line, start.col) from exc

    def parse_binder(self) -> tuple[str, RelType]:
        name = self.parse_name()
        self.expect(":")
        return name, self.parse_type()

    # ---- databases

    def parse_database(self) -> Database:
        self.expect("domain")
        self.expect("[")
        atoms: list[str] = []
        if self.peek().text != "]":
            atoms.append(self.parse_atom())
            while self.peek().text == ",":
                self.next()
                atoms.append(self.parse_atom())
        close = self.expect("]")
        if not atoms:
            raise ParseError("domain must be non-empty", close.line, close.col)
        domain = frozenset(atoms)
        relations: dict[str, Rel] = {}
        while self.peek().kind != "eof":
            tok = self.peek()
            name = self.parse_name()
            if name in relations:
                raise ParseError(f"duplicate relation {name!r}", tok.line, tok.col)
            self.expect(":")
            rtype = self.parse_type()
            if rtype.is_atom:
                raise ParseError(f"relation {name} cannot have the atom type", tok.line, tok.col)
            self.expect("=")
            relations[name] = self.parse_rel_value(rtype, domain)
        try:
            return Database(domain, relations)
        except ModelError as exc:
            raise ParseError(str(exc), 1, 1) from exc

    def parse_atom(self) -> str:
        tok = self.peek()
        if tok.kind != "word" or not ATOM_RE.match(tok.text):
            raise self.fail(f"expected an atom, found {tok.text!r}")
        self.next()
        return tok.text

    def parse_rel_value(self, rtype: RelType, domain: frozenset) -> Rel:
        self.expect("[")
        rows = []
        if self.peek().text != "]":
            rows.append(self.parse_row(rtype, domain))
            while self.peek().text == ",":
                self.next()
                rows.append(self.parse_row(rtype, domain))
        self.expect("]")
        return Rel(rtype, frozenset(rows))

    def parse_row(self, rtype: RelType, domain: frozenset) -> tuple:
        open_tok = self.expect("[")
        comps = []
        for pos, comp_type in enumerate(rtype.components):
            if pos > 0:
                self.expect(",")
            if comp_type.is_atom:
                tok = self.peek()
                atom = self.parse_atom()
                if atom not in domain:
                    raise ParseError(f"atom {atom!r} not in domain", tok.line, tok.col)
                comps.append(atom)
            else:
                comps.append(self.parse_rel_value(comp_type, domain))
        tok = self.peek()
        if tok.text == ",":
            raise ParseError(f"row has more than {rtype.arity} components", tok.line, tok.col)
        self.expect("]")
        return tuple(comps)


def parse_expr(text: str) -> ast.Expr:
    p = _Parser(text)
    e = p.parse_expr()
    p.expect_eof()
    return e


def parse_database(text: str) -> tuple[Database, dict[str, RelType]]:
    p = _Parser(text)
    db = p.parse_database()
    p.expect_eof()
    return db, db.schema


def parse_type(text: str) -> RelType:
    p = _Parser(text)
    t = p.parse_type()
    p.expect_eof()
    return t


# ---------------------------------------------------------------------------
# rendering


def render_type(t: RelType) -> str:
    return str(t)


def render_relation(v: Value) -> str:
    """Deterministic text for a value, rows in canonical order; parses back."""
    if isinstance(v, str):
        return v
    return "[" + ",".join(_render_row(row) for row in v.sorted_rows()) + "]"


def _render_row(row: tuple) -> str:
    return "[" + ",".join(render_relation(c) for c in row) + "]"


def render_database(db: Database) -> str:
    lines = ["domain [" + ",".join(db.atoms) + "]"]
    for name in sorted(db.relations):
        rel = db.relations[name]
        lines.append(f"{name}:{rel.rtype} = {render_relation(rel)}")
    return "\n".join(lines) + "\n"


def render_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.Name):
        return e.name
    if isinstance(e, ast.Domain):
        return "D"
    if isinstance(e, ast.Union):
        return f"union({render_expr(e.left)},{render_expr(e.right)})"
    if isinstance(e, ast.Difference):
        return f"minus({render_expr(e.left)},{render_expr(e.right)})"
    if isinstance(e, ast.Product):
        return f"times({render_expr(e.left)},{render_expr(e.right)})"
    if isinstance(e, ast.Project):
        return f"project[{','.join(map(str, e.indices))}]({render_expr(e.arg)})"
    if isinstance(e, ast.Select):
        return f"select[{e.i}{e.op}{e.j}]({render_expr(e.arg)})"
    if isinstance(e, ast.Nest):
        return f"nest[{','.join(map(str, e.indices))}]({render_expr(e.arg)})"
    if isinstance(e, ast.Unnest):
        return f"unnest[{e.index}]({render_expr(e.arg)})"
    if isinstance(e, ast.Powerset):
        return f"powerset({render_expr(e.arg)})"
    if isinstance(e, ast.Solve):
        binders = ",".join(f"{nm}:{t}" for nm, t in e.binders)
        return f"solve{{({binders}) | {render_expr(e.lhs)} = {render_expr(e.rhs)}}}"
    raise ModelError(f"cannot render {type(e).__name__}")
