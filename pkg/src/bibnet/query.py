"""Subset query language: a small predicate DSL selecting publication ids.

Grammar (keywords are case-insensitive)::

    expr    := expr OR expr | expr AND expr | NOT expr | ( expr ) | atom
    atom    := field op literal
             | field IN ( literal, ... )
             | last_days(field, N)
             | ids(string, ...)
    op      := == | != | < | <= | > | >=
    literal := "string" | integer | YYYY-MM-DD

Queryable fields: ``year`` (int), ``date_inserted`` (date),
``journal_title``, ``doc_type``, ``id`` (strings), ``research_orgs`` and
``concept`` (string-valued, matched against any element/mention).
``#`` starts a line comment. A publication missing a referenced optional
field fails that predicate leaf.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from bibnet.corpus import Corpus, Publication

# field name -> (value kind, multi-valued?)
FIELDS: dict[str, tuple[str, bool]] = {
    "year": ("int", False),
    "date_inserted": ("date", False),
    "journal_title": ("str", False),
    "doc_type": ("str", False),
    "id": ("str", False),
    "research_orgs": ("str", True),
    "concept": ("str", True),
}

COMPARISON_OPS = ("==", "!=", "<=", ">=", "<", ">")

QUERY_FILE_SUFFIX = ".nql"


class QueryError(ValueError):
    """Parse-stage failure, carrying source position."""

    def __init__(self, message: str, line: int, column: int) -> None:
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class QuerySyntaxError(QueryError):
    pass


class UnknownFieldError(QueryError):
    pass


class QueryTypeError(QueryError):
    pass


class NoRunnableQueriesError(ValueError):
    pass


# --- AST -------------------------------------------------------------------


class Expr:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class OrExpr(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class AndExpr(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class NotExpr(Expr):
    operand: Expr


@dataclass(frozen=True, slots=True)
class Comparison(Expr):
    field: str
    op: str
    value: str | int | date


@dataclass(frozen=True, slots=True)
class Membership(Expr):
    field: str
    values: tuple[str | int | date, ...]


@dataclass(frozen=True, slots=True)
class DateWindow(Expr):
    """`last_days(field, n)`: field >= today - n days, inclusive."""

    field: str
    days: int


@dataclass(frozen=True, slots=True)
class IdFilter(Expr):
    ids: tuple[str, ...]


@dataclass(frozen=True)
class SubsetQuery:
    ast: Expr
    source_text: str
    name: str


@dataclass(frozen=True)
class SubsetResult:
    ids: frozenset[str]
    query_name: str
    evaluated_at: datetime


# --- Tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<date>\d{4}-\d{2}-\d{2})
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<op>==|!=|<=|>=|<|>)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<comma>,)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)

_KEYWORDS = ("AND", "OR", "NOT", "IN")


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    text: str
    value: object
    line: int
    column: int


def _unescape(raw: str) -> str:
    body = raw[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup or ""
        raw = m.group()
        column = pos - line_start + 1
        if kind in ("ws", "comment"):
            pass
        elif kind == "date":
            try:
                value = date.fromisoformat(raw)
            except ValueError:
                raise QuerySyntaxError(f"invalid date literal {raw!r}", line, column) from None
            tokens.append(_Token("date", raw, value, line, column))
        elif kind == "int":
            tokens.append(_Token("int", raw, int(raw), line, column))
        elif kind == "string":
            tokens.append(_Token("string", raw, _unescape(raw), line, column))
        elif kind == "ident":
            upper = raw.upper()
            if upper in _KEYWORDS:
                tokens.append(_Token(upper, raw, upper, line, column))
            else:
                tokens.append(_Token("ident", raw, raw, line, column))
        else:
            tokens.append(_Token(kind, raw, raw, line, column))
        newlines = raw.count("\n")
        if newlines:
            line += newlines
            line_start = pos + raw.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "<end of query>", None, line, len(text) - line_start + 1))
    return tokens


# --- Parser ------------------------------------------------------------------


class _Parser:
    """Recursive descent; precedence OR < AND < NOT < atom."""

    def __init__(self, tokens: list[_Token]) -> None:
        self.tokens = tokens
        self.index = 0

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise QuerySyntaxError(
                f"expected {what}, found {tok.text!r}", tok.line, tok.column
            )
        return self.advance()

    def parse(self) -> Expr:
        expr = self.parse_or()
        tok = self.peek()
        if tok.kind != "eof":
            raise QuerySyntaxError(f"unexpected trailing token {tok.text!r}", tok.line, tok.column)
        return expr

    def parse_or(self) -> Expr:
        left = self.parse_and()
        while self.peek().kind == "OR":
            self.advance()
            left = OrExpr(left, self.parse_and())
        return left

    def parse_and(self) -> Expr:
        left = self.parse_not()
        while self.peek().kind == "AND":
            self.advance()
            left = AndExpr(left, self.parse_not())
        return left

    def parse_not(self) -> Expr:
        if self.peek().kind == "NOT":
            self.advance()
            return NotExpr(self.parse_not())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "lparen":
            self.advance()
            expr = self.parse_or()
            self.expect("rparen", "')'")
            return expr
        if tok.kind == "ident":
            if tok.text == "last_days":
                return self.parse_last_days()
            if tok.text == "ids":
                return self.parse_ids()
            return self.parse_field_predicate()
        raise QuerySyntaxError(f"expected a predicate, found {tok.text!r}", tok.line, tok.column)

    def parse_field_predicate(self) -> Expr:
        field_tok = self.advance()
        field = field_tok.text
        if field not in FIELDS:
            raise UnknownFieldError(
                f"unknown field {field!r} (queryable: {', '.join(sorted(FIELDS))})",
                field_tok.line,
                field_tok.column,
            )
        kind, _ = FIELDS[field]
        tok = self.peek()
        if tok.kind == "IN":
            self.advance()
            self.expect("lparen", "'(' after IN")
            values = self.parse_literal_list(field, kind)
            return Membership(field, values)
        if tok.kind == "op":
            self.advance()
            value = self.parse_literal(field, kind)
            return Comparison(field, tok.text, value)
        raise QuerySyntaxError(
            f"expected a comparison operator or IN after field {field!r}, found {tok.text!r}",
            tok.line,
            tok.column,
        )

    def parse_literal(self, field: str, kind: str):
        tok = self.peek()
        if tok.kind not in ("string", "int", "date"):
            raise QuerySyntaxError(f"expected a literal, found {tok.text!r}", tok.line, tok.column)
        self.advance()
        expected = {"str": "string", "int": "int", "date": "date"}[kind]
        if tok.kind != expected:
            raise QueryTypeError(
                f"field {field!r} expects a {kind} literal, got {tok.text}",
                tok.line,
                tok.column,
            )
        return tok.value

    def parse_literal_list(self, field: str, kind: str) -> tuple:
        values = [self.parse_literal(field, kind)]
        while self.peek().kind == "comma":
            self.advance()
            values.append(self.parse_literal(field, kind))
        self.expect("rparen", "')'")
        return tuple(values)

    def parse_last_days(self) -> Expr:
        self.advance()
        self.expect("lparen", "'(' after last_days")
        field_tok = self.expect("ident", "a date field name")
        field = field_tok.text
        if field not in FIELDS:
            raise UnknownFieldError(f"unknown field {field!r}", field_tok.line, field_tok.column)
        if FIELDS[field][0] != "date":
            raise QueryTypeError(
                f"last_days requires a date field, {field!r} is {FIELDS[field][0]}",
                field_tok.line,
                field_tok.column,
            )
        self.expect("comma", "','")
        days_tok = self.expect("int", "a day count")
        if days_tok.value < 1:
            raise QueryTypeError("last_days window must be >= 1", days_tok.line, days_tok.column)
        self.expect("rparen", "')'")
        return DateWindow(field, int(days_tok.value))  # type: ignore[arg-type]

    def parse_ids(self) -> Expr:
        self.advance()
        self.expect("lparen", "'(' after ids")
        first = self.expect("string", "a publication id string")
        values = [str(first.value)]
        while self.peek().kind == "comma":
            self.advance()
            values.append(str(self.expect("string", "a publication id string").value))
        self.expect("rparen", "')'")
        return IdFilter(tuple(values))


def parse_query(text: str, name: str = "query") -> SubsetQuery:
    """Parse DSL text into a well-typed AST; raises QueryError on failure."""
    if not text.strip():
        raise QuerySyntaxError("empty query", 1, 1)
    ast = _Parser(_tokenize(text)).parse()
    return SubsetQuery(ast=ast, source_text=text, name=name)


# --- Printing ----------------------------------------------------------------


def _format_literal(value) -> str:
    if isinstance(value, bool):
        raise TypeError("boolean literals are not part of the query language")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, date):
        return value.isoformat()
    escaped = value.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def print_query(expr: Expr) -> str:
    """Canonical text form; `parse_query(print_query(ast))` round-trips."""
    if isinstance(expr, OrExpr):
        return f"{_child(expr.left, 0, right=False)} OR {_child(expr.right, 0, right=True)}"
    if isinstance(expr, AndExpr):
        return f"{_child(expr.left, 1, right=False)} AND {_child(expr.right, 1, right=True)}"
    if isinstance(expr, NotExpr):
        return f"NOT {_child(expr.operand, 2, right=True)}"
    if isinstance(expr, Comparison):
        return f"{expr.field} {expr.op} {_format_literal(expr.value)}"
    if isinstance(expr, Membership):
        return f"{expr.field} IN ({', '.join(_format_literal(v) for v in expr.values)})"
    if isinstance(expr, DateWindow):
        return f"last_days({expr.field}, {expr.days})"
    if isinstance(expr, IdFilter):
        return f"ids({', '.join(_format_literal(v) for v in expr.ids)})"
    raise TypeError(f"not a query expression: {expr!r}")


def _precedence(expr: Expr) -> int:
    if isinstance(expr, OrExpr):
        return 0
    if isinstance(expr, AndExpr):
        return 1
    if isinstance(expr, NotExpr):
        return 2
    return 3


def _child(expr: Expr, parent_level: int, right: bool) -> str:
    text = print_query(expr)
    level = _precedence(expr)
    # parenthesize when the child binds less tightly than its context; the
    # binary operators are left-associative, so equal-level right children
    # also need grouping to preserve the tree shape
    if level < parent_level or (right and level == parent_level and level < 3):
        return f"({text})"
    return text


# --- Evaluation --------------------------------------------------------------

_OP_FUNCS = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _field_values(pub: Publication, field: str) -> list:
    if field == "year":
        return [pub.year] if pub.year is not None else []
    if field == "date_inserted":
        return [pub.date_inserted] if pub.date_inserted is not None else []
    if field == "journal_title":
        return [pub.journal_title] if pub.journal_title is not None else []
    if field == "doc_type":
        return [pub.doc_type] if pub.doc_type is not None else []
    if field == "id":
        return [pub.id]
    if field == "research_orgs":
        return list(pub.research_orgs)
    if field == "concept":
        return [m.concept for m in pub.concepts]
    raise KeyError(field)


def _eval_expr(expr: Expr, pub: Publication, today: date) -> bool:
    if isinstance(expr, OrExpr):
        return _eval_expr(expr.left, pub, today) or _eval_expr(expr.right, pub, today)
    if isinstance(expr, AndExpr):
        return _eval_expr(expr.left, pub, today) and _eval_expr(expr.right, pub, today)
    if isinstance(expr, NotExpr):
        return not _eval_expr(expr.operand, pub, today)
    if isinstance(expr, Comparison):
        op = _OP_FUNCS[expr.op]
        return any(op(value, expr.value) for value in _field_values(pub, expr.field))
    if isinstance(expr, Membership):
        allowed = set(expr.values)
        return any(value in allowed for value in _field_values(pub, expr.field))
    if isinstance(expr, DateWindow):
        cutoff = today - timedelta(days=expr.days)
        return any(value >= cutoff for value in _field_values(pub, expr.field))
    if isinstance(expr, IdFilter):
        return pub.id in expr.ids
    raise TypeError(f"not a query expression: {expr!r}")


def eval_query(query: SubsetQuery, corpus: Corpus, today: date) -> SubsetResult:
    """Evaluate a parsed query; total, depends only on (query, corpus, today)."""
    ids = frozenset(
        pid for pid, pub in corpus.publications.items() if _eval_expr(query.ast, pub, today)
    )
    return SubsetResult(ids=ids, query_name=query.name, evaluated_at=datetime.now(timezone.utc))


# --- Query folders -----------------------------------------------------------


@dataclass(frozen=True)
class QueryLoadFailure:
    name: str
    path: str
    error: str


@dataclass(frozen=True)
class QueryFolder:
    queries: list[SubsetQuery]
    failures: list[QueryLoadFailure]


def load_query_folder(directory: str | Path) -> QueryFolder:
    """Load every `*.nql` file (sorted by name); parse failures are reported
    and excluded. Raises if the directory is missing or nothing parses."""
    folder = Path(directory)
    if not folder.is_dir():
        raise FileNotFoundError(f"query directory not found: {folder}")
    queries: list[SubsetQuery] = []
    failures: list[QueryLoadFailure] = []
    for path in sorted(folder.glob(f"*{QUERY_FILE_SUFFIX}")):
        text = path.read_text(encoding="utf-8")
        try:
            queries.append(parse_query(text, name=path.stem))
        except QueryError as exc:
            failures.append(QueryLoadFailure(name=path.stem, path=str(path), error=str(exc)))
    if not queries:
        raise NoRunnableQueriesError(f"no runnable queries in {folder}")
    return QueryFolder(queries=queries, failures=failures)
