"""Parser for the engine's SQL subset.

Grammar, keywords case-insensitive:

    SELECT cols FROM table (JOIN table ON qcol = qcol)*
        (WHERE pred (AND pred)*)? (LIMIT n)?

    cols  := * | col (, col)*
    col   := IDENT (. IDENT)?
    pred  := col op const            op in = < > <= >= <>
    const := decimal integer | 'single quoted string'

Syntax errors carry the 1-based byte offset of the offending token.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

from ..errors import BfaError

KEYWORDS = {"SELECT", "FROM", "JOIN", "ON", "WHERE", "AND", "LIMIT"}
OPERATORS = {"=", "<", ">", "<=", ">=", "<>"}

_IDENT_START = set("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_")
_IDENT_CHARS = _IDENT_START | set("0123456789")
_DIGITS = set("0123456789")


class SqlError(BfaError):
    """Syntax error with a 1-based byte offset into the query text."""

    def __init__(self, message: str, offset: int):
        super().__init__("syntax error at offset %d: %s" % (offset, message))
        self.offset = offset


@dataclass(frozen=True)
class ColumnRef:
    table: Optional[str]
    column: str

    def __str__(self) -> str:
        return "%s.%s" % (self.table, self.column) if self.table else self.column


@dataclass(frozen=True)
class Predicate:
    column: ColumnRef
    op: str
    value: Union[int, str]


@dataclass(frozen=True)
class JoinClause:
    table: str
    left: ColumnRef
    right: ColumnRef


@dataclass(frozen=True)
class QueryAst:
    star: bool
    projections: Tuple[ColumnRef, ...]
    base: str
    joins: Tuple[JoinClause, ...]
    predicates: Tuple[Predicate, ...]
    limit: Optional[int]


@dataclass(frozen=True)
class _Token:
    kind: str  # keyword name, IDENT, INT, STRING, OP, STAR, COMMA, DOT, EOF
    text: str
    offset: int  # 1-based byte offset of the first character


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        start = i
        if c in _IDENT_START:
            while i < n and text[i] in _IDENT_CHARS:
                i += 1
            word = text[start:i]
            upper = word.upper()
            kind = upper if upper in KEYWORDS else "IDENT"
            tokens.append(_Token(kind, word, start + 1))
        elif c in _DIGITS:
            while i < n and text[i] in _DIGITS:
                i += 1
            tokens.append(_Token("INT", text[start:i], start + 1))
        elif c == "'":
            i += 1
            while i < n and text[i] != "'":
                i += 1
            if i >= n:
                raise SqlError("unterminated string constant", start + 1)
            tokens.append(_Token("STRING", text[start + 1 : i], start + 1))
            i += 1
        elif text.startswith(("<=", ">=", "<>"), i):
            tokens.append(_Token("OP", text[i : i + 2], start + 1))
            i += 2
        elif c in "=<>":
            tokens.append(_Token("OP", c, start + 1))
            i += 1
        elif c == "*":
            tokens.append(_Token("STAR", c, start + 1))
            i += 1
        elif c == ",":
            tokens.append(_Token("COMMA", c, start + 1))
            i += 1
        elif c == ".":
            tokens.append(_Token("DOT", c, start + 1))
            i += 1
        else:
            raise SqlError("unexpected character %r" % c, start + 1)
    tokens.append(_Token("EOF", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def _peek(self) -> _Token:
        return self.tokens[self.pos]

    def _next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _expect(self, kind: str, what: str) -> _Token:
        tok = self._peek()
        if tok.kind != kind:
            got = tok.text if tok.kind != "EOF" else "end of input"
            raise SqlError("expected %s, got %r" % (what, got), tok.offset)
        return self._next()

    def _column(self) -> ColumnRef:
        first = self._expect("IDENT", "a column name")
        if self._peek().kind == "DOT":
            self._next()
            second = self._expect("IDENT", "a column name after '.'")
            return ColumnRef(first.text, second.text)
        return ColumnRef(None, first.text)

    def _constant(self) -> Union[int, str]:
        tok = self._peek()
        if tok.kind == "INT":
            self._next()
            return int(tok.text)
        if tok.kind == "STRING":
            self._next()
            return tok.text
        got = tok.text if tok.kind != "EOF" else "end of input"
        raise SqlError("expected a constant, got %r" % got, tok.offset)

    def _predicate(self) -> Predicate:
        col = self._column()
        op_tok = self._expect("OP", "a comparison operator")
        if op_tok.text not in OPERATORS:
            raise SqlError("unknown operator %r" % op_tok.text, op_tok.offset)
        return Predicate(col, op_tok.text, self._constant())

    def parse(self) -> QueryAst:
        self._expect("SELECT", "SELECT")
        star = False
        projections: List[ColumnRef] = []
        if self._peek().kind == "STAR":
            self._next()
            star = True
        else:
            if self._peek().kind != "IDENT":
                tok = self._peek()
                got = tok.text if tok.kind != "EOF" else "end of input"
                raise SqlError("expected '*' or a column, got %r" % got, tok.offset)
            projections.append(self._column())
            while self._peek().kind == "COMMA":
                self._next()
                projections.append(self._column())
        self._expect("FROM", "FROM")
        base = self._expect("IDENT", "a table name").text
        joins: List[JoinClause] = []
        while self._peek().kind == "JOIN":
            self._next()
            table = self._expect("IDENT", "a table name after JOIN").text
            self._expect("ON", "ON")
            left = self._column()
            eq = self._expect("OP", "'=' in join condition")
            if eq.text != "=":
                raise SqlError("join condition must use '='", eq.offset)
            right = self._column()
            joins.append(JoinClause(table, left, right))
        predicates: List[Predicate] = []
        if self._peek().kind == "WHERE":
            self._next()
            predicates.append(self._predicate())
            while self._peek().kind == "AND":
                self._next()
                predicates.append(self._predicate())
        limit: Optional[int] = None
        if self._peek().kind == "LIMIT":
            self._next()
            limit = int(self._expect("INT", "an integer after LIMIT").text)
        tok = self._peek()
        if tok.kind == "LIMIT":
            raise SqlError("duplicate LIMIT clause", tok.offset)
        if tok.kind != "EOF":
            raise SqlError("unexpected trailing input %r" % tok.text, tok.offset)
        return QueryAst(
            star=star,
            projections=tuple(projections),
            base=base,
            joins=tuple(joins),
            predicates=tuple(predicates),
            limit=limit,
        )


def parse_query(text: str) -> QueryAst:
    return _Parser(text).parse()
