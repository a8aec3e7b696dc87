"""Tokenizer and recursive-descent parser with byte-offset spans."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SqlError
from .ast import (
    Aggregate,
    BinaryOp,
    ColumnRef,
    Literal,
    OrderBy,
    QueryIssue,
    SelectStmt,
    Star,
    UnaryOp,
)

KEYWORDS = {
    "SELECT", "FROM", "WHERE", "GROUP", "BY", "ORDER", "ASC", "DESC",
    "LIMIT", "AND", "OR", "NOT", "TRUE", "FALSE",
    "COUNT", "SUM", "AVG", "MIN", "MAX",
}

DML_KEYWORDS = {"INSERT", "UPDATE", "DELETE", "DROP", "CREATE", "ALTER", "TRUNCATE"}

AGGREGATES = {"COUNT", "SUM", "AVG", "MIN", "MAX"}

_SYMBOLS = ("<=", ">=", "!=", "<>", "=", "<", ">", "+", "-", "*", "/", "(", ")", ",")


@dataclass(frozen=True)
class Token:
    kind: str  # KEYWORD | IDENT | INT | FLOAT | STRING | SYMBOL | EOF
    text: str
    start: int
    end: int


def _syntax_issue(message: str, start: int, end: int) -> QueryIssue:
    return QueryIssue("error", "SYNTAX", message, (start, end))


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "'":
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise SqlError(
                        "unterminated string literal",
                        [_syntax_issue("unterminated string literal", i, n)],
                    )
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":  # '' escapes a quote
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(Token("STRING", "".join(buf), i, j + 1))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tok_text = text[i:j]
            tokens.append(Token("FLOAT" if seen_dot else "INT", tok_text, i, j))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            upper = word.upper()
            if upper in KEYWORDS or upper in DML_KEYWORDS:
                tokens.append(Token("KEYWORD", upper, i, j))
            else:
                tokens.append(Token("IDENT", word, i, j))
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                canonical = "!=" if sym == "<>" else sym
                tokens.append(Token("SYMBOL", canonical, i, i + len(sym)))
                i += len(sym)
                break
        else:
            raise SqlError(
                f"unexpected character {ch!r}",
                [_syntax_issue(f"unexpected character {ch!r}", i, i + 1)],
            )
    tokens.append(Token("EOF", "", n, n))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def _fail(self, message: str):
        tok = self.cur
        raise SqlError(message, [_syntax_issue(message, tok.start, tok.end)])

    def advance(self) -> Token:
        tok = self.cur
        self.pos += 1
        return tok

    def match_keyword(self, *words: str) -> bool:
        if self.cur.kind == "KEYWORD" and self.cur.text in words:
            self.advance()
            return True
        return False

    def expect_keyword(self, word: str):
        if not self.match_keyword(word):
            self._fail(f"expected {word}, found {self.cur.text or 'end of input'!r}")

    def match_symbol(self, *symbols: str) -> Token | None:
        if self.cur.kind == "SYMBOL" and self.cur.text in symbols:
            return self.advance()
        return None

    def expect_symbol(self, symbol: str):
        if not self.match_symbol(symbol):
            self._fail(f"expected {symbol!r}, found {self.cur.text or 'end of input'!r}")

    def expect_ident(self) -> str:
        if self.cur.kind != "IDENT":
            self._fail(f"expected identifier, found {self.cur.text or 'end of input'!r}")
        return self.advance().text

    # -- grammar -----------------------------------------------------------

    def parse_query(self) -> SelectStmt:
        first = self.cur
        if first.kind == "KEYWORD" and first.text in DML_KEYWORDS:
            raise SqlError(
                f"{first.text} statements are forbidden",
                [QueryIssue("error", "DML_FORBIDDEN",
                            f"{first.text} statements are forbidden",
                            (first.start, first.end))],
            )
        self.expect_keyword("SELECT")
        projections = [self.parse_projection()]
        while self.match_symbol(","):
            projections.append(self.parse_projection())
        self.expect_keyword("FROM")
        table = self.expect_ident()
        where = None
        if self.match_keyword("WHERE"):
            where = self.parse_expr()
        group_by: tuple[str, ...] = ()
        if self.match_keyword("GROUP"):
            self.expect_keyword("BY")
            cols = [self.expect_ident()]
            while self.match_symbol(","):
                cols.append(self.expect_ident())
            group_by = tuple(cols)
        order_by = None
        if self.match_keyword("ORDER"):
            self.expect_keyword("BY")
            col = self.expect_ident()
            ascending = True
            if self.match_keyword("DESC"):
                ascending = False
            else:
                self.match_keyword("ASC")
            order_by = OrderBy(col, ascending)
        limit = None
        if self.match_keyword("LIMIT"):
            if self.cur.kind != "INT":
                self._fail("LIMIT requires an integer")
            limit = int(self.advance().text)
        if self.cur.kind != "EOF":
            self._fail(f"unexpected trailing input {self.cur.text!r}")
        return SelectStmt(tuple(projections), table, where, group_by, order_by, limit)

    def parse_projection(self):
        if self.match_symbol("*"):
            return Star()
        return self.parse_expr()

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        node = self.parse_and()
        while self.match_keyword("OR"):
            node = BinaryOp("OR", node, self.parse_and())
        return node

    def parse_and(self):
        node = self.parse_not()
        while self.match_keyword("AND"):
            node = BinaryOp("AND", node, self.parse_not())
        return node

    def parse_not(self):
        if self.match_keyword("NOT"):
            return UnaryOp("NOT", self.parse_not())
        return self.parse_comparison()

    def parse_comparison(self):
        node = self.parse_additive()
        tok = self.match_symbol("=", "!=", "<", "<=", ">", ">=")
        if tok is not None:
            node = BinaryOp(tok.text, node, self.parse_additive())
        return node

    def parse_additive(self):
        node = self.parse_multiplicative()
        while True:
            tok = self.match_symbol("+", "-")
            if tok is None:
                return node
            node = BinaryOp(tok.text, node, self.parse_multiplicative())

    def parse_multiplicative(self):
        node = self.parse_unary()
        while True:
            tok = self.match_symbol("*", "/")
            if tok is None:
                return node
            node = BinaryOp(tok.text, node, self.parse_unary())

    def parse_unary(self):
        if self.match_symbol("-"):
            return UnaryOp("-", self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        tok = self.cur
        if tok.kind == "INT":
            self.advance()
            return Literal(int(tok.text))
        if tok.kind == "FLOAT":
            self.advance()
            return Literal(float(tok.text))
        if tok.kind == "STRING":
            self.advance()
            return Literal(tok.text)
        if tok.kind == "KEYWORD" and tok.text in ("TRUE", "FALSE"):
            self.advance()
            return Literal(tok.text == "TRUE")
        if tok.kind == "KEYWORD" and tok.text in AGGREGATES:
            self.advance()
            self.expect_symbol("(")
            if tok.text == "COUNT" and self.match_symbol("*"):
                arg = Star()
            else:
                arg = self.parse_expr()
            self.expect_symbol(")")
            return Aggregate(tok.text.lower(), arg)
        if tok.kind == "IDENT":
            self.advance()
            return ColumnRef(tok.text)
        if self.match_symbol("("):
            node = self.parse_expr()
            self.expect_symbol(")")
            return node
        self._fail(f"unexpected token {tok.text or 'end of input'!r}")


def parse_sql(text: str) -> SelectStmt:
    """Parse a statement; DML statement kinds raise with a DML_FORBIDDEN issue."""
    return _Parser(tokenize(text)).parse_query()


def parse_expression(text: str):
    """Parse a bare expression (filter predicates, UDFs). Aggregates rejected."""
    parser = _Parser(tokenize(text))
    node = parser.parse_expr()
    if parser.cur.kind != "EOF":
        parser._fail(f"unexpected trailing input {parser.cur.text!r}")
    if _contains_aggregate(node):
        raise SqlError(
            "aggregates are not allowed in row expressions",
            [_syntax_issue("aggregates are not allowed in row expressions", 0, len(text))],
        )
    return node


def _contains_aggregate(node) -> bool:
    if isinstance(node, Aggregate):
        return True
    if isinstance(node, UnaryOp):
        return _contains_aggregate(node.operand)
    if isinstance(node, BinaryOp):
        return _contains_aggregate(node.left) or _contains_aggregate(node.right)
    return False
