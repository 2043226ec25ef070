"""Tokenizer and recursive-descent parser for the program text format.

The grammar, one construct per production::

    table1 h = [0, 0, 3, 2]
    table2 H = [[0, 0], [4, 1]]
    skip | x := e | { C1 } [p] { C2 } | C1 ; C2
    if (b) { C1 } else { C2 } | while (b) { C }

``#`` starts a comment that runs to the end of the line.  Probability
literals are ``<int>/<int>`` or ``<int>`` and must lie in ``[0, 1]``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional

from .errors import ParseError
from .lang import (
    RELOPS, Add, And, Assign, BoolConst, Cmp, Const, Ite, Min, Mul, Neg, Not, Or, PChoice,
    Pow2, Seq, Shr, Skip, Sub, Table1, Table2, TableEnv, Var, While,
)

__all__ = ["Token", "tokenize", "Parser", "parse_program", "parse_expr", "parse_pred",
           "RESERVED"]

RESERVED = frozenset({
    "skip", "if", "else", "while", "and", "or", "not", "true", "false",
    "table1", "table2", "pow2", "shr", "min",
})

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<dec>[0-9]+\.[0-9]+)
  | (?P<int>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|<=|>=|!=|==|\.\.|[<>=+\-*/(){}\[\];,:])
""", re.VERBOSE)


class Token(NamedTuple):
    kind: str  # "dec", "int", "name", "op" or "eof"
    text: str
    line: int
    column: int


def tokenize(source: str, line_offset: int = 0) -> List[Token]:
    tokens = []
    line, line_start, pos = 1 + line_offset, 0, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("dec", "int", "name", "op"):
            text = m.group()
            if text == "==":
                text = "="
            tokens.append(Token(kind, text, line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class Parser:
    """Shared machinery for expression, predicate and program parsing.

    ``tables`` maps declared table names to their arity (1 or 2); any other
    indexed name is rejected.
    """

    reserved = RESERVED

    def __init__(self, tokens: List[Token], tables: Optional[Dict[str, int]] = None):
        self.tokens = tokens
        self.pos = 0
        self.tables = dict(tables or {})

    # token helpers
    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.kind in ("op", "name") and tok.text == text

    def advance(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"{message}, found {found}", tok.line, tok.column)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        return self.advance()

    def expect_int(self) -> int:
        neg = self.accept("-")
        tok = self.peek()
        if tok.kind != "int":
            self.error("expected integer")
        self.pos += 1
        return -int(tok.text) if neg else int(tok.text)

    def expect_name(self) -> str:
        tok = self.peek()
        if tok.kind != "name" or tok.text in self.reserved:
            self.error("expected identifier")
        self.pos += 1
        return tok.text

    # expressions
    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self):
        left = self.unary()
        while self.at("*"):
            self.advance()
            left = Mul(left, self.unary())
        return left

    def unary(self):
        if self.at("-"):
            self.advance()
            if self.peek().kind == "int":
                return Const(-int(self.advance().text))
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "int":
            self.pos += 1
            return Const(int(tok.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            if tok.text in ("pow2", "shr", "min"):
                self.pos += 1
                self.expect("(")
                a = self.expr()
                if tok.text == "pow2":
                    self.expect(")")
                    return Pow2(a)
                self.expect(",")
                b = self.expr()
                self.expect(")")
                return Shr(a, b) if tok.text == "shr" else Min(a, b)
            name = self.expect_name()
            if self.at("[") and (name in self.tables or not self._prob_bracket()):
                return self.table_read(name, tok)
            return Var(name)
        self.error("expected expression")

    def _prob_bracket(self) -> bool:
        # `[p]` right after an operand is a probabilistic choice, not an index
        n = 1 + self.at("-", 1)
        if self.peek(n).kind == "dec":
            return self.at("]", n + 1)
        if self.peek(n).kind != "int":
            return False
        n += 1
        if self.at("/", n):
            if self.peek(n + 1).kind != "int":
                return False
            n += 2
        return self.at("]", n)

    def table_read(self, name, tok):
        arity = self.tables.get(name)
        if arity is None:
            self.error(f"reference to undeclared table {name!r}", tok)
        self.expect("[")
        first = self.expr()
        if arity == 2:
            self.expect(",")
            second = self.expr()
            self.expect("]")
            return Table2(name, first, second)
        self.expect("]")
        return Table1(name, first)

    # predicates
    def pred(self):
        left = self.conj()
        while self.accept("or"):
            left = Or(left, self.conj())
        return left

    def conj(self):
        left = self.negation()
        while self.accept("and"):
            left = And(left, self.negation())
        return left

    def negation(self):
        if self.accept("not"):
            return Not(self.negation())
        return self.pred_atom()

    def pred_atom(self):
        if self.accept("true"):
            return BoolConst(True)
        if self.accept("false"):
            return BoolConst(False)
        start = self.pos
        try:
            left = self.expr()
            tok = self.peek()
            if tok.kind != "op" or tok.text not in RELOPS:
                self.error("expected comparison operator")
            self.pos += 1
            return Cmp(left, tok.text, self.expr())
        except ParseError:
            if not self.tokens[start].text == "(":
                raise
            self.pos = start
        self.expect("(")
        inner = self.pred()
        self.expect(")")
        return inner

    # programs
    def probability(self) -> Fraction:
        """``num``, ``num/den`` or a decimal such as ``0.25``."""
        tok = self.peek()
        if tok.kind == "dec":
            self.pos += 1
            p = Fraction(tok.text)
            if p > 1:
                raise ParseError(f"probability {p} outside [0, 1]", tok.line, tok.column)
            return p
        num = self.expect_int()
        den = 1
        if self.accept("/"):
            den = self.expect_int()
            if den == 0:
                self.error("zero denominator in probability", tok)
        p = Fraction(num, den)
        if not 0 <= p <= 1:
            raise ParseError(f"probability {p} outside [0, 1]", tok.line, tok.column)
        return p

    def block(self):
        self.expect("{")
        body = self.sequence()
        self.expect("}")
        return body

    def sequence(self):
        first = self.statement()
        if self.accept(";"):
            if self.at("}") or self.peek().kind == "eof":
                return first
            return Seq(first, self.sequence())
        return first

    def statement(self):
        if self.accept("if"):
            self.expect("(")
            cond = self.pred()
            self.expect(")")
            then = self.block()
            orelse = self.block() if self.accept("else") else Skip()
            return Ite(cond, then, orelse)
        if self.accept("while"):
            self.expect("(")
            cond = self.pred()
            self.expect(")")
            return While(cond, self.block())
        return self.choice()

    def choice(self):
        """``A [p] B`` where the operands are ``skip``, assignments or blocks."""
        left = self.simple()
        if self.accept("["):
            p = self.probability()
            self.expect("]")
            return PChoice(left, p, self.choice())
        return left

    def simple(self):
        tok = self.peek()
        if self.accept("skip"):
            return Skip()
        if self.at("{"):
            return self.block()
        if tok.kind == "name" and tok.text not in self.reserved:
            name = self.expect_name()
            self.expect(":=")
            return Assign(name, self.expr())
        self.error("expected statement")

    def declarations(self):
        t1, t2 = {}, {}
        while self.at("table1") or self.at("table2"):
            kind = self.advance().text
            tok = self.peek()
            name = self.expect_name()
            if name in t1 or name in t2:
                self.error(f"table {name!r} declared twice", tok)
            self.expect("=")
            if kind == "table1":
                t1[name] = self.int_list()
                self.tables[name] = 1
            else:
                self.expect("[")
                rows = []
                if not self.at("]"):
                    rows.append(self.int_list())
                    while self.accept(","):
                        rows.append(self.int_list())
                self.expect("]")
                if len({len(r) for r in rows}) > 1:
                    self.error(f"table2 {name!r} is not rectangular", tok)
                t2[name] = rows
                self.tables[name] = 2
        return TableEnv(t1, t2)

    def int_list(self):
        self.expect("[")
        values = []
        if not self.at("]"):
            values.append(self.expect_int())
            while self.accept(","):
                values.append(self.expect_int())
        self.expect("]")
        return values

    def finish(self):
        if self.peek().kind != "eof":
            self.error("unexpected trailing input")


def parse_program(source: str, env: Optional[TableEnv] = None):
    """Parse program text into ``(Program, TableEnv)``.

    Tables declared in the header are merged over those of ``env``.
    """
    base = env or TableEnv()
    p = Parser(tokenize(source), base.arities())
    declared = p.declarations()
    program = p.sequence()
    p.finish()
    return program, base.merged(declared)


def parse_expr(source: str, env: Optional[TableEnv] = None):
    p = Parser(tokenize(source), (env or TableEnv()).arities())
    e = p.expr()
    p.finish()
    return e


def parse_pred(source: str, env: Optional[TableEnv] = None):
    p = Parser(tokenize(source), (env or TableEnv()).arities())
    b = p.pred()
    p.finish()
    return b
