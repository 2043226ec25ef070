"""A small language of assertions over sub-distributions.

An assertion file holds one clause per line; all clauses must hold.  Clauses::

    Pr[x = 1 and y = 0] = 2 * Pr[x = 0 and y = 0]
    mass >= 1
    support in (0 <= c and c < N)
    uniform over (0 <= c and c < min(v, n)) group by (v)
    sum{H[d, c] = I} weight 1 + sum{d = 0 and c < 3} weight probt(I, c) <= probt(I)

A clause may be prefixed by ``exists P in lo..hi :`` or ``forall P in lo..hi :``
to bind an integer parameter.  A quantifier with nothing after the colon
extends over every following line.  Parameters are visible in all nested
predicates and shadow state variables of the same name.

Inside ``sum{b} weight w`` the weight is evaluated per state, so it may refer
to state variables; elsewhere a bare name must be a bound parameter.  Named
functions come in two kinds: integer tables (usable inside predicates, e.g.
``bound(c)``) and rational functions (usable in probability expressions,
e.g. ``probt(I, c)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Mapping, Optional, Tuple

from .dist import SubDist
from .errors import AssertionSyntaxError, EvalFault, ParseError
from .lang import (
    EMPTY_ENV, RELOPS, And, Cmp, Expr, Pred, Table1, Table2, TableEnv, Var,
    eval_expr, eval_pred, pretty_expr, pretty_pred,
)
from .parse import Parser, tokenize

__all__ = [
    "Assertion", "Clause", "Compare", "SupportIn", "UniformOver", "Quantified",
    "Failure", "parse_assertion", "holds", "explain", "Overlay", "conj",
    "ENUMERATION_LIMIT",
]

ENUMERATION_LIMIT = 1_000_000

_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


class Overlay:
    """A state view where bound parameters shadow state variables."""

    __slots__ = ("params", "state")

    def __init__(self, params: Mapping[str, int], state=None):
        self.params = params
        self.state = state

    def __getitem__(self, name):
        if name in self.params:
            return self.params[name]
        if self.state is None:
            return 0
        return self.state[name]


# -- probability expressions ------------------------------------------------

@dataclass(frozen=True)
class RConst:
    value: Fraction


@dataclass(frozen=True)
class RName:
    name: str


@dataclass(frozen=True)
class RProb:
    pred: Pred


@dataclass(frozen=True)
class RMass:
    pass


@dataclass(frozen=True)
class RSum:
    pred: Pred
    weight: object


@dataclass(frozen=True)
class RCall:
    name: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class RBin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class RNeg:
    operand: object


class _Ctx:
    __slots__ = ("mu", "env", "functions", "params")

    def __init__(self, mu, env, functions, params):
        self.mu = mu
        self.env = env
        self.functions = functions
        self.params = params


def _reval(r, ctx: _Ctx, state=None) -> Fraction:
    t = type(r)
    if t is RConst:
        return r.value
    if t is RName:
        return Fraction(Overlay(ctx.params, state)[r.name])
    if t is RProb:
        return sum((p for s, p in ctx.mu.items()
                    if eval_pred(r.pred, Overlay(ctx.params, s), ctx.env)), Fraction(0))
    if t is RMass:
        return ctx.mu.mass
    if t is RSum:
        total = Fraction(0)
        for s, p in ctx.mu.items():
            if eval_pred(r.pred, Overlay(ctx.params, s), ctx.env):
                total += p * _reval(r.weight, ctx, s)
        return total
    if t is RCall:
        view = Overlay(ctx.params, state)
        args = [eval_expr(a, view, ctx.env) for a in r.args]
        return Fraction(ctx.functions[r.name](*args))
    if t is RBin:
        a = _reval(r.left, ctx, state)
        b = _reval(r.right, ctx, state)
        if r.op == "+":
            return a + b
        if r.op == "-":
            return a - b
        if r.op == "*":
            return a * b
        if b == 0:
            raise EvalFault("division by zero in assertion")
        return a / b
    if t is RNeg:
        return -_reval(r.operand, ctx, state)
    raise TypeError(f"not a probability expression: {r!r}")


def _rpretty(r) -> str:
    t = type(r)
    if t is RConst:
        return str(r.value)
    if t is RName:
        return r.name
    if t is RProb:
        return f"Pr[{pretty_pred(r.pred)}]"
    if t is RMass:
        return "mass"
    if t is RSum:
        return f"sum{{{pretty_pred(r.pred)}}} weight {_rpretty(r.weight)}"
    if t is RCall:
        return f"{r.name}({', '.join(pretty_expr(a) for a in r.args)})"
    if t is RBin:
        return f"({_rpretty(r.left)} {r.op} {_rpretty(r.right)})"
    if t is RNeg:
        return f"-{_rpretty(r.operand)}"
    return repr(r)


# -- clauses ------------------------------------------------------------------

@dataclass(frozen=True)
class Compare:
    left: object
    op: str
    right: object


@dataclass(frozen=True)
class SupportIn:
    pred: Pred


@dataclass(frozen=True)
class UniformOver:
    selector: Pred
    group: Tuple[str, ...]


@dataclass(frozen=True)
class Quantified:
    kind: str  # "exists" or "forall"
    param: str
    lo: Expr
    hi: Expr
    body: Tuple["Clause", ...]


@dataclass(frozen=True)
class Clause:
    """One line of an assertion with its 1-based id and source text."""

    id: int
    text: str
    body: object


@dataclass(frozen=True)
class Assertion:
    clauses: Tuple[Clause, ...]
    env: TableEnv = EMPTY_ENV
    functions: Mapping[str, Callable] = field(default_factory=dict, compare=False, hash=False)
    text: str = ""

    def holds(self, mu: SubDist, params: Optional[Mapping[str, int]] = None) -> bool:
        return explain(self, mu, params) is None

    def __and__(self, other: "Assertion") -> "Assertion":
        return conj(self, other)


def conj(*parts: Assertion) -> Assertion:
    clauses, text = [], []
    env = EMPTY_ENV
    functions = {}
    offset = 0
    for a in parts:
        for c in a.clauses:
            clauses.append(Clause(c.id + offset, c.text, c.body))
        offset += max((c.id for c in a.clauses), default=0)
        env = env.merged(a.env)
        functions.update(a.functions)
        text.append(a.text.rstrip("\n"))
    return Assertion(tuple(clauses), env, functions, "\n".join(t for t in text if t) + "\n")


@dataclass(frozen=True)
class Failure:
    """Why an assertion fails: the clause, the parameter binding, and a short reason."""

    clause: Clause
    params: Mapping[str, int]
    reason: str
    cells: Tuple = ()

    def to_json_obj(self):
        return {"clause_id": self.clause.id, "clause": self.clause.text,
                "params": dict(self.params), "reason": self.reason}


# -- evaluation ------------------------------------------------------------------

def holds(A: Assertion, mu: SubDist, params: Optional[Mapping[str, int]] = None) -> bool:
    return explain(A, mu, params) is None


def explain(A: Assertion, mu: SubDist, params: Optional[Mapping[str, int]] = None) -> Optional[Failure]:
    """Return ``None`` if every clause holds on ``mu``, else the first failure."""
    ctx = _Ctx(mu, A.env, A.functions, dict(params or {}))
    for c in A.clauses:
        fail = _check_clause(c, c.body, ctx)
        if fail is not None:
            return fail
    return None


def _check_clause(clause: Clause, body, ctx: _Ctx) -> Optional[Failure]:
    t = type(body)
    if t is Compare:
        a = _reval(body.left, ctx)
        b = _reval(body.right, ctx)
        if _CMP[body.op](a, b):
            return None
        return Failure(clause, dict(ctx.params), f"{a} {body.op} {b} is false")
    if t is SupportIn:
        for s, _ in ctx.mu.sorted_items():
            if not eval_pred(body.pred, Overlay(ctx.params, s), ctx.env):
                return Failure(clause, dict(ctx.params),
                               f"support state {s.render(ctx.mu.scope)} violates predicate",
                               (s,))
        return None
    if t is UniformOver:
        return _check_uniform(clause, body, ctx)
    if t is Quantified:
        view = Overlay(ctx.params)
        lo = eval_expr(body.lo, view, ctx.env)
        hi = eval_expr(body.hi, view, ctx.env)
        first = None
        for value in range(lo, hi + 1):
            sub = _Ctx(ctx.mu, ctx.env, ctx.functions, {**ctx.params, body.param: value})
            fail = None
            for inner in body.body:
                fail = _check_clause(inner, inner.body, sub)
                if fail is not None:
                    break
            if body.kind == "forall" and fail is not None:
                return fail
            if body.kind == "exists":
                if fail is None:
                    return None
                first = first or fail
        if body.kind == "exists":
            reason = f"no {body.param} in {lo}..{hi} satisfies the body"
            if first is None:
                return Failure(clause, dict(ctx.params), reason)
            return Failure(first.clause, first.params,
                           f"{reason}; at {body.param}={lo}: {first.reason}", first.cells)
        return None
    raise TypeError(f"unknown clause {body!r}")


def _atoms(b: Pred):
    if type(b) is And:
        yield from _atoms(b.left)
        yield from _atoms(b.right)
    else:
        yield b


def _enumeration_plan(selector: Pred, fixed: set, params: Mapping[str, int]):
    """Order the selector's variables for enumeration and infer their bounds.

    Bounds come from conjunct atoms ``x op e`` / ``e op x`` whose other side
    only mentions variables that are already known.  Returns a list of
    ``(var, lower_bounds, upper_bounds)``; each bound is ``(expr, offset)``.
    Variables that cannot be bounded are left out and so stay fixed.
    """
    atoms = [a for a in _atoms(selector) if type(a) is Cmp]
    cands = [v for v in selector.vars() if v not in fixed and v not in params]
    while True:
        known = set(fixed) | set(params) | (set(selector.vars()) - set(cands))
        plan = []
        progress = True
        while progress:
            progress = False
            for v in cands:
                if v in known:
                    continue
                lo, hi = [], []
                for a in atoms:
                    for side, other, op in ((a.left, a.right, a.op), (a.right, a.left, _flip(a.op))):
                        if type(side) is not Var or side.name != v:
                            continue
                        if not set(other.vars()) <= known:
                            continue
                        if op in (">=", "="):
                            lo.append((other, 0))
                        elif op == ">":
                            lo.append((other, 1))
                        if op in ("<=", "="):
                            hi.append((other, 0))
                        elif op == "<":
                            hi.append((other, -1))
                if lo and hi:
                    plan.append((v, lo, hi))
                    known.add(v)
                    progress = True
        stuck = [v for v in cands if v not in known]
        if not stuck:
            return plan
        cands = [v for v in cands if v not in stuck]


def _cells(cell, plan, i, params, env, budget=None):
    if budget is None:
        budget = [ENUMERATION_LIMIT]
    if i == len(plan):
        budget[0] -= 1
        if budget[0] < 0:
            raise EvalFault("uniform clause enumerates too many states")
        yield cell
        return
    v, lo_list, hi_list = plan[i]
    view = Overlay(params, cell)
    lo = max(eval_expr(e, view, env) + d for e, d in lo_list)
    hi = min(eval_expr(e, view, env) + d for e, d in hi_list)
    for x in range(lo, hi + 1):
        yield from _cells(cell.set(v, x), plan, i + 1, params, env, budget)


def _flip(op):
    return {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[op]


def _check_uniform(clause: Clause, body: UniformOver, ctx: _Ctx) -> Optional[Failure]:
    """Every state satisfying the selector with the same group key has the same weight.

    States outside the support count with weight 0.  For each anchor (a
    support state satisfying the selector) the selector's bounded variables
    are enumerated; variables it does not bound keep the anchor's value and
    so act as extra grouping variables.
    """
    mu, env, params = ctx.mu, ctx.env, ctx.params
    sel = body.selector
    plan = _enumeration_plan(sel, set(body.group), params)
    names = [v for v, _, _ in plan]
    done = set()
    for anchor, _ in mu.sorted_items():
        if not eval_pred(sel, Overlay(params, anchor), env):
            continue
        key = anchor
        for v in names:
            key = key.set(v, 0)
        if key in done:
            continue
        done.add(key)
        cells = [cell for cell in _cells(key, plan, 0, params, env)
                 if eval_pred(sel, Overlay(params, cell), env)]
        if len(cells) > ENUMERATION_LIMIT:
            raise EvalFault(f"uniform clause would enumerate {len(cells)} states")
        weights = [mu[c] for c in cells]
        for cell, w in zip(cells, weights):
            if w != weights[0]:
                scope = mu.scope
                return Failure(
                    clause, dict(params),
                    f"weights differ in one group: {weights[0]} at {cells[0].render(scope)}"
                    f" vs {w} at {cell.render(scope)}",
                    (cells[0], cell))
    return None


# -- parsing -------------------------------------------------------------------

class _AssertionParser(Parser):
    """Expression/predicate parser extended with function-style table reads."""

    def __init__(self, tokens, env: TableEnv, functions, params, line):
        super().__init__(tokens, env.arities())
        self.functions = functions
        self.params = params
        self.line = line
        self.in_weight = False

    def error(self, message, tok=None):
        tok = tok or self.peek()
        found = "end of line" if tok.kind == "eof" else repr(tok.text)
        raise AssertionSyntaxError(f"{message}, found {found}", tok.line, tok.column)

    def atom(self):
        tok = self.peek()
        if tok.kind == "name" and self.at("(", 1) and tok.text in self.tables:
            self.pos += 2
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            if len(args) != self.tables[tok.text]:
                self.error(f"{tok.text} takes {self.tables[tok.text]} argument(s)", tok)
            if len(args) == 1:
                return Table1(tok.text, args[0])
            return Table2(tok.text, args[0], args[1])
        return super().atom()

    # probability expressions
    def rexpr(self):
        left = self.rterm()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            left = RBin(op, left, self.rterm())
        return left

    def rterm(self):
        left = self.runary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            left = RBin(op, left, self.runary())
        return left

    def runary(self):
        if self.accept("-"):
            return RNeg(self.runary())
        return self.ratom()

    def ratom(self):
        tok = self.peek()
        if tok.kind in ("int", "dec"):
            self.pos += 1
            return RConst(Fraction(tok.text))
        if self.accept("("):
            r = self.rexpr()
            self.expect(")")
            return r
        if tok.kind != "name":
            self.error("expected probability expression")
        if tok.text == "Pr" and self.at("[", 1):
            self.pos += 2
            b = self.pred()
            self.expect("]")
            return RProb(b)
        if tok.text == "mass":
            self.pos += 1
            return RMass()
        if tok.text == "sum" and self.at("{", 1):
            self.pos += 2
            b = self.pred()
            self.expect("}")
            self.expect("weight")
            outer, self.in_weight = self.in_weight, True
            w = self.ratom()
            self.in_weight = outer
            return RSum(b, w)
        self.pos += 1
        if self.accept("("):
            if tok.text not in self.functions:
                self.error(f"unknown function {tok.text!r}", tok)
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            if not self.in_weight:
                free = [v for a in args for v in a.vars() if v not in self.params]
                if free:
                    self.error(f"unbound name {free[0]!r} in argument of {tok.text}", tok)
            return RCall(tok.text, tuple(args))
        if not self.in_weight and tok.text not in self.params:
            self.error(f"unbound parameter {tok.text!r}", tok)
        return RName(tok.text)

    # clauses
    def clause(self):
        if self.at("support") and self.at("in", 1):
            self.pos += 2
            return SupportIn(self.paren_pred())
        if self.at("uniform") and self.at("over", 1):
            self.pos += 2
            sel = self.paren_pred()
            group = ()
            if self.accept("group"):
                self.expect("by")
                self.expect("(")
                names = []
                if not self.at(")"):
                    names.append(self.expect_name())
                    while self.accept(","):
                        names.append(self.expect_name())
                self.expect(")")
                group = tuple(names)
            return UniformOver(sel, group)
        left = self.rexpr()
        tok = self.peek()
        if tok.kind != "op" or tok.text not in RELOPS:
            self.error("expected comparison operator")
        self.pos += 1
        return Compare(left, tok.text, self.rexpr())

    def paren_pred(self):
        self.expect("(")
        b = self.pred()
        self.expect(")")
        return b


def parse_assertion(text: str, env: TableEnv = EMPTY_ENV,
                    functions: Optional[Mapping[str, Callable]] = None) -> Assertion:
    """Parse assertion text.

    ``env`` supplies integer tables (read as ``T[i]`` or ``T(i)`` in
    predicates); ``functions`` supplies rational-valued functions for
    probability expressions.
    """
    functions = dict(functions or {})
    lines = text.splitlines()
    root: List[Clause] = []
    target = root
    params: List[str] = []
    for lineno, raw in enumerate(lines, start=1):
        src = raw.split("#", 1)[0].strip()
        if not src:
            continue
        try:
            tokens = tokenize(raw.split("#", 1)[0], line_offset=lineno - 1)
        except ParseError as exc:
            raise AssertionSyntaxError(exc.message, exc.line, exc.column) from None
        p = _AssertionParser(tokens, env, functions, params, lineno)
        quants = []
        local_params = list(params)
        while p.at("exists") or p.at("forall"):
            kind = p.advance().text
            name = p.expect_name()
            p.expect("in")
            p.params = local_params
            lo = p.expr()
            p.expect("..")
            hi = p.expr()
            p.expect(":")
            for e in (lo, hi):
                free = [v for v in e.vars() if v not in local_params]
                if free:
                    raise AssertionSyntaxError(f"unbound name {free[0]!r} in range",
                                               lineno, 1)
            quants.append((kind, name, lo, hi))
            local_params = local_params + [name]
            p.params = local_params
        if quants and p.peek().kind == "eof":
            # quantifier opens a scope covering the rest of the file
            holder: List[Clause] = []
            body = _wrap(quants, holder)
            target.append(Clause(lineno, src, body))
            target = holder
            params = local_params
            continue
        body = p.clause()
        p.finish()
        for kind, name, lo, hi in reversed(quants):
            body = Quantified(kind, name, lo, hi, (Clause(lineno, src, body),))
        target.append(Clause(lineno, src, body))
    return Assertion(_freeze(root), env, functions, text)


class _Open:
    """A quantifier whose body is still being collected."""

    def __init__(self, kind, name, lo, hi, inner):
        self.kind, self.name, self.lo, self.hi, self.inner = kind, name, lo, hi, inner


def _wrap(quants, holder):
    inner = holder
    for kind, name, lo, hi in reversed(quants):
        node = _Open(kind, name, lo, hi, inner)
        inner = node
    return inner


def _freeze(clauses) -> Tuple[Clause, ...]:
    return tuple(Clause(c.id, c.text, _freeze_body(c, c.body)) for c in clauses)


def _freeze_body(c, body):
    if isinstance(body, _Open):
        inner = body.inner
        if isinstance(inner, _Open):
            inner_clauses = (Clause(c.id, c.text, _freeze_body(c, inner)),)
        else:
            inner_clauses = _freeze(inner)
        return Quantified(body.kind, body.name, body.lo, body.hi, inner_clauses)
    if isinstance(body, Quantified):
        return Quantified(body.kind, body.param, body.lo, body.hi, _freeze(body.body))
    return body
