"""Abstract syntax of the probabilistic language, evaluation, and static analyses.

Programs are built from six constructs (``skip``, assignment, probabilistic
choice, sequencing, conditionals, loops).  Expressions are integer valued and
guards are two-valued predicates over program states.  All nodes are frozen
dataclasses, so ASTs are hashable and compare structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Tuple

from .errors import EvalFault

__all__ = [
    "State", "TableEnv", "EMPTY_ENV",
    "Expr", "Const", "Var", "Add", "Sub", "Mul", "Neg", "Table1", "Table2", "Pow2", "Shr", "Min",
    "Pred", "Cmp", "And", "Or", "Not", "BoolConst", "TRUE", "FALSE",
    "Program", "Skip", "Assign", "PChoice", "Seq", "Ite", "While",
    "eval_expr", "eval_pred", "seq", "unmodified_vars", "read_vars", "written_vars",
    "program_vars", "is_loop_free", "AffineMap", "injective_inverse",
    "pretty", "pretty_expr", "pretty_pred",
]


class State:
    """An immutable program state: a finite map from variable names to integers.

    Variables that are not bound read as ``0``; binding a variable to ``0`` is
    the same as leaving it unbound, so two states are equal iff they agree on
    every variable.
    """

    __slots__ = ("_map", "_key", "_hash")

    def __init__(self, mapping: Optional[Mapping[str, int]] = None, **bindings: int):
        items = dict(mapping or {})
        items.update(bindings)
        self._map = {k: int(v) for k, v in items.items() if v != 0}
        self._key = tuple(sorted(self._map.items()))
        self._hash = hash(self._key)

    def __getitem__(self, name: str) -> int:
        return self._map.get(name, 0)

    def get(self, name: str, default: int = 0) -> int:
        return self._map.get(name, default)

    def set(self, name: str, value: int) -> "State":
        """Return the updated state ``σ[name/value]``."""
        new = State.__new__(State)
        m = dict(self._map)
        if value:
            m[name] = value
        else:
            m.pop(name, None)
        new._map = m
        new._key = tuple(sorted(m.items()))
        new._hash = hash(new._key)
        return new

    def restrict(self, names) -> "State":
        names = set(names)
        return State({k: v for k, v in self._map.items() if k in names})

    def items(self):
        return self._key

    def bound_names(self):
        return tuple(k for k, _ in self._key)

    def values_for(self, names) -> Tuple[int, ...]:
        return tuple(self._map.get(n, 0) for n in names)

    def render(self, names) -> str:
        names = list(names) + [k for k in self.bound_names() if k not in names]
        return "{" + ",".join(f"{n}={self[n]}" for n in names) + "}"

    def __eq__(self, other):
        return isinstance(other, State) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self._key)
        return f"State({inner})"


@dataclass(frozen=True)
class TableEnv:
    """Read-only integer tables that expressions may index.

    ``tables1`` maps names to sequences, ``tables2`` maps names to rectangular
    matrices (``T[i, j]`` reads row ``i``, column ``j``).  Reads outside the
    stored bounds, including negative indices, return ``0``.
    """

    tables1: Mapping[str, Tuple[int, ...]] = field(default_factory=dict)
    tables2: Mapping[str, Tuple[Tuple[int, ...], ...]] = field(default_factory=dict)

    def __post_init__(self):
        t1 = {name: tuple(int(v) for v in seq) for name, seq in self.tables1.items()}
        t2 = {}
        for name, rows in self.tables2.items():
            rows = tuple(tuple(int(v) for v in row) for row in rows)
            if len({len(r) for r in rows}) > 1:
                raise ValueError(f"table2 {name!r} is not rectangular")
            t2[name] = rows
        clash = set(t1) & set(t2)
        if clash:
            raise ValueError(f"table declared twice: {sorted(clash)}")
        object.__setattr__(self, "tables1", t1)
        object.__setattr__(self, "tables2", t2)

    def read1(self, name, i):
        seq = self.tables1[name]
        return seq[i] if 0 <= i < len(seq) else 0

    def read2(self, name, i, j):
        rows = self.tables2[name]
        if 0 <= i < len(rows):
            row = rows[i]
            if 0 <= j < len(row):
                return row[j]
        return 0

    def arities(self):
        out = {name: 1 for name in self.tables1}
        out.update({name: 2 for name in self.tables2})
        return out

    def merged(self, other: "TableEnv") -> "TableEnv":
        return TableEnv({**self.tables1, **other.tables1}, {**self.tables2, **other.tables2})

    def __hash__(self):
        return hash((tuple(sorted(self.tables1.items())), tuple(sorted(self.tables2.items()))))


EMPTY_ENV = TableEnv()


# -- expressions -------------------------------------------------------------

class Expr:
    """Integer-valued expression."""

    __slots__ = ()

    def vars(self):
        out = []
        _collect_vars(self, out)
        return out


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Table1(Expr):
    table: str
    index: Expr


@dataclass(frozen=True)
class Table2(Expr):
    table: str
    row: Expr
    col: Expr


@dataclass(frozen=True)
class Pow2(Expr):
    exponent: Expr


@dataclass(frozen=True)
class Shr(Expr):
    value: Expr
    shift: Expr


@dataclass(frozen=True)
class Min(Expr):
    left: Expr
    right: Expr


def eval_expr(e: Expr, state, env: TableEnv = EMPTY_ENV) -> int:
    """Evaluate ``e`` in ``state``; ``state`` is anything indexable by variable name."""
    t = type(e)
    if t is Const:
        return e.value
    if t is Var:
        return state[e.name]
    if t is Add:
        return eval_expr(e.left, state, env) + eval_expr(e.right, state, env)
    if t is Sub:
        return eval_expr(e.left, state, env) - eval_expr(e.right, state, env)
    if t is Mul:
        return eval_expr(e.left, state, env) * eval_expr(e.right, state, env)
    if t is Neg:
        return -eval_expr(e.operand, state, env)
    if t is Table1:
        return env.read1(e.table, eval_expr(e.index, state, env))
    if t is Table2:
        return env.read2(e.table, eval_expr(e.row, state, env), eval_expr(e.col, state, env))
    if t is Pow2:
        k = eval_expr(e.exponent, state, env)
        if k < 0:
            raise EvalFault(f"pow2 of negative exponent {k}")
        return 1 << k
    if t is Shr:
        a = eval_expr(e.value, state, env)
        k = eval_expr(e.shift, state, env)
        if k < 0:
            raise EvalFault(f"shift by negative amount {k}")
        return a >> k
    if t is Min:
        return min(eval_expr(e.left, state, env), eval_expr(e.right, state, env))
    raise TypeError(f"not an expression: {e!r}")


def _children(e):
    t = type(e)
    if t in (Const, Var):
        return ()
    if t in (Add, Sub, Mul, Min):
        return (e.left, e.right)
    if t is Neg:
        return (e.operand,)
    if t is Table1:
        return (e.index,)
    if t is Table2:
        return (e.row, e.col)
    if t is Pow2:
        return (e.exponent,)
    if t is Shr:
        return (e.value, e.shift)
    raise TypeError(f"not an expression: {e!r}")


def _collect_vars(e, out):
    if type(e) is Var:
        if e.name not in out:
            out.append(e.name)
        return
    for child in _children(e):
        _collect_vars(child, out)


def _mentions_table(e):
    if type(e) in (Table1, Table2):
        return True
    return any(_mentions_table(c) for c in _children(e))


# -- predicates --------------------------------------------------------------

RELOPS = ("<", "<=", "=", "!=", ">=", ">")

_REL = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    ">=": lambda a, b: a >= b,
    ">": lambda a, b: a > b,
}


class Pred:
    """Two-valued guard over program states."""

    __slots__ = ()

    def vars(self):
        out = []
        _collect_pred_vars(self, out)
        return out


@dataclass(frozen=True)
class Cmp(Pred):
    left: Expr
    op: str
    right: Expr

    def __post_init__(self):
        if self.op not in _REL:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class And(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Or(Pred):
    left: Pred
    right: Pred


@dataclass(frozen=True)
class Not(Pred):
    operand: Pred


@dataclass(frozen=True)
class BoolConst(Pred):
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


def eval_pred(b: Pred, state, env: TableEnv = EMPTY_ENV) -> bool:
    t = type(b)
    if t is Cmp:
        return _REL[b.op](eval_expr(b.left, state, env), eval_expr(b.right, state, env))
    if t is And:
        return eval_pred(b.left, state, env) and eval_pred(b.right, state, env)
    if t is Or:
        return eval_pred(b.left, state, env) or eval_pred(b.right, state, env)
    if t is Not:
        return not eval_pred(b.operand, state, env)
    if t is BoolConst:
        return b.value
    raise TypeError(f"not a predicate: {b!r}")


def _collect_pred_vars(b, out):
    t = type(b)
    if t is Cmp:
        _collect_vars(b.left, out)
        _collect_vars(b.right, out)
    elif t in (And, Or):
        _collect_pred_vars(b.left, out)
        _collect_pred_vars(b.right, out)
    elif t is Not:
        _collect_pred_vars(b.operand, out)


# -- programs ----------------------------------------------------------------

class Program:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Program):
    pass


@dataclass(frozen=True)
class Assign(Program):
    var: str
    expr: Expr


@dataclass(frozen=True)
class PChoice(Program):
    left: Program
    prob: Fraction
    right: Program

    def __post_init__(self):
        p = Fraction(self.prob)
        if not 0 <= p <= 1:
            raise ValueError(f"probability {p} outside [0, 1]")
        object.__setattr__(self, "prob", p)


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class Ite(Program):
    cond: Pred
    then: Program
    orelse: Program


@dataclass(frozen=True)
class While(Program):
    cond: Pred
    body: Program


def seq(*programs: Program) -> Program:
    """Right-nested sequential composition of one or more programs."""
    if not programs:
        return Skip()
    out = programs[-1]
    for p in reversed(programs[:-1]):
        out = Seq(p, out)
    return out


def _walk(C):
    yield C
    t = type(C)
    if t in (PChoice,):
        yield from _walk(C.left)
        yield from _walk(C.right)
    elif t is Seq:
        yield from _walk(C.first)
        yield from _walk(C.second)
    elif t is Ite:
        yield from _walk(C.then)
        yield from _walk(C.orelse)
    elif t is While:
        yield from _walk(C.body)


def written_vars(C: Program):
    out = []
    for node in _walk(C):
        if type(node) is Assign and node.var not in out:
            out.append(node.var)
    return out


def read_vars(C: Program):
    out = []
    for node in _walk(C):
        t = type(node)
        if t is Assign:
            _collect_vars(node.expr, out)
        elif t in (Ite, While):
            _collect_pred_vars(node.cond, out)
    return out


def program_vars(C: Program):
    """All variables of ``C`` in order of first occurrence."""
    out = []
    for node in _walk(C):
        t = type(node)
        if t is Assign:
            if node.var not in out:
                out.append(node.var)
            _collect_vars(node.expr, out)
        elif t in (Ite, While):
            _collect_pred_vars(node.cond, out)
    return out


def unmodified_vars(C: Program) -> frozenset:
    """Variables read somewhere in ``C`` that are never assigned in ``C``."""
    return frozenset(read_vars(C)) - frozenset(written_vars(C))


def is_loop_free(C: Program) -> bool:
    return not any(type(node) is While for node in _walk(C))


# -- injective assignments ---------------------------------------------------

def _is_closed(e):
    return not e.vars() and not _mentions_table(e)


def _add(a, b):
    if a == Const(0):
        return b
    if b == Const(0):
        return a
    if type(a) is Const and type(b) is Const:
        return Const(a.value + b.value)
    if type(b) is Neg:
        return _sub(a, b.operand)
    if type(b) is Const and b.value < 0:
        return Sub(a, Const(-b.value))
    return Add(a, b)


def _sub(a, b):
    if b == Const(0):
        return a
    if type(a) is Const and type(b) is Const:
        return Const(a.value - b.value)
    if type(b) is Neg:
        return _add(a, b.operand)
    if type(b) is Const and b.value < 0:
        return Add(a, Const(-b.value))
    if a == Const(0):
        return _neg(b)
    return Sub(a, b)


def _neg(a):
    if type(a) is Const:
        return Const(-a.value)
    if type(a) is Neg:
        return a.operand
    return Neg(a)


def _scale(k, a):
    if k == 0:
        return Const(0)
    if k == 1:
        return a
    if k == -1:
        return _neg(a)
    if type(a) is Const:
        return Const(k * a.value)
    return Mul(Const(k), a)


def _affine(e: Expr, x: str):
    """Decompose ``e`` as ``a*x + t`` with integer ``a`` and ``t`` free of ``x``."""
    t = type(e)
    if t is Const:
        return 0, e
    if t is Var:
        return (1, Const(0)) if e.name == x else (0, e)
    if t in (Add, Sub):
        left = _affine(e.left, x)
        right = _affine(e.right, x)
        if left is None or right is None:
            return None
        if t is Add:
            return left[0] + right[0], _add(left[1], right[1])
        return left[0] - right[0], _sub(left[1], right[1])
    if t is Neg:
        inner = _affine(e.operand, x)
        if inner is None:
            return None
        return -inner[0], _neg(inner[1])
    if t is Mul:
        left = _affine(e.left, x)
        right = _affine(e.right, x)
        if left is None or right is None:
            return None
        if left[0] == 0 and _is_closed(left[1]):
            k = eval_expr(left[1], State())
            return k * right[0], _scale(k, right[1])
        if right[0] == 0 and _is_closed(right[1]):
            k = eval_expr(right[1], State())
            return k * left[0], _scale(k, left[1])
        if left[0] == 0 and right[0] == 0:
            return 0, e
        return None
    if x in e.vars():
        return None
    return 0, e


@dataclass(frozen=True)
class AffineMap:
    """The partial map ``σ ↦ (coef·σ(var) + offset(σ)) / divisor``.

    It is defined at ``σ`` iff ``divisor`` divides the numerator.  ``offset``
    never mentions ``var``, which makes the map injective in ``var`` whenever
    ``coef`` is nonzero.
    """

    var: str
    coef: int
    offset: Expr
    divisor: int = 1

    def __post_init__(self):
        if self.coef == 0 or self.divisor == 0:
            raise ValueError("affine map needs nonzero coefficient and divisor")
        if self.var in self.offset.vars():
            raise ValueError("offset must not mention the substituted variable")

    def apply(self, state, env: TableEnv = EMPTY_ENV) -> Optional[int]:
        num = self.coef * state[self.var] + eval_expr(self.offset, state, env)
        q, r = divmod(num, self.divisor)
        return q if r == 0 else None

    def guard_always_true(self) -> bool:
        return self.divisor in (1, -1)

    def inverse(self) -> "AffineMap":
        """The affine map that undoes this one where both are defined."""
        return AffineMap(self.var, self.divisor, _neg(self.offset), self.coef)

    def numerator(self) -> Expr:
        return _add(_scale(self.coef, Var(self.var)), self.offset)

    def __str__(self):
        num = pretty_expr(self.numerator())
        if self.divisor == 1:
            return num
        return f"({num}) / {self.divisor}"


def injective_inverse(e: Expr, x: str) -> Optional[AffineMap]:
    """Partial inverse of ``e`` in ``x`` when ``e`` is syntactically affine in ``x``.

    For ``e = a*x + t`` this is ``(x - t) / a``, defined where ``a`` divides
    ``x - t``.  Returns ``None`` for non-affine expressions or ``a = 0``.
    """
    dec = _affine(e, x)
    if dec is None or dec[0] == 0:
        return None
    a, t = dec
    return AffineMap(x, 1, _neg(t), a)


# -- pretty printing ---------------------------------------------------------

def pretty_expr(e: Expr, level: int = 0) -> str:
    t = type(e)
    if t is Const:
        s = str(e.value)
        return f"({s})" if e.value < 0 and level > 0 else s
    if t is Var:
        return e.name
    if t in (Add, Sub):
        op = "+" if t is Add else "-"
        s = f"{pretty_expr(e.left, 1)} {op} {pretty_expr(e.right, 2)}"
        return f"({s})" if level > 1 else s
    if t is Mul:
        s = f"{pretty_expr(e.left, 2)} * {pretty_expr(e.right, 3)}"
        return f"({s})" if level > 2 else s
    if t is Neg:
        if type(e.operand) is Const and e.operand.value >= 0:
            return f"-({e.operand.value})"
        return f"-{pretty_expr(e.operand, 3)}"
    if t is Table1:
        return f"{e.table}[{pretty_expr(e.index)}]"
    if t is Table2:
        return f"{e.table}[{pretty_expr(e.row)}, {pretty_expr(e.col)}]"
    if t is Pow2:
        return f"pow2({pretty_expr(e.exponent)})"
    if t is Shr:
        return f"shr({pretty_expr(e.value)}, {pretty_expr(e.shift)})"
    if t is Min:
        return f"min({pretty_expr(e.left)}, {pretty_expr(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def pretty_pred(b: Pred, level: int = 0) -> str:
    t = type(b)
    if t is Cmp:
        return f"{pretty_expr(b.left)} {b.op} {pretty_expr(b.right)}"
    if t is BoolConst:
        return "true" if b.value else "false"
    if t is Or:
        s = f"{pretty_pred(b.left, 1)} or {pretty_pred(b.right, 2)}"
        return f"({s})" if level > 1 else s
    if t is And:
        s = f"{pretty_pred(b.left, 2)} and {pretty_pred(b.right, 3)}"
        return f"({s})" if level > 2 else s
    if t is Not:
        inner = b.operand
        if type(inner) in (Cmp, And, Or):
            return f"not ({pretty_pred(inner)})"
        return f"not {pretty_pred(inner, 3)}"
    raise TypeError(f"not a predicate: {b!r}")


def _fmt_prob(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def _pretty_lines(C: Program, indent: int):
    pad = "    " * indent
    t = type(C)
    if t is Skip:
        return [pad + "skip"]
    if t is Assign:
        return [f"{pad}{C.var} := {pretty_expr(C.expr)}"]
    if t is Seq:
        if type(C.first) is Seq:
            first = [pad + "{"] + _pretty_lines(C.first, indent + 1) + [pad + "}"]
        else:
            first = _pretty_lines(C.first, indent)
        first[-1] += ";"
        return first + _pretty_lines(C.second, indent)
    if t is PChoice:
        return ([pad + "{"] + _pretty_lines(C.left, indent + 1)
                + [f"{pad}}} [{_fmt_prob(C.prob)}] {{"]
                + _pretty_lines(C.right, indent + 1) + [pad + "}"])
    if t is Ite:
        return ([f"{pad}if ({pretty_pred(C.cond)}) {{"] + _pretty_lines(C.then, indent + 1)
                + [pad + "} else {"] + _pretty_lines(C.orelse, indent + 1) + [pad + "}"])
    if t is While:
        return ([f"{pad}while ({pretty_pred(C.cond)}) {{"] + _pretty_lines(C.body, indent + 1)
                + [pad + "}"])
    raise TypeError(f"not a program: {C!r}")


def pretty(C: Program, env: Optional[TableEnv] = None) -> str:
    """Render ``C`` (and optional table declarations) in the concrete syntax."""
    lines = []
    if env is not None:
        for name, seq_ in env.tables1.items():
            lines.append(f"table1 {name} = [{', '.join(map(str, seq_))}]")
        for name, rows in env.tables2.items():
            body = ", ".join("[" + ", ".join(map(str, r)) + "]" for r in rows)
            lines.append(f"table2 {name} = [{body}]")
    lines.extend(_pretty_lines(C, 0))
    return "\n".join(lines) + "\n"
