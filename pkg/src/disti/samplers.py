"""Fast Dice Roller and Fast Loaded Dice Roller as programs, invariants and samplers.

Both samplers live in the random bit model: every probabilistic choice in
their loops is a fair coin, so one loop iteration consumes exactly one bit.
The same program text drives the exact semantics and the single-run
samplers below, which makes bit-level replay and path enumeration possible.

FLDR preprocessing follows the binary-tree reading of the proposal
distribution ``(a_1, ..., a_n, 2^k - m) / 2^k``: row ``c`` of the tree holds a
leaf labelled ``i`` iff bit ``k - c`` of ``a_i`` is set.  Within a row,
internal nodes come first, then the leaves in descending label order.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .assertions import Assertion, parse_assertion
from .dist import SubDist, dirac
from .errors import BitsExhausted
from .lang import (
    Assign, Ite, PChoice, Program, Seq, Skip, State, TableEnv, While, eval_expr, eval_pred,
    pretty,
)
from .parse import parse_program

__all__ = [
    "BitSource", "ReplayBits", "SeededBits", "run_single", "bernoulli",
    "FDR_SOURCE", "fdr_program", "fdr_initial", "ifdr_assertion", "fdr_post",
    "fdr_sample", "fdr_members",
    "FldrTables", "fldr_preprocess", "FldrPredicates", "fldr_predicates", "fldr_program",
    "fldr_initial", "ifldr_assertion", "fldr_post", "fldr_sample", "terminated_paths",
]


# -- bit sources -------------------------------------------------------------------

class BitSource:
    """Supplier of fair bits.  ``consumed`` counts bits handed out so far."""

    def __init__(self):
        self.consumed = 0

    def _next(self) -> int:
        raise NotImplementedError

    def bit(self) -> int:
        b = self._next()
        self.consumed += 1
        return b


class ReplayBits(BitSource):
    """Replays a fixed string of ``0``/``1`` characters; raises when it runs out."""

    def __init__(self, bits: str):
        super().__init__()
        bits = "".join(bits.split())
        if set(bits) - {"0", "1"}:
            raise ValueError(f"replay bits must be 0/1 characters, got {bits!r}")
        self.bits = bits

    def _next(self) -> int:
        if self.consumed >= len(self.bits):
            raise BitsExhausted(f"replay sequence of {len(self.bits)} bits exhausted")
        return int(self.bits[self.consumed])


class SeededBits(BitSource):
    """Pseudorandom bits from Python's Mersenne Twister (``random.Random``) seeded with ``seed``."""

    def __init__(self, seed: int):
        super().__init__()
        self.seed = seed
        self._rng = random.Random(seed)

    def _next(self) -> int:
        return self._rng.getrandbits(1)


def bernoulli(p: Fraction, bits: BitSource) -> bool:
    """Return True with probability ``p`` by comparing a lazily drawn uniform with ``p``.

    The uniform is ``0.b1 b2 ...`` in binary and the answer is ``U < p``; a fair
    choice therefore costs one bit, and bit 0 means True.
    """
    if p == 0:
        return False
    if p == 1:
        return True
    x = Fraction(p)
    while True:
        x *= 2
        digit = 1 if x >= 1 else 0
        x -= digit
        b = bits.bit()
        if b != digit:
            return b < digit
        if x == 0:
            return False  # the remaining digits of p are all zero, so U >= p


def run_single(C: Program, state: State, env: TableEnv, bits: BitSource,
               max_iterations: Optional[int] = None) -> State:
    """Execute ``C`` on one state, resolving choices with ``bits`` (left branch on True)."""
    stack: List[Program] = [C]
    iterations = 0
    while stack:
        node = stack.pop()
        t = type(node)
        if t is Skip:
            continue
        if t is Assign:
            state = state.set(node.var, eval_expr(node.expr, state, env))
        elif t is Seq:
            stack.append(node.second)
            stack.append(node.first)
        elif t is PChoice:
            stack.append(node.left if bernoulli(node.prob, bits) else node.right)
        elif t is Ite:
            stack.append(node.then if eval_pred(node.cond, state, env) else node.orelse)
        elif t is While:
            if eval_pred(node.cond, state, env):
                iterations += 1
                if max_iterations is not None and iterations > max_iterations:
                    raise RuntimeError("iteration limit exceeded")
                stack.append(node)
                stack.append(node.body)
        else:
            raise TypeError(f"not a program: {node!r}")
    return state


def terminated_paths(C: While, start: State, env: TableEnv, length: int) -> SubDist:
    """Aggregate final states over all bit strings of ``length`` bits.

    A string contributes ``2^-length`` when the run on it terminates before
    the bits run out, so the result is the exact probability of terminating
    within ``length`` bits, split by final state.
    """
    weights: Dict[State, Fraction] = {}
    unit = Fraction(1, 2 ** length)
    for combo in itertools.product("01", repeat=length):
        try:
            final = run_single(C, start, env, ReplayBits("".join(combo)))
        except BitsExhausted:
            continue
        weights[final] = weights.get(final, 0) + unit
    return SubDist(weights, start.bound_names())


# -- Fast Dice Roller ----------------------------------------------------------------

FDR_SOURCE = """\
while (v < n) {
    v := 2 * v;
    { c := 2 * c } [1/2] { c := 2 * c + 1 };
    if (c >= n) {
        v := v - n;
        c := c - n
    } else {
        skip
    }
}
"""

FDR_SCOPE = ("v", "c", "n")


@lru_cache(maxsize=None)
def _fdr_loop() -> While:
    program, _ = parse_program(FDR_SOURCE)
    return program


def fdr_program(n: int) -> Tuple[While, SubDist]:
    """The FDR loop and its initial distribution ``δ(v=1, c=0, n=n)``."""
    if n < 1:
        raise ValueError("FDR needs n >= 1")
    return _fdr_loop(), fdr_initial(n)


def fdr_initial(n: int) -> SubDist:
    return dirac(State(v=1, c=0, n=n), FDR_SCOPE)


def ifdr_assertion(n: int, v_upper: str = "2*n") -> Assertion:
    """The FDR invariant for a concrete ``n``.

    ``v_upper`` is the strict upper bound on ``v``.  The default ``2*n`` keeps
    the invariant satisfiable at ``n = 1``; ``"2*n - 1"`` is the tighter form,
    which excludes the initial state when ``n = 1``.
    """
    text = (
        f"exists N in {n}..{n} :\n"
        "Pr[n = N] = 1\n"
        f"Pr[0 < v and v < {v_upper}] = 1\n"
        "Pr[0 <= c and c < min(v,n)] = 1\n"
        "uniform over (0 <= c and c < min(v,n) and n = N) group by (v)\n"
        "mass = 1\n"
    )
    return parse_assertion(text)


def fdr_post(n: int) -> Assertion:
    """Terminated mass on ``c`` is ``r`` times the uniform distribution on ``0..n-1``."""
    text = (
        f"exists N in {n}..{n} :\n"
        "support in (0 <= c and c < N and v >= N)\n"
        "forall J in 1..N-1 : Pr[c = J] = Pr[c = 0]\n"
    )
    return parse_assertion(text)


def fdr_members(n: int, count: int, rng: random.Random, max_columns: int = 4) -> List[SubDist]:
    """Random members of the FDR invariant: uniform columns with random column weights."""
    columns = list(range(1, 2 * n - 1))
    out = []
    if not columns:
        return out
    for _ in range(count):
        chosen = rng.sample(columns, rng.randint(1, min(max_columns, len(columns))))
        raw = [rng.randint(1, 9) for _ in chosen]
        total = sum(raw)
        w: Dict[State, Fraction] = {}
        for v, r in zip(chosen, raw):
            cells = min(v, n)
            for c in range(cells):
                w[State(v=v, c=c, n=n)] = Fraction(r, total * cells)
        out.append(SubDist(w, FDR_SCOPE))
    return out


def fdr_sample(n: int, bits: BitSource) -> Tuple[int, int]:
    """Draw one uniform integer in ``0..n-1``; returns ``(value, bits consumed)``."""
    loop, init = fdr_program(n)
    start = bits.consumed
    final = run_single(loop, State(v=1, c=0, n=n), TableEnv(), bits)
    return final["c"], bits.consumed - start


# -- Fast Loaded Dice Roller ----------------------------------------------------------

@dataclass(frozen=True)
class FldrTables:
    """Preprocessed FLDR tree.

    ``rows[c]`` lists row ``c`` of the tree left to right (0 for an internal
    node, else a leaf label); ``h[c]`` counts the leaves of row ``c``.
    ``matrix()`` is the rectangular ``H[d][c]`` table read by the program.
    """

    a: Tuple[int, ...]
    m: int
    k: int
    h: Tuple[int, ...]
    rows: Tuple[Tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def reject(self) -> int:
        return 2 ** self.k - self.m

    def H(self, d: int, c: int) -> int:
        if 0 <= c < len(self.rows) and 0 <= d < len(self.rows[c]):
            return self.rows[c][d]
        return 0

    def matrix(self) -> Tuple[Tuple[int, ...], ...]:
        height = max(len(r) for r in self.rows)
        return tuple(tuple(self.H(d, c) for c in range(self.k + 1)) for d in range(height))

    def bound(self, c: int) -> int:
        """Index of the first leaf in row ``c`` (equivalently, the number of internal nodes)."""
        if c < 0:
            raise ValueError("bound is defined for rows c >= 0")
        return 2 ** c - sum(self.h[j] * 2 ** (c - j) for j in range(min(c, self.k) + 1))

    def env(self) -> TableEnv:
        return TableEnv({"h": self.h}, {"H": self.matrix()})

    def dump(self) -> str:
        """Table declarations in program-header syntax."""
        return pretty(Skip(), self.env()).rsplit("skip", 1)[0]


def fldr_preprocess(a: Sequence[int]) -> FldrTables:
    a = tuple(int(x) for x in a)
    if not a:
        raise ValueError("FLDR needs at least one weight")
    if any(x <= 0 for x in a):
        raise ValueError("FLDR weights must be positive")
    m = sum(a)
    k = (m - 1).bit_length()
    labels = a + (2 ** k - m,)
    h = []
    rows = []
    internal_prev = 1  # a virtual parent row with a single internal node
    for c in range(k + 1):
        present = [i for i in range(len(labels), 0, -1) if (labels[i - 1] >> (k - c)) & 1]
        width = 1 if c == 0 else 2 * internal_prev
        internal = width - len(present)
        if internal < 0:
            raise AssertionError("binary expansion does not fit the tree")
        rows.append(tuple([0] * internal + present))
        h.append(len(present))
        internal_prev = internal
    return FldrTables(a, m, k, tuple(h), tuple(rows))


@dataclass(frozen=True)
class FldrPredicates:
    tables: FldrTables

    @property
    def n(self) -> int:
        return self.tables.n

    def bound(self, c: int) -> int:
        return self.tables.bound(c)

    def is_there(self, c: int) -> int:
        t = self.tables
        return int(t.H(t.bound(c), c) == t.n + 1)

    @lru_cache(maxsize=None)
    def prob(self, i: int, j: Optional[int] = None) -> Fraction:
        """``Σ 2^-(c-j)`` over leaves labelled ``i`` below row ``j`` (``j`` absent: all rows, ``2^-c``)."""
        t = self.tables
        total = Fraction(0)
        for c, row in enumerate(t.rows):
            if j is not None and c <= j:
                continue
            hits = sum(1 for x in row if x == i)
            if hits:
                total += Fraction(hits, 2 ** (c - (j or 0)))
        return total

    @lru_cache(maxsize=None)
    def probt(self, i: int, j: Optional[int] = None) -> Fraction:
        if j is None:
            reject = self.prob(self.n + 1)
            if reject == 1:
                raise ZeroDivisionError("proposal is all rejection")
            return self.prob(i) / (1 - reject)
        return self.prob(i, j) + self.prob(self.n + 1, j) * self.probt(i)


def fldr_predicates(tables: FldrTables) -> FldrPredicates:
    return FldrPredicates(tables)


FLDR_SCOPE = ("d", "c", "n")


def _bound_expr_source(k: int) -> str:
    terms = ["h[c]"] + [f"{2 ** t} * h[c - {t}]" for t in range(1, k + 1)]
    return f"pow2(c) - ({' + '.join(terms)})"


def fldr_program(a: Sequence[int]) -> Tuple[While, TableEnv, SubDist, FldrTables]:
    """The FLDR loop over tables ``h`` and ``H``, and its initial distribution."""
    tables = fldr_preprocess(a)
    source = (
        f"while (d < {_bound_expr_source(tables.k)}) {{\n"
        "    c := c + 1;\n"
        "    { d := 2 * d } [1/2] { d := 2 * d + 1 };\n"
        "    if (H[d, c] = n + 1) {\n"
        "        c := 0;\n"
        "        d := 0\n"
        "    } else {\n"
        "        skip\n"
        "    }\n"
        "}\n"
    )
    env = tables.env()
    program, env = parse_program(source, env)
    return program, env, fldr_initial(tables.n), tables


def fldr_initial(n: int) -> SubDist:
    return dirac(State(d=0, c=0, n=n), FLDR_SCOPE)


def _fldr_assertion_env(tables: FldrTables) -> Tuple[TableEnv, Dict[str, object]]:
    preds = fldr_predicates(tables)
    rows = range(tables.k + 1)
    env = tables.env().merged(TableEnv({
        "bound": tuple(preds.bound(c) for c in rows),
        "isThere": tuple(preds.is_there(c) for c in rows),
    }))
    functions = {"probt": preds.probt, "prob": preds.prob}
    return env, functions


def ifldr_assertion(a: Sequence[int], leaf_upper: str = "<",
                    literal_row_bound: bool = False) -> Assertion:
    """The six-part FLDR invariant for a concrete input.

    ``leaf_upper`` is the comparison closing the leaf range of the last
    clause; ``"<"`` covers exactly the ``h[c]`` leaves of a row.

    The row-index clause bounds ``d`` by the width of row ``c`` of the tree,
    ``bound(c) + h[c]``. With ``literal_row_bound`` it is ``d <= n`` instead,
    which is too tight whenever a row is wider than the number of labels
    (e.g. ``a = (2, 3)``).
    """
    tables = fldr_preprocess(a)
    env, functions = _fldr_assertion_env(tables)
    n, k = tables.n, tables.k
    row_bound = "d <= n" if literal_row_bound else "d < bound(c) + h[c]"
    text = (
        f"exists N in {n}..{n} :\n"
        "Pr[n = N] = 1\n"
        f"Pr[0 <= d and {row_bound}] = 1\n"
        f"Pr[0 <= c and c <= {k}] = 1\n"
        "forall I in 1..N : sum{H[d, c] = I} weight 1"
        f" + sum{{d = 0 and 0 <= c and c < {k} and n = N}} weight probt(I, c) <= probt(I)\n"
        "uniform over (n = N and 0 <= d and d <= bound(c) - 1) group by (c)\n"
        "uniform over (n = N and bound(c) + isThere(c) <= d"
        f" and d {leaf_upper} bound(c) + h[c]) group by (c)\n"
    )
    return parse_assertion(text, env, functions)


def fldr_post(a: Sequence[int]) -> Assertion:
    """Terminated mass on each label is at most its target probability ``a_i / m``."""
    tables = fldr_preprocess(a)
    env, functions = _fldr_assertion_env(tables)
    lines = [f"sum{{H[d, c] = {i}}} weight 1 <= {ai} / {tables.m}"
             for i, ai in enumerate(tables.a, start=1)]
    return parse_assertion("\n".join(lines) + "\n", env, functions)


def fldr_sample(a: Sequence[int], bits: BitSource) -> Tuple[int, int]:
    """Draw one label ``i`` with probability ``a_i / m``; returns ``(label, bits consumed)``."""
    loop, env, _, tables = fldr_program(a)
    start = bits.consumed
    final = run_single(loop, State(d=0, c=0, n=tables.n), env, bits)
    return tables.H(final["d"], final["c"]), bits.consumed - start
