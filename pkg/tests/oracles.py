"""Independent reference computations used to cross-check the library.

Nothing here imports the evaluator or the distribution algebra; the values are
built from plain integers, dicts and Fractions.
"""

from fractions import Fraction

from disti.lang import (
    Add, And, Assign, BoolConst, Cmp, Const, Ite, Min, Mul, Neg, Not, Or, PChoice, Pow2, Seq,
    Shr, Skip, Sub, Table1, Table2, Var, While,
)


def expr_vars(e):
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, (Add, Sub, Mul, Min)):
        return expr_vars(e.left) | expr_vars(e.right)
    if isinstance(e, Neg):
        return expr_vars(e.operand)
    if isinstance(e, Table1):
        return expr_vars(e.index)
    if isinstance(e, Table2):
        return expr_vars(e.row) | expr_vars(e.col)
    if isinstance(e, Pow2):
        return expr_vars(e.exponent)
    if isinstance(e, Shr):
        return expr_vars(e.value) | expr_vars(e.shift)
    raise TypeError(e)


def pred_vars(b):
    if isinstance(b, Cmp):
        return expr_vars(b.left) | expr_vars(b.right)
    if isinstance(b, (And, Or)):
        return pred_vars(b.left) | pred_vars(b.right)
    if isinstance(b, Not):
        return pred_vars(b.operand)
    if isinstance(b, BoolConst):
        return set()
    raise TypeError(b)


def reads_writes(C):
    """(variables read, variables written) by structural recursion."""
    if isinstance(C, Skip):
        return set(), set()
    if isinstance(C, Assign):
        return expr_vars(C.expr), {C.var}
    if isinstance(C, (Seq, PChoice)):
        a, b = (C.first, C.second) if isinstance(C, Seq) else (C.left, C.right)
        r1, w1 = reads_writes(a)
        r2, w2 = reads_writes(b)
        return r1 | r2, w1 | w2
    if isinstance(C, Ite):
        r1, w1 = reads_writes(C.then)
        r2, w2 = reads_writes(C.orelse)
        return pred_vars(C.cond) | r1 | r2, w1 | w2
    if isinstance(C, While):
        r, w = reads_writes(C.body)
        return pred_vars(C.cond) | r, w
    raise TypeError(C)


def fdr_step(v, c, n):
    """Successors of one FDR iteration from ``(v, c)``, as plain integer pairs."""
    if v >= n:
        return [((v, c), Fraction(1))]
    out = []
    for bit in (0, 1):
        nv, nc = 2 * v, 2 * c + bit
        if nc >= n:
            nv, nc = nv - n, nc - n
        out.append(((nv, nc), Fraction(1, 2)))
    return out


def fdr_edges(n):
    """Edges of the FDR chain reachable from ``(1, 0)``, breadth first."""
    seen = [(1, 0)]
    edges = []
    i = 0
    while i < len(seen):
        v, c = seen[i]
        i += 1
        succ = {}
        for t, p in fdr_step(v, c, n):
            succ[t] = succ.get(t, 0) + p
        for t in sorted(succ):
            edges.append(((v, c), t, succ[t]))
            if t not in seen:
                seen.append(t)
    return edges


def fdr_terminated(n, depth):
    """Terminated mass per ``c`` after at most ``depth`` iterations, plus leftover guard mass."""
    current = {(1, 0): Fraction(1)}
    done = {}
    for _ in range(depth + 1):
        nxt = {}
        for (v, c), p in current.items():
            if v >= n:
                done[c] = done.get(c, 0) + p
                continue
            for t, q in fdr_step(v, c, n):
                nxt[t] = nxt.get(t, 0) + p * q
        current = nxt
        if not current:
            break
    residual = sum(current.values(), Fraction(0))
    return done, residual


def binary_digits(num, den, k):
    """First ``k`` binary digits of ``num/den`` after the point, as a list of 0/1."""
    out = []
    for _ in range(k):
        num *= 2
        out.append(1 if num >= den else 0)
        if num >= den:
            num -= den
    return out


def von_neumann_column(p, mu):
    """One loop iteration of the two-coin procedure on a dict over ``(x, y)``."""
    q = 1 - p
    coin = {0: p, 1: q}
    out = {}
    for (x, y), w in mu.items():
        if x != y:
            out[(x, y)] = out.get((x, y), 0) + w
            continue
        for a in (0, 1):
            for b in (0, 1):
                out[(a, b)] = out.get((a, b), 0) + w * coin[a] * coin[b]
    return out
