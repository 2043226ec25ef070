"""Programs as exact distribution transformers.

Loop-free programs are evaluated exactly.  A loop ``while (b) { body }`` is
evaluated by iterating the guarded step ``μ ↦ [¬b]μ + ⟦body⟧([b]μ)`` and
reading off the ``[¬b]`` part of the iterate, which is a pointwise
nondecreasing chain converging to the loop's output.  After ``max_depth``
steps the mass still on guard states is reported as the residual.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional

from .dist import SubDist, substitute
from .errors import EvalFault
from .lang import (
    EMPTY_ENV, Assign, Ite, Not, PChoice, Pred, Program, Seq, Skip, State, TableEnv, While,
    eval_expr, eval_pred, injective_inverse, is_loop_free, program_vars,
)

__all__ = [
    "DEFAULT_DEPTH", "default_depth", "LoopOutcome", "Denotation",
    "denote_loopfree", "guarded_step", "denote_loop_bounded", "kleene_iterate", "denote",
    "assign_summation", "assign_substitution",
]

DEFAULT_DEPTH = 64


def default_depth() -> int:
    raw = os.environ.get("DISTI_DEPTH_DEFAULT")
    if raw is None or raw.strip() == "":
        return DEFAULT_DEPTH
    value = int(raw)
    if value < 0:
        raise ValueError("DISTI_DEPTH_DEFAULT must be nonnegative")
    return value


@dataclass(frozen=True)
class LoopOutcome:
    """Result of bounded loop evaluation.

    ``residual`` is the mass still on guard states at the last iterate.  A loop
    that reaches an exact fixed point is ``converged`` even if some mass is
    stuck on guard states forever; that mass is reported as ``divergent``.
    """

    converged: bool
    result: SubDist
    residual: Fraction
    depth_used: int
    divergent: Fraction = Fraction(0)


@dataclass(frozen=True)
class Denotation:
    result: SubDist
    residual: Fraction
    converged: bool


class _Budget:
    """Mutable accumulator for residual mass of nested loops."""

    __slots__ = ("depth", "residual", "converged")

    def __init__(self, depth):
        self.depth = depth
        self.residual = Fraction(0)
        self.converged = True


def _faulting(fn, state):
    try:
        return fn()
    except EvalFault as exc:
        raise exc.at(state) from None


def assign_summation(x: str, e, mu: SubDist, env: TableEnv = EMPTY_ENV) -> SubDist:
    """``σ ↦ Σ { μ(τ) : τ[x/e(τ)] = σ }``."""
    w: Dict[State, Fraction] = {}
    for tau, p in mu.items():
        sigma = tau.set(x, _faulting(lambda: eval_expr(e, tau, env), tau))
        w[sigma] = w.get(sigma, 0) + p
    return SubDist(w, mu.scope, _trusted=True)


def assign_substitution(x: str, e, mu: SubDist, env: TableEnv = EMPTY_ENV) -> Optional[SubDist]:
    """``μ[x/e⁻¹]`` when ``e`` is affine and injective in ``x``; ``None`` otherwise."""
    inv = injective_inverse(e, x)
    if inv is None:
        return None
    return substitute(mu, inv, env)


def _run(C: Program, mu: SubDist, env: TableEnv, budget: Optional[_Budget],
         use_substitution: bool) -> SubDist:
    t = type(C)
    if t is Skip:
        return mu
    if t is Assign:
        if use_substitution:
            out = assign_substitution(C.var, C.expr, mu, env)
            if out is not None:
                return out
        return assign_summation(C.var, C.expr, mu, env)
    if t is PChoice:
        left = _run(C.left, mu.scale(C.prob), env, budget, use_substitution)
        right = _run(C.right, mu.scale(1 - C.prob), env, budget, use_substitution)
        return left + right
    if t is Seq:
        return _run(C.second, _run(C.first, mu, env, budget, use_substitution),
                    env, budget, use_substitution)
    if t is Ite:
        yes, no = _split(C.cond, mu, env)
        return (_run(C.then, yes, env, budget, use_substitution)
                + _run(C.orelse, no, env, budget, use_substitution))
    if t is While:
        if budget is None:
            raise ValueError("program contains a loop; use denote or denote_loop_bounded")
        out = _loop(C.cond, C.body, mu, env, budget.depth, budget, use_substitution)
        budget.residual += out.residual
        budget.converged = budget.converged and out.converged
        return out.result
    raise TypeError(f"not a program: {C!r}")


def _split(b: Pred, mu: SubDist, env: TableEnv):
    yes, no = {}, {}
    for s, p in mu.items():
        if _faulting(lambda: eval_pred(b, s, env), s):
            yes[s] = p
        else:
            no[s] = p
    return SubDist(yes, mu.scope, _trusted=True), SubDist(no, mu.scope, _trusted=True)


def denote_loopfree(C: Program, mu: SubDist, env: TableEnv = EMPTY_ENV,
                    use_substitution: bool = False) -> SubDist:
    """Exact output of a loop-free program.

    With ``use_substitution`` set, assignments whose right-hand side is affine
    and injective in the target use the substitution form instead of the
    summation form; both give the same result.
    """
    if not is_loop_free(C):
        raise ValueError("denote_loopfree called on a program with a loop")
    out = _run(C, mu, env, None, use_substitution)
    return out.with_scope(_scope(mu, C))


def _scope(mu, C):
    return mu.scope + tuple(v for v in program_vars(C) if v not in mu.scope)


def guarded_step(b: Pred, body: Program, mu: SubDist, env: TableEnv = EMPTY_ENV,
                 budget: Optional[_Budget] = None, use_substitution: bool = False) -> SubDist:
    """One iteration of ``if (b) { body }``: ``[¬b]μ + ⟦body⟧([b]μ)``."""
    yes, no = _split(b, mu, env)
    if budget is None and not is_loop_free(body):
        budget = _Budget(default_depth())
    return no + _run(body, yes, env, budget, use_substitution)


def _loop(b, body, mu, env, max_depth, budget, use_substitution) -> LoopOutcome:
    if max_depth < 0:
        raise ValueError("max_depth must be nonnegative")
    current = mu
    k = 0
    while True:
        guard_mass = current.prob(b, env)
        if guard_mass == 0:
            return LoopOutcome(True, current, Fraction(0), k)
        if k == max_depth:
            return LoopOutcome(False, current.filter(Not(b), env), guard_mass, k)
        nxt = guarded_step(b, body, current, env, budget, use_substitution)
        if nxt == current:
            return LoopOutcome(True, current.filter(Not(b), env), Fraction(0), k, guard_mass)
        current = nxt
        k += 1


def denote_loop_bounded(b: Pred, body: Program, mu: SubDist, env: TableEnv = EMPTY_ENV,
                        max_depth: Optional[int] = None,
                        use_substitution: bool = False) -> LoopOutcome:
    """Iterate the guarded step at most ``max_depth`` times.

    Residual mass of loops nested in ``body`` is added to the reported residual.
    """
    depth = default_depth() if max_depth is None else max_depth
    budget = _Budget(depth)
    out = _loop(b, body, mu, env, depth, budget, use_substitution)
    scope = _scope(mu, While(b, body))
    return LoopOutcome(out.converged and budget.converged, out.result.with_scope(scope),
                       out.residual + budget.residual, out.depth_used, out.divergent)


def kleene_iterate(b: Pred, body: Program, mu: SubDist, i: int,
                   env: TableEnv = EMPTY_ENV) -> SubDist:
    """``Φ^i(0)(μ)`` for the loop functional ``Φ(f)(μ) = [¬b]μ + f(⟦body⟧([b]μ))``.

    Computed by unrolling: ``Σ_{j<i} [¬b]ν_j`` with ``ν_0 = μ`` and
    ``ν_{j+1} = ⟦body⟧([b]ν_j)``.
    """
    notb = Not(b)
    acc = SubDist({}, mu.scope)
    nu = mu
    for _ in range(i):
        acc = acc + nu.filter(notb, env)
        nu = denote(body, nu.filter(b, env), env).result
    return acc.with_scope(_scope(mu, While(b, body)))


def denote(C: Program, mu: SubDist, env: TableEnv = EMPTY_ENV,
           max_depth: Optional[int] = None, use_substitution: bool = False) -> Denotation:
    """Evaluate any program; loops are unrolled at most ``max_depth`` times each.

    The result is an exact lower bound of the true output.  ``residual`` is the
    total guard mass left over by every loop evaluation (0 when all converged).
    """
    depth = default_depth() if max_depth is None else max_depth
    budget = _Budget(depth)
    out = _run(C, mu, env, budget, use_substitution)
    return Denotation(out.with_scope(_scope(mu, C)), budget.residual, budget.converged)
