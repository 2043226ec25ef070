"""The operational Markov chain of a loop and the distributions it reaches.

The chain is kept intensional: a state satisfying the guard moves according
to the body's output distribution, every other state has a self-loop.  Its
successor map on distributions is computed state by state, independently of
:func:`disti.semantics.guarded_step`, so the two can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence

from .dist import SubDist, dirac
from .lang import EMPTY_ENV, Pred, Program, State, TableEnv, eval_pred, program_vars
from .semantics import denote, guarded_step

__all__ = ["OperationalMC", "Trajectory", "ReachSet", "TranslationReport",
           "mc_step", "trajectory", "reach_set", "check_translation", "export_graph"]


class OperationalMC:
    def __init__(self, guard: Pred, body: Program, env: TableEnv = EMPTY_ENV,
                 max_depth: Optional[int] = None):
        self.guard = guard
        self.body = body
        self.env = env
        self.max_depth = max_depth
        self._cache: Dict[State, SubDist] = {}

    def is_active(self, s: State) -> bool:
        return eval_pred(self.guard, s, self.env)

    def transition(self, s: State) -> SubDist:
        out = self._cache.get(s)
        if out is None:
            start = dirac(s, s.bound_names())
            if self.is_active(s):
                out = denote(self.body, start, self.env, self.max_depth).result
            else:
                out = start
            self._cache[s] = out
        return out

    def step(self, mu: SubDist) -> SubDist:
        w: Dict[State, Fraction] = {}
        for s, p in mu.items():
            for t, q in self.transition(s).items():
                w[t] = w.get(t, 0) + p * q
        return SubDist(w, mu.scope + tuple(v for v in program_vars(self.body) if v not in mu.scope),
                       _trusted=True)

    __call__ = step


def mc_step(M: OperationalMC, mu: SubDist) -> SubDist:
    return M.step(mu)


@dataclass(frozen=True)
class Trajectory:
    steps: tuple

    @property
    def mass_loss(self) -> Fraction:
        """Mass lost between the first and last step (nonzero only for diverging bodies)."""
        return self.steps[0].mass - self.steps[-1].mass

    def __getitem__(self, k):
        return self.steps[k]

    def __len__(self):
        return len(self.steps)


def trajectory(M: OperationalMC, mu0: SubDist, n: int) -> Trajectory:
    if n < 0:
        raise ValueError("trajectory length must be nonnegative")
    steps = [mu0]
    for _ in range(n):
        steps.append(M.step(steps[-1]))
    return Trajectory(tuple(steps))


@dataclass(frozen=True)
class ReachSet:
    depth: int
    dists: tuple

    def __iter__(self):
        return iter(self.dists)

    def __len__(self):
        return len(self.dists)

    def __contains__(self, mu):
        return mu in self.dists

    def states(self):
        """All states in the support of some member, in order of first appearance."""
        seen = {}
        for mu in self.dists:
            for s, _ in mu.sorted_items():
                seen.setdefault(s, None)
        return list(seen)


def reach_set(M: OperationalMC, initial: Sequence[SubDist], depth: int) -> ReachSet:
    """Distributions reachable in at most ``depth`` steps, deduplicated, in order of first reach.

    Iteration from an initial distribution stops early once it hits a fixed point.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    seen: Dict[SubDist, None] = {}
    for mu0 in initial:
        mu = mu0
        for k in range(depth + 1):
            seen.setdefault(mu, None)
            if k == depth:
                break
            nxt = M.step(mu)
            if nxt == mu:
                break
            mu = nxt
    return ReachSet(depth, tuple(seen))


@dataclass
class TranslationReport:
    ok: bool
    steps_checked: int
    first_divergence: Optional[int] = None
    denotational: Optional[SubDist] = None
    operational: Optional[SubDist] = None

    def __bool__(self):
        return self.ok


def check_translation(b: Pred, body: Program, mu0: SubDist, n: int,
                      env: TableEnv = EMPTY_ENV) -> TranslationReport:
    """Compare ``n`` guarded-step iterates with ``n`` chain steps, exactly."""
    M = OperationalMC(b, body, env)
    den = op = mu0
    for k in range(1, n + 1):
        den = guarded_step(b, body, den, env)
        op = M.step(op)
        if den != op:
            return TranslationReport(False, k, k, den, op)
    return TranslationReport(True, n)


def export_graph(M: OperationalMC, reach: ReachSet, scope: Optional[Sequence[str]] = None) -> str:
    """Edges of the chain restricted to states in the support of ``reach``.

    One line per edge, ``"{v=1,c=0,n=3}" -> "{v=2,c=1,n=3}" [1/2]``.  Sources
    are listed in order of first appearance, targets in canonical order.
    """
    states = reach.states()
    if scope is None:
        scope = reach.dists[0].scope if reach.dists else ()
    scope = tuple(scope)
    lines = []
    for s in states:
        succ = M.transition(s).with_scope(scope)
        for t, q in succ.sorted_items():
            weight = str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
            lines.append(f'"{s.render(scope)}" -> "{t.render(scope)}" [{weight}]')
    return "\n".join(lines)
