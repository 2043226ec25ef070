"""Exact finite-support sub-distributions over program states.

A :class:`SubDist` stores only nonzero weights, so two sub-distributions are
equal exactly when their weight maps are equal.  The optional ``scope`` is an
ordered tuple of variable names used for rendering; it does not take part in
equality.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Tuple

from .errors import MassError
from .lang import EMPTY_ENV, AffineMap, Not, Pred, State, TableEnv, eval_pred

__all__ = ["SubDist", "EventPred", "dirac", "uniform", "dist_eq", "substitute",
           "substitute_pointwise", "mixture"]


@dataclass(frozen=True)
class EventPred:
    """A state predicate together with the tables its expressions may read."""

    pred: Pred
    env: TableEnv = EMPTY_ENV

    def __call__(self, state: State) -> bool:
        return eval_pred(self.pred, state, self.env)

    def negate(self) -> "EventPred":
        return EventPred(Not(self.pred), self.env)


def _event(b, env):
    if isinstance(b, EventPred):
        return b
    if isinstance(b, Pred):
        return EventPred(b, env or EMPTY_ENV)
    return b  # any callable State -> bool


class SubDist:
    __slots__ = ("_w", "scope", "_hash")

    def __init__(self, weights: Optional[Mapping[State, object]] = None,
                 scope: Iterable[str] = (), *, _trusted: bool = False):
        if _trusted:
            w = weights
        else:
            w = {}
            total = Fraction(0)
            for s, p in (weights or {}).items():
                if not isinstance(s, State):
                    s = State(s)
                p = Fraction(p)
                if p == 0:
                    continue
                if p < 0 or p > 1:
                    raise MassError(f"weight {p} of {s} outside (0, 1]")
                w[s] = w.get(s, 0) + p
                total += p
            if total > 1:
                raise MassError(f"total mass {total} exceeds 1")
        self._w: Dict[State, Fraction] = w
        self.scope: Tuple[str, ...] = _extend_scope(tuple(scope), w)
        self._hash = None

    # basic queries
    def __getitem__(self, state) -> Fraction:
        if not isinstance(state, State):
            state = State(state)
        return self._w.get(state, Fraction(0))

    def __len__(self):
        return len(self._w)

    def __iter__(self):
        return iter(self._w)

    def items(self):
        return self._w.items()

    @property
    def mass(self) -> Fraction:
        return sum(self._w.values(), Fraction(0))

    @property
    def support(self) -> frozenset:
        return frozenset(self._w)

    def is_empty(self) -> bool:
        return not self._w

    def with_scope(self, scope: Iterable[str]) -> "SubDist":
        return SubDist(self._w, scope, _trusted=True)

    # algebra
    def __add__(self, other: "SubDist") -> "SubDist":
        if not isinstance(other, SubDist):
            return NotImplemented
        w = dict(self._w)
        for s, p in other._w.items():
            w[s] = w.get(s, 0) + p
        total = sum(w.values(), Fraction(0))
        if total > 1:
            raise MassError(f"sum has mass {total} > 1")
        return SubDist(w, _merge_scope(self.scope, other.scope), _trusted=True)

    def add(self, other: "SubDist") -> "SubDist":
        return self + other

    def scale(self, p) -> "SubDist":
        p = Fraction(p)
        if p < 0 or p > 1:
            raise MassError(f"scale factor {p} outside [0, 1]")
        if p == 0:
            return SubDist({}, self.scope, _trusted=True)
        return SubDist({s: p * q for s, q in self._w.items()}, self.scope, _trusted=True)

    def __rmul__(self, p) -> "SubDist":
        return self.scale(p)

    def filter(self, b, env: Optional[TableEnv] = None) -> "SubDist":
        """The Iverson-filtered sub-distribution ``[b]·μ``."""
        test = _event(b, env)
        return SubDist({s: p for s, p in self._w.items() if test(s)}, self.scope, _trusted=True)

    def prob(self, b, env: Optional[TableEnv] = None) -> Fraction:
        test = _event(b, env)
        return sum((p for s, p in self._w.items() if test(s)), Fraction(0))

    def marginal(self, names: Iterable[str]) -> "SubDist":
        names = tuple(names)
        w: Dict[State, Fraction] = {}
        for s, p in self._w.items():
            t = s.restrict(names)
            w[t] = w.get(t, 0) + p
        return SubDist(w, names, _trusted=True)

    def map_states(self, f) -> "SubDist":
        """Push the distribution forward along a deterministic state map."""
        w: Dict[State, Fraction] = {}
        for s, p in self._w.items():
            t = f(s)
            w[t] = w.get(t, 0) + p
        return SubDist(w, self.scope, _trusted=True)

    def __le__(self, other: "SubDist") -> bool:
        """Pointwise order."""
        return all(p <= other._w.get(s, 0) for s, p in self._w.items())

    def __eq__(self, other):
        return isinstance(other, SubDist) and self._w == other._w

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._w.items()))
        return self._hash

    # rendering
    def sorted_items(self):
        scope = self.scope
        return sorted(self._w.items(), key=lambda sp: (sp[0].values_for(scope), sp[0].items()))

    def render(self) -> str:
        lines = [f"{p.numerator}/{p.denominator} : {s.render(self.scope)}"
                 for s, p in self.sorted_items()]
        return "\n".join(lines)

    def to_json_obj(self):
        return {
            "scope": list(self.scope),
            "mass": _frac_str(self.mass),
            "support": [
                {"p": _frac_str(p), "state": {n: s[n] for n in _state_names(s, self.scope)}}
                for s, p in self.sorted_items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps({"schema": 1, **self.to_json_obj()}, indent=2)

    def __repr__(self):
        inner = " + ".join(f"{p}*{s.render(self.scope)}" for s, p in self.sorted_items())
        return f"SubDist({inner or '0'})"


def _frac_str(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def _state_names(s: State, scope):
    return list(scope) + [k for k in s.bound_names() if k not in scope]


def _extend_scope(scope, w):
    extra = sorted({k for s in w for k in s.bound_names()} - set(scope))
    return scope + tuple(extra)


def _merge_scope(a, b):
    return a + tuple(n for n in b if n not in a)


def dirac(state, scope: Iterable[str] = ()) -> SubDist:
    if not isinstance(state, State):
        state = State(state)
    scope = tuple(scope) or tuple(state.bound_names())
    return SubDist({state: Fraction(1)}, scope, _trusted=True)


def uniform(states, scope: Iterable[str] = ()) -> SubDist:
    states = [s if isinstance(s, State) else State(s) for s in states]
    return SubDist({s: Fraction(1, len(states)) for s in states}, scope)


def mixture(pairs, scope: Iterable[str] = ()) -> SubDist:
    """``Σ p_i · μ_i`` for ``(p_i, μ_i)`` pairs."""
    out = SubDist({}, scope)
    for p, mu in pairs:
        out = out + mu.scale(p)
    return out


def dist_eq(a: SubDist, b: SubDist) -> bool:
    return a == b


def substitute(mu: SubDist, inv: AffineMap, env: TableEnv = EMPTY_ENV) -> SubDist:
    """``μ[x/inv]``: the sub-distribution ``σ ↦ μ(σ[x/inv(σ)])``, zero where ``inv`` is undefined.

    Computed by inverting ``inv`` on the support of ``μ``: a state ``τ`` in the
    support contributes to ``σ = τ[x/inv⁻¹(τ)]`` exactly when that preimage
    exists and maps back to ``τ(x)``.
    """
    x = inv.var
    back = inv.inverse()
    w: Dict[State, Fraction] = {}
    for tau, p in mu.items():
        y = back.apply(tau, env)
        if y is None:
            continue
        sigma = tau.set(x, y)
        if inv.apply(sigma, env) == tau[x]:
            w[sigma] = w.get(sigma, 0) + p
    return SubDist(w, mu.scope, _trusted=True)


def substitute_pointwise(mu: SubDist, inv: AffineMap, states, env: TableEnv = EMPTY_ENV):
    """Definitional substitution evaluated on an explicit list of candidate states."""
    w = {}
    for sigma in states:
        v = inv.apply(sigma, env)
        if v is None:
            continue
        p = mu[sigma.set(inv.var, v)]
        if p:
            w[sigma] = p
    return SubDist(w, mu.scope)
