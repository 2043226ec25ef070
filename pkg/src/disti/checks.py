"""Bounded checkers for distributional invariants and Hoare-style conclusions.

The quantifier "for every distribution in the invariant" is replaced by a
finite population: reach-set members, user-supplied members and randomly
generated members.  Every report records which population was examined, and a
failing report carries a witness that fails the assertion when re-checked.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .assertions import Assertion, explain, holds
from .dist import SubDist
from .errors import AstNotAssumed
from .lang import EMPTY_ENV, Cmp, Const, Not, Pred, Program, TableEnv, Var, unmodified_vars
from .semantics import denote, guarded_step

__all__ = [
    "CheckReport", "check_initial", "check_inductive", "check_hoare_partial",
    "check_hoare_total", "check_unmod", "random_mixtures",
]


def _frac(p: Optional[Fraction]):
    return None if p is None else f"{p.numerator}/{p.denominator}"


@dataclass
class CheckReport:
    check: str
    verdict: str = "pass"
    clause_id: Optional[int] = None
    clause: Optional[str] = None
    reason: Optional[str] = None
    witness: Optional[SubDist] = None
    pre: Optional[SubDist] = None
    population: Dict[str, int] = field(default_factory=dict)
    params: Dict[str, object] = field(default_factory=dict)
    depth: Optional[int] = None
    residuals: List[Fraction] = field(default_factory=list)
    extras: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def __bool__(self):
        return self.passed

    def fail(self, reason: str, witness=None, pre=None, failure=None) -> "CheckReport":
        self.verdict = "fail"
        self.reason = reason
        self.witness = witness
        self.pre = pre
        if failure is not None:
            self.clause_id = failure.clause.id
            self.clause = failure.clause.text
            self.reason = f"{reason}: {failure.reason}"
            if failure.params:
                self.params.setdefault("bound", dict(failure.params))
        return self

    def to_json_obj(self):
        out = {
            "schema": 1,
            "check": self.check,
            "verdict": self.verdict,
            "population": dict(self.population),
            "params": self.params,
        }
        if self.depth is not None:
            out["depth"] = self.depth
        if self.residuals:
            out["residual"] = _frac(self.residuals[-1])
            out["residuals"] = [_frac(r) for r in self.residuals]
        for k, v in self.extras.items():
            out[k] = _frac(v) if isinstance(v, Fraction) else v
        if self.verdict == "fail":
            out["clause_id"] = self.clause_id
            out["clause"] = self.clause
            out["reason"] = self.reason
            if self.witness is not None:
                out["witness"] = self.witness.render().splitlines()
            if self.pre is not None:
                out["pre"] = self.pre.render().splitlines()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)

    def render(self) -> str:
        lines = [f"{self.check}: {self.verdict}"]
        if self.params:
            lines.append("params: " + ", ".join(f"{k}={v}" for k, v in self.params.items()))
        if self.population:
            pop = ", ".join(f"{k}={v}" for k, v in self.population.items())
            lines.append(f"population: {pop}")
        if self.residuals:
            lines.append(f"residual: {_frac(self.residuals[-1])}")
        for k, v in self.extras.items():
            lines.append(f"{k}: {_frac(v) if isinstance(v, Fraction) else v}")
        if self.verdict == "fail":
            if self.clause is not None:
                lines.append(f"clause {self.clause_id}: {self.clause}")
            lines.append(f"reason: {self.reason}")
            if self.pre is not None:
                lines.append("pre:")
                lines.extend("  " + ln for ln in self.pre.render().splitlines())
            if self.witness is not None:
                lines.append("witness:")
                lines.extend("  " + ln for ln in self.witness.render().splitlines())
        return "\n".join(lines)


def check_initial(A: Assertion, initial: Sequence[SubDist],
                  params: Optional[Mapping[str, int]] = None) -> CheckReport:
    report = CheckReport("initial", population={"initial": len(initial)})
    for mu in initial:
        failure = explain(A, mu, params)
        if failure is not None:
            return report.fail("initial distribution violates the assertion", mu, failure=failure)
    return report


def check_inductive(A: Assertion, b: Pred, body: Program, candidates: Sequence[SubDist],
                    env: TableEnv = EMPTY_ENV, params: Optional[Mapping[str, int]] = None,
                    population: Optional[Mapping[str, int]] = None) -> CheckReport:
    """Check that one guarded iteration maps every candidate satisfying ``A`` into ``A``.

    Candidates that do not satisfy ``A`` themselves are ill-posed inputs; they
    are counted and skipped.
    """
    report = CheckReport("inductive",
                         population=dict(population or {"candidates": len(candidates)}))
    ill_posed = 0
    for mu in candidates:
        if not holds(A, mu, params):
            ill_posed += 1
            continue
        nxt = guarded_step(b, body, mu, env)
        failure = explain(A, nxt, params)
        if failure is not None:
            report.extras["ill_posed"] = ill_posed
            return report.fail("guarded step leaves the assertion", nxt, mu, failure)
    report.extras["ill_posed"] = ill_posed
    return report


def _chain(b, body, mu0, env, depth):
    """Iterates ``μ_k`` of the guarded step, stopping early at a fixed point."""
    out = [mu0]
    for _ in range(depth):
        nxt = guarded_step(b, body, out[-1], env)
        if nxt == out[-1]:
            break
        out.append(nxt)
    return out


def _hoare(kind, A, b, body, post, initial, depth, env, params):
    report = CheckReport(kind, population={"initial": len(initial)}, depth=depth)
    notb = Not(b)
    chain_elems = 0
    final = []
    for mu0 in initial:
        iterates = _chain(b, body, mu0, env, depth)
        prev = None
        residuals = []
        for mu in iterates:
            elem = mu.filter(notb, env)
            chain_elems += 1
            residuals.append(mu.prob(b, env))
            if prev is not None and not prev <= elem:
                report.population["chain_elements"] = chain_elems
                return report.fail("chain is not monotone", elem, prev), None
            failure = explain(post, elem, params)
            if failure is not None:
                report.population["chain_elements"] = chain_elems
                return report.fail("chain element violates the postcondition",
                                   elem, mu0, failure), None
            prev = elem
        final.append((mu0, iterates, residuals))
    report.population["chain_elements"] = chain_elems
    return report, final


def check_hoare_partial(A: Assertion, b: Pred, body: Program, post: Assertion,
                        initial: Sequence[SubDist], depth: int, env: TableEnv = EMPTY_ENV,
                        params: Optional[Mapping[str, int]] = None) -> CheckReport:
    """Every element ``[¬b]μ_k`` (k ≤ depth) of the output chain satisfies ``post``.

    ``A`` is assumed to have passed :func:`check_initial` and
    :func:`check_inductive`; the chain elements approximate the loop output
    from below.
    """
    report, final = _hoare("partial", A, b, body, post, initial, depth, env, params)
    if final is not None:
        report.residuals = [max(r[-1] for _, _, r in final)] if final else []
    return report


def check_hoare_total(A: Assertion, b: Pred, body: Program, post: Assertion,
                      initial: Sequence[SubDist], depth: int, ast_assumed: bool,
                      env: TableEnv = EMPTY_ENV, params: Optional[Mapping[str, int]] = None,
                      limit_events: Sequence[Tuple[Pred, Fraction]] = ()) -> CheckReport:
    """Partial check plus the mass side condition, assuming almost-sure termination.

    ``τ`` is the least mass among the examined invariant members (the iterates
    ``μ_k``).  The result must satisfy ``mass + residual ≥ τ`` and residuals
    must not increase.  For each ``(event, target)`` in ``limit_events`` the
    limit probability ``target`` must lie in ``[Pr, Pr + residual]``.
    """
    if not ast_assumed:
        raise AstNotAssumed("total correctness needs an almost-sure termination assumption")
    report, final = _hoare("total", A, b, body, post, initial, depth, env, params)
    if final is None:
        return report
    notb = Not(b)
    tau = None
    worst = Fraction(0)
    for mu0, iterates, residuals in final:
        masses = [mu.mass for mu in iterates]
        low = min(masses)
        tau = low if tau is None else min(tau, low)
        for r0, r1 in zip(residuals, residuals[1:]):
            if r1 > r0:
                return report.fail(f"residual increased from {r0} to {r1}", iterates[-1], mu0)
        result = iterates[-1].filter(notb, env)
        residual = residuals[-1]
        worst = max(worst, residual)
        if result.mass + residual < low:
            return report.fail(f"result mass {result.mass} plus residual {residual} is below "
                               f"tau {low}", result, mu0)
        for event, target in limit_events:
            pr = result.prob(event, env)
            if not pr <= target <= pr + residual:
                return report.fail(f"limit {target} outside [{pr}, {pr + residual}]",
                                   result, mu0)
        report.residuals = residuals
    report.extras["tau_over_examined"] = tau if tau is not None else Fraction(1)
    report.extras["max_residual"] = worst
    return report


def check_unmod(C: Program, mu0: SubDist, env: TableEnv = EMPTY_ENV,
                depth: Optional[int] = None, values: Optional[Sequence[int]] = None) -> CheckReport:
    """``Pr_out[x = z] ≤ Pr_in[x = z]`` for unmodified ``x`` and sampled ``z``."""
    out = denote(C, mu0, env, depth)
    report = CheckReport("unmodified", depth=depth)
    names = sorted(unmodified_vars(C))
    equal = True
    checked = 0
    for x in names:
        zs = values
        if zs is None:
            zs = sorted({s[x] for s in mu0.support} | {s[x] for s in out.result.support})
        for z in zs:
            event = Cmp(Var(x), "=", Const(z))
            p_out = out.result.prob(event, env)
            p_in = mu0.prob(event, env)
            checked += 1
            if p_out > p_in:
                report.params = {"var": x, "value": z}
                return report.fail(f"Pr[{x} = {z}] grows from {p_in} to {p_out}",
                                   out.result, mu0)
            equal = equal and p_out == p_in
    report.population = {"variables": len(names), "events": checked}
    report.extras["equality"] = equal
    report.residuals = [out.residual]
    return report


def random_mixtures(members: Sequence[SubDist], count: int, rng: random.Random,
                    max_parts: int = 3, denominator: int = 12) -> List[SubDist]:
    """Random convex combinations of ``members`` with small rational weights."""
    out = []
    if not members:
        return out
    for _ in range(count):
        k = rng.randint(1, min(max_parts, len(members)))
        parts = rng.sample(list(members), k)
        cuts = sorted(rng.randint(0, denominator) for _ in range(k - 1))
        weights = [b - a for a, b in zip([0] + cuts, cuts + [denominator])]
        mix = SubDist({}, parts[0].scope)
        for w, mu in zip(weights, parts):
            if w:
                mix = mix + mu.scale(Fraction(w, denominator))
        out.append(mix)
    return out
