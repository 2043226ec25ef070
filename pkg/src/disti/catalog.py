"""Built-in example programs with their initial distributions and assertions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .assertions import Assertion, parse_assertion
from .dist import SubDist, dirac, mixture
from .lang import Cmp, Const, Pred, Program, State, Table2, TableEnv, Var
from .parse import parse_pred, parse_program
from . import samplers

__all__ = ["Case", "BUILTINS", "build", "vonneumann_source"]


@dataclass
class Case:
    name: str
    program: Program
    env: TableEnv
    initial: List[SubDist]
    invariant: Optional[Assertion] = None
    post: Optional[Assertion] = None
    limit_events: List[Tuple[Pred, Fraction]] = field(default_factory=list)
    params: Dict[str, object] = field(default_factory=dict)


def vonneumann_source(p: Fraction) -> str:
    q = f"{p.numerator}/{p.denominator}"
    return (
        "while (x = y) {\n"
        f"    {{ x := 0 }} [{q}] {{ x := 1 }};\n"
        f"    {{ y := 0 }} [{q}] {{ y := 1 }}\n"
        "}\n"
    )


def _vonneumann(p=Fraction(1, 2), **_):
    p = Fraction(p)
    prog, env = parse_program(vonneumann_source(p))
    inv = parse_assertion("Pr[x = 0 and y = 1] = Pr[x = 1 and y = 0]\n")
    return Case("vonneumann", prog, env, [dirac(State(x=0, y=0), ("x", "y"))], inv, inv,
                params={"p": str(p)})


def _fig4l(**_):
    prog, env = parse_program(
        "if (x = 0) { { x := 1 } [1/2] { y := 1 } } else { skip };\n"
        "if (x = 1) { { x := 0 } [1/3] { y := 1 } } else { skip }\n")
    return Case("fig4l", prog, env, [dirac(State(x=0, y=0), ("x", "y"))])


def _fig4r(**_):
    prog, env = parse_program("while (x < 1) { { y := 0 } [1/2] { x := x + y } }\n")
    return Case("fig4r", prog, env, [dirac(State(x=0, y=1), ("x", "y"))])


def _geo(**_):
    prog, env = parse_program("while (c = 1) { { x := x + 1 } [1/2] { c := c - 1 } }\n")
    return Case("geo", prog, env, [dirac(State(x=0, c=1), ("x", "c"))])


FIG6_SOURCE = """\
while (y = 0) {
    if (x = 0) {
        { x := 1 } [1/2] { { y := 1 } [1/4] { x := 1; y := 1 } }
    } else {
        { x := 0 } [1/8] { { y := 1 } [3/7] { x := 0; y := 1 } }
    }
}
"""


def _fig6(**_):
    prog, env = parse_program(FIG6_SOURCE)
    scope = ("x", "y")
    mu0 = mixture([(Fraction(1, 3), dirac(State(x=0, y=0), scope)),
                   (Fraction(2, 3), dirac(State(x=1, y=0), scope))], scope)
    inv = parse_assertion(
        "Pr[x = 1 and y = 0] = 2 * Pr[x = 0 and y = 0]\n"
        "Pr[x = 1 and y = 1] = Pr[x = 0 and y = 1]\n")
    post = parse_assertion("Pr[x = 1 and y = 1] = Pr[x = 0 and y = 1]\n")
    events = [(parse_pred("x = 0 and y = 1"), Fraction(1, 2)),
              (parse_pred("x = 1 and y = 1"), Fraction(1, 2))]
    return Case("fig6", prog, env, [mu0], inv, post, events)


def _fig9(**_):
    prog, env = parse_program("if (x > 0) { x := x - y } else { y := 2 * y };\nx := x + 1\n")
    return Case("fig9", prog, env, [dirac(State(x=2, y=2), ("x", "y"))])


def _spexample(**_):
    prog, env = parse_program("while (x > 42) { x := x + 1 }\n")
    mu0 = mixture([(Fraction(1, 2), dirac(State(x=0), ("x",))),
                   (Fraction(1, 2), dirac(State(x=43), ("x",)))], ("x",))
    return Case("spexample", prog, env, [mu0])


def _fdr(n=3, **_):
    loop, init = samplers.fdr_program(n)
    events = [(Cmp(Var("c"), "=", Const(j)), Fraction(1, n)) for j in range(n)]
    return Case("fdr", loop, TableEnv(), [init], samplers.ifdr_assertion(n),
                samplers.fdr_post(n), events, {"n": n})


def _fldr(a=(3, 2, 1), **_):
    loop, env, init, tables = samplers.fldr_program(a)
    events = [(Cmp(Table2("H", Var("d"), Var("c")), "=", Const(i)), Fraction(ai, tables.m))
              for i, ai in enumerate(tables.a, start=1)]
    return Case("fldr", loop, env, [init], samplers.ifldr_assertion(a),
                samplers.fldr_post(a), events, {"a": list(tables.a)})


BUILTINS: Dict[str, Callable[..., Case]] = {
    "fdr": _fdr,
    "fldr": _fldr,
    "vonneumann": _vonneumann,
    "fig4l": _fig4l,
    "fig4r": _fig4r,
    "geo": _geo,
    "fig6": _fig6,
    "fig9": _fig9,
    "spexample": _spexample,
}


def build(name: str, n: int = 3, a: Sequence[int] = (3, 2, 1),
          p: Fraction = Fraction(1, 2)) -> Case:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}") from None
    return factory(n=n, a=tuple(a), p=Fraction(p))
