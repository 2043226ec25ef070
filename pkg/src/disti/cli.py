"""Command-line interface: ``disti run | reach | check | sample``.

Exit codes: 0 ok, 1 check failed, 2 parse error or bad input, 3 evaluation
fault, 4 program is not a top-level loop, 5 total mode without ``--assume-ast``,
6 replay bits exhausted.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import List, Optional

from . import catalog, samplers
from .assertions import holds, parse_assertion
from .checks import (
    check_hoare_partial, check_hoare_total, check_inductive, check_initial, random_mixtures,
)
from .dist import SubDist, dirac, mixture
from .errors import AstNotAssumed, BitsExhausted, EvalFault, NotALoopError, ParseError
from .lang import State, While
from .markov import OperationalMC, export_graph, reach_set
from .parse import parse_program
from .semantics import default_depth, denote

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_EVAL, EXIT_NOT_LOOP, EXIT_NO_AST, EXIT_BITS = range(7)


def _int_range(text: str) -> List[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def parse_init(text: str) -> SubDist:
    """``x=0,y=1`` for a Dirac distribution, or ``1/3:x=0;2/3:x=1`` for a mixture."""
    parts = [p.strip() for p in text.split(";") if p.strip()]
    if not parts:
        return dirac(State())
    pairs = []
    for part in parts:
        weight = Fraction(1)
        if ":" in part:
            w, part = part.split(":", 1)
            weight = Fraction(w.strip())
        bindings = {}
        names = []
        for item in part.split(","):
            if not item.strip():
                continue
            name, value = item.split("=", 1)
            bindings[name.strip()] = int(value)
            names.append(name.strip())
        pairs.append((weight, dirac(State(bindings), names)))
    if len(pairs) == 1 and pairs[0][0] == 1:
        return pairs[0][1]
    return mixture(pairs, pairs[0][1].scope)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=sorted(catalog.BUILTINS))
    src.add_argument("--program", help="path to a program file")
    common.add_argument("--init", help='initial distribution, e.g. "x=0,y=1"')
    common.add_argument("--n", default="3", help="FDR parameter: an integer or a range a..b")
    common.add_argument("--a", default="3,2,1", help="FLDR weights, comma separated")
    common.add_argument("--p", default="1/2", help="coin bias for vonneumann")
    common.add_argument("--depth", type=int, default=None,
                        help="loop unrolling bound (default $DISTI_DEPTH_DEFAULT or 64)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for --n ranges")

    parser = argparse.ArgumentParser(prog="disti", description="Exact semantics and bounded "
                                     "verification of discrete probabilistic programs.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="evaluate a program exactly")
    reach = sub.add_parser("reach", parents=[common], help="list reachable distributions")
    reach.add_argument("--graph", action="store_true", help="emit the Markov chain edges instead")
    check = sub.add_parser("check", parents=[common], help="check an invariant or Hoare triple")
    check.add_argument("--invariant", default="builtin",
                       help="assertion file, or builtin / builtin:ifdr / builtin:ifldr")
    check.add_argument("--post", default="builtin", help="postcondition file or builtin")
    check.add_argument("--mode", choices=("initial", "inductive", "partial", "total"),
                       default="inductive")
    check.add_argument("--assume-ast", action="store_true",
                       help="assume almost-sure termination (required by --mode total)")
    check.add_argument("--fuzz", type=int, default=50, help="random invariant members to add")
    check.add_argument("--seed", type=int, default=0)
    sample = sub.add_parser("sample", parents=[common], help="run the fdr or fldr sampler")
    bits = sample.add_mutually_exclusive_group()
    bits.add_argument("--replay", help="bit string of 0/1 characters to replay")
    bits.add_argument("--seed", type=int, default=None, help="seed for the pseudorandom bits")
    sample.add_argument("--count", type=int, default=1)
    return parser


def _load_case(args, n: int) -> catalog.Case:
    if args.builtin:
        case = catalog.build(args.builtin, n=n, a=_int_list(args.a), p=Fraction(args.p))
    else:
        with open(args.program, encoding="utf-8") as fh:
            program, env = parse_program(fh.read())
        case = catalog.Case(args.program, program, env, [dirac(State())])
    if args.init:
        case.initial = [parse_init(args.init)]
    return case


def _ns(args) -> List[int]:
    if args.builtin == "fdr":
        return _int_range(args.n)
    return [_int_range(args.n)[0]]


def _depth(args) -> int:
    return default_depth() if args.depth is None else args.depth


def _params(case):
    return dict(case.params)


def _run_one(args, n):
    case = _load_case(args, n)
    mu = case.initial[0]
    out = denote(case.program, mu, case.env, _depth(args))
    # mass stuck on guard states at an exact fixed point
    divergent = mu.mass - out.result.mass - out.residual
    if args.format == "json":
        return {"schema": 1, "params": _params(case), **out.result.to_json_obj(),
                "residual": _frac(out.residual), "divergent": _frac(divergent),
                "converged": out.converged}
    lines = [out.result.render()] if out.result.support else []
    lines.append(f"residual: {_frac(out.residual)}")
    if divergent:
        lines.append(f"divergent: {_frac(divergent)}")
    return "\n".join(lines)


def _frac(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def _loop_of(case) -> While:
    if type(case.program) is not While:
        raise NotALoopError("program is not a single top-level while loop")
    return case.program


def _reach_one(args, n):
    case = _load_case(args, n)
    loop = _loop_of(case)
    M = OperationalMC(loop.cond, loop.body, case.env)
    R = reach_set(M, case.initial, _depth(args))
    if args.graph:
        text = export_graph(M, R)
        if args.format == "json":
            return {"schema": 1, "params": _params(case), "edges": text.splitlines()}
        return text
    if args.format == "json":
        return {"schema": 1, "params": _params(case), "depth": R.depth,
                "reach": [mu.to_json_obj() for mu in R]}
    blocks = [f"# {i}\n{mu.render()}" for i, mu in enumerate(R)]
    return "\n".join(blocks)


def _invariant(args, case):
    source = args.invariant
    if source.startswith("builtin"):
        if case.invariant is None:
            raise ValueError(f"builtin {case.name!r} has no invariant")
        return case.invariant
    with open(source, encoding="utf-8") as fh:
        text = fh.read()
    base = case.invariant
    return parse_assertion(text, base.env if base else case.env,
                           base.functions if base else None)


def _post(args, case):
    if args.post == "builtin":
        if case.post is None:
            raise ValueError(f"builtin {case.name!r} has no postcondition")
        return case.post
    with open(args.post, encoding="utf-8") as fh:
        text = fh.read()
    base = case.post or case.invariant
    return parse_assertion(text, base.env if base else case.env,
                           base.functions if base else None)


def _check_one(args, n):
    case = _load_case(args, n)
    A = _invariant(args, case)
    depth = _depth(args)
    if args.mode == "initial":
        report = check_initial(A, case.initial)
    else:
        loop = _loop_of(case)
        if args.mode == "inductive":
            M = OperationalMC(loop.cond, loop.body, case.env)
            R = list(reach_set(M, case.initial, depth))
            rng = random.Random(args.seed)
            if case.name == "fdr":
                extra = samplers.fdr_members(n, args.fuzz, rng)
                label = "fuzzed_columns"
            else:
                extra = [mu for mu in random_mixtures(R, args.fuzz, rng) if holds(A, mu)]
                label = "fuzzed_mixtures"
            report = check_inductive(A, loop.cond, loop.body, R + extra, case.env,
                                     population={"reach": len(R), label: len(extra)})
        elif args.mode == "partial":
            report = check_hoare_partial(A, loop.cond, loop.body, _post(args, case),
                                         case.initial, depth, case.env)
        else:
            report = check_hoare_total(A, loop.cond, loop.body, _post(args, case),
                                       case.initial, depth, args.assume_ast, case.env,
                                       limit_events=case.limit_events)
    report.params.update(_params(case))
    report.depth = depth
    if args.format == "json":
        return report.to_json_obj(), report.passed
    return report.render(), report.passed


def _sample(args):
    if args.builtin not in ("fdr", "fldr"):
        raise ValueError("sample needs --builtin fdr or --builtin fldr")
    if args.replay is not None:
        source = samplers.ReplayBits(args.replay)
    else:
        source = samplers.SeededBits(0 if args.seed is None else args.seed)
    n = _int_range(args.n)[0]
    records = []
    for _ in range(args.count):
        if args.builtin == "fdr":
            records.append(samplers.fdr_sample(n, source))
        else:
            records.append(samplers.fldr_sample(_int_list(args.a), source))
    return records


def _fan_out(fn, args, ns):
    if args.jobs > 1 and len(ns) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            return list(pool.map(fn, [args] * len(ns), ns))
    return [fn(args, n) for n in ns]


def _emit(items, fmt):
    if fmt == "json":
        payload = items[0] if len(items) == 1 else items
        print(json.dumps(payload, indent=2))
    else:
        print("\n\n".join(items))


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sample":
            records = _sample(args)
            if args.format == "json":
                print(json.dumps({"schema": 1, "samples": [list(r) for r in records]}))
            else:
                for label, used in records:
                    print(f"{label}, {used}")
            return EXIT_OK
        ns = _ns(args)
        if args.command == "run":
            _emit(_fan_out(_run_one, args, ns), args.format)
            return EXIT_OK
        if args.command == "reach":
            _emit(_fan_out(_reach_one, args, ns), args.format)
            return EXIT_OK
        if args.mode == "total" and not args.assume_ast:
            raise AstNotAssumed("--mode total requires --assume-ast")
        results = _fan_out(_check_one, args, ns)
        _emit([r for r, _ in results], args.format)
        return EXIT_OK if all(ok for _, ok in results) else EXIT_FAIL
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except EvalFault as exc:
        print(f"evaluation fault: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except NotALoopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_LOOP
    except AstNotAssumed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_AST
    except BitsExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BITS
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
