from fractions import Fraction

import pytest

from disti.errors import ParseError
from disti.lang import (
    Add, And, Assign, Cmp, Const, Ite, Mul, Neg, Not, Or, PChoice, Seq, Skip, Sub, Table1,
    Table2, Var, While, pretty,
)
from disti.parse import parse_expr, parse_pred, parse_program, tokenize
from disti.samplers import FDR_SOURCE


def test_fdr_source_structure():
    prog, env = parse_program(FDR_SOURCE)
    assert env.tables1 == {} and env.tables2 == {}
    assert prog == While(
        Cmp(Var("v"), "<", Var("n")),
        Seq(Assign("v", Mul(Const(2), Var("v"))),
            Seq(PChoice(Assign("c", Mul(Const(2), Var("c"))), Fraction(1, 2),
                        Assign("c", Add(Mul(Const(2), Var("c")), Const(1)))),
                Ite(Cmp(Var("c"), ">=", Var("n")),
                    Seq(Assign("v", Sub(Var("v"), Var("n"))),
                        Assign("c", Sub(Var("c"), Var("n")))),
                    Skip()))))


def test_pretty_then_parse_is_identity_on_fdr():
    prog, _ = parse_program(FDR_SOURCE)
    assert parse_program(pretty(prog))[0] == prog


def test_precedence_and_associativity():
    assert parse_expr("1 - 2 - 3") == Sub(Sub(Const(1), Const(2)), Const(3))
    assert parse_expr("1 + 2 * x") == Add(Const(1), Mul(Const(2), Var("x")))
    assert parse_expr("-3") == Const(-3)
    assert parse_expr("-x") == Neg(Var("x"))
    assert parse_pred("a = 1 or b = 2 and not c = 3") == Or(
        Cmp(Var("a"), "=", Const(1)),
        And(Cmp(Var("b"), "=", Const(2)), Not(Cmp(Var("c"), "=", Const(3)))))


def test_double_equals_is_equality():
    assert parse_pred("x == 1") == parse_pred("x = 1")


def test_parenthesised_predicate():
    assert parse_pred("(x = 0 or y = 0) and z < 1") == And(
        Or(Cmp(Var("x"), "=", Const(0)), Cmp(Var("y"), "=", Const(0))),
        Cmp(Var("z"), "<", Const(1)))


def test_bare_choice_between_simple_statements():
    prog, _ = parse_program("x := 1 [2/3] x := 2")
    assert prog == PChoice(Assign("x", Const(1)), Fraction(2, 3), Assign("x", Const(2)))


@pytest.mark.parametrize("text, p", [("1", 1), ("0", 0), ("1/3", Fraction(1, 3)),
                                     ("0.25", Fraction(1, 4))])
def test_probability_forms(text, p):
    prog, _ = parse_program(f"{{ skip }} [{text}] {{ x := 1 }}")
    assert prog.prob == p


def test_else_branch_optional():
    prog, _ = parse_program("if (x = 0) { x := 1 }")
    assert prog == Ite(Cmp(Var("x"), "=", Const(0)), Assign("x", Const(1)), Skip())


def test_tables_declared_and_read():
    prog, env = parse_program("table1 h = [0, 0, 3, 2]\n"
                              "table2 H = [[1, 2], [3, 4]]\n"
                              "x := h[c] + H[d, c]")
    assert env.tables1 == {"h": (0, 0, 3, 2)}
    assert env.tables2 == {"H": ((1, 2), (3, 4))}
    assert prog == Assign("x", Add(Table1("h", Var("c")), Table2("H", Var("d"), Var("c"))))


def test_comments_and_trailing_semicolon():
    prog, _ = parse_program("# leading\nx := 1; # after\ny := 2;\n")
    assert prog == Seq(Assign("x", Const(1)), Assign("y", Const(2)))


def test_tokens_carry_positions():
    toks = tokenize("x :=\n  y")
    assert [(t.text, t.line, t.column) for t in toks[:3]] == [("x", 1, 1), (":=", 1, 3),
                                                             ("y", 2, 3)]


@pytest.mark.parametrize("source, line, column, fragment", [
    ("x := ", 1, 6, "expected expression"),
    ("x := 1 [3/2] x := 2", 1, 9, "outside [0, 1]"),
    ("x := 1 [1/0] x := 2", 1, 9, "zero denominator"),
    ("while (x < 1 { skip }", 1, 14, "expected ')'"),
    ("x := 1;\ny := 2 )", 2, 8, "trailing"),
    ("x := 1\ny := 2", 2, 1, "trailing"),
    ("x = 3", 1, 3, "':='"),
    ("x := y $ 2", 1, 8, "unexpected character"),
    ("x := g[y]", 1, 6, "undeclared table"),
    ("table1 h = [1]\nx := h[1, 2]", 2, 9, "']'"),
    ("while := 1", 1, 7, "'('"),
])
def test_errors_carry_line_and_column(source, line, column, fragment):
    with pytest.raises(ParseError) as info:
        parse_program(source)
    assert (info.value.line, info.value.column) == (line, column)
    assert fragment in str(info.value)


def test_ragged_table2_is_rejected():
    with pytest.raises(ParseError, match="not rectangular"):
        parse_program("table2 H = [[1, 2], [3]]\nskip")
