from fractions import Fraction

import pytest
from hypothesis import given

from disti.assertions import conj, explain, holds, parse_assertion
from disti.dist import SubDist, dirac, uniform
from disti.errors import AssertionSyntaxError
from disti.lang import State, TableEnv
from disti.samplers import ifdr_assertion

from strategies import subdists

F = Fraction


def fdr_state(v, c, n=3):
    return State(v=v, c=c, n=n)


class TestParsing:
    def test_clauses_are_numbered(self):
        A = parse_assertion("mass <= 1\nsupport in (x >= 0)\n")
        assert [(c.id, c.text) for c in A.clauses] == [(1, "mass <= 1"),
                                                       (2, "support in (x >= 0)")]

    def test_comments_and_blank_lines(self):
        A = parse_assertion("# header\n\nPr[x = 0] = 1  # trailing\n")
        assert [c.text for c in A.clauses] == ["Pr[x = 0] = 1"]

    def test_open_quantifier_scopes_remaining_lines(self):
        A = parse_assertion("exists N in 0..2 :\nPr[x = N] = 1\nmass = 1\n")
        assert len(A.clauses) == 1
        assert [c.text for c in A.clauses[0].body.body] == ["Pr[x = N] = 1", "mass = 1"]

    def test_decimal_constants(self):
        assert holds(parse_assertion("Pr[x = 0] = 0.5\n"), uniform([State(x=0), State(x=1)]))

    @pytest.mark.parametrize("text, fragment", [
        ("Pr[x = 0] = K\n", "unbound parameter 'K'"),
        ("forall I in 1..K : Pr[x = I] <= 1\n", "unbound name 'K'"),
        ("Pr[x = 0] = \n", "expected probability expression"),
        ("foo(1) = 1\n", "unknown function 'foo'"),
        ("Pr[x = 0] ~ 1\n", "unexpected character"),
    ])
    def test_malformed(self, text, fragment):
        with pytest.raises(AssertionSyntaxError, match=fragment.replace("(", r"\(")):
            parse_assertion(text)

    def test_event_names_are_program_variables(self):
        # inside Pr[...] an unknown name is a program variable, not a parameter
        A = parse_assertion("Pr[x = N] = 1\n")
        assert holds(A, dirac(State(x=4, N=4)))


class TestEvaluation:
    def test_equal_off_diagonal_mass(self):
        col = SubDist({State(x=0, y=0): F(4, 25), State(x=0, y=1): F(6, 25),
                       State(x=1, y=0): F(6, 25), State(x=1, y=1): F(9, 25)})
        assert holds(parse_assertion("Pr[x = 0 and y = 1] = Pr[x = 1 and y = 0]\n"), col)

    def test_scaled_comparison(self):
        A = parse_assertion("Pr[x = 1] = 2 * Pr[x = 0]\n")
        assert holds(A, SubDist({State(x=0): F(1, 3), State(x=1): F(2, 3)}))
        assert not holds(A, uniform([State(x=0), State(x=1)]))

    def test_uniform_without_grouping(self):
        A = parse_assertion("uniform over (0 <= c and c < 3) group by ()\n")
        assert holds(A, uniform([State(c=i) for i in range(3)]))
        assert not holds(A, uniform([State(c=i) for i in range(2)]))

    def test_group_by_defaults_to_one_group(self):
        A = parse_assertion("uniform over (0 <= c and c < 2)\n")
        assert holds(A, uniform([State(c=0), State(c=1)]))
        assert not holds(A, dirac(State(c=1)))

    def test_uniform_grouped(self):
        A = parse_assertion("uniform over (0 <= c and c < v) group by (v)\n")
        good = SubDist({State(v=2, c=0): F(1, 4), State(v=2, c=1): F(1, 4), State(v=1): F(1, 2)})
        bad = SubDist({State(v=2, c=0): F(1, 4), State(v=2, c=1): F(1, 8), State(v=1): F(1, 2)})
        assert holds(A, good)
        failure = explain(A, bad)
        assert failure.clause.id == 1
        assert set(failure.cells) == {State(v=2), State(v=2, c=1)}

    def test_weighted_sum(self):
        A = parse_assertion("sum{x >= 0} weight x <= 3/2\n")
        assert holds(A, uniform([State(x=1), State(x=2)]))
        assert not holds(A, uniform([State(x=1), State(x=3)]))

    def test_support_clause(self):
        A = parse_assertion("support in (x >= 0)\n")
        assert holds(A, uniform([State(x=0), State(x=5)]))
        assert not holds(A, uniform([State(x=0), State(x=-1)]))

    def test_exists_and_forall(self):
        A = parse_assertion("exists N in 0..2 :\nPr[x = N] = 1\n")
        assert holds(A, dirac(State(x=2)))
        assert not holds(A, dirac(State(x=3)))
        B = parse_assertion("forall I in 0..2 : Pr[x = I] <= 1/3\n")
        assert holds(B, uniform([State(x=i) for i in range(3)]))
        assert not holds(B, uniform([State(x=0), State(x=1)]))

    def test_table_reads_in_events(self):
        env = TableEnv({"h": (0, 0, 3, 2)})
        A = parse_assertion("Pr[h[c] = 3] = 1\n", env)
        assert holds(A, dirac(State(c=2)))

    def test_functions(self):
        A = parse_assertion("Pr[x = 0] = half(1)\n", functions={"half": lambda k: F(k, 2)})
        assert holds(A, uniform([State(x=0), State(x=1)]))

    def test_conjunction(self):
        both = conj(parse_assertion("mass = 1\n"), parse_assertion("Pr[x = 0] = 1\n"))
        assert holds(both, dirac(State()))
        assert not holds(both, dirac(State(x=1)))

    def test_empty_distribution(self):
        assert holds(parse_assertion("mass <= 1\n"), SubDist({}))
        assert not holds(parse_assertion("mass = 1\n"), SubDist({}))

    def test_explicit_parameters(self):
        A = parse_assertion("Pr[x = K] = 1\n".replace("K", "0"))
        assert holds(A, dirac(State()), {"K": 5})

    @given(subdists())
    def test_holds_is_pure(self, mu):
        A = parse_assertion("Pr[x < y] <= 2 * Pr[z = 0]\nuniform over (x = 0) group by (y)\n")
        assert holds(A, mu) == holds(A, mu)
        assert (explain(A, mu) is None) == holds(A, mu)


class TestFdrInvariant:
    def test_initial_distribution(self):
        assert holds(ifdr_assertion(3), dirac(fdr_state(1, 0)))

    def test_missing_column_cell(self):
        mu = SubDist({fdr_state(4, 0): F(1, 2), fdr_state(4, 1): F(1, 2)})
        failure = explain(ifdr_assertion(3), mu)
        assert failure is not None and failure.clause.text.startswith("uniform over")
        assert fdr_state(4, 2) in failure.cells

    def test_full_column(self):
        mu = uniform([fdr_state(4, c) for c in range(3)])
        assert holds(ifdr_assertion(3), mu)

    def test_counter_outside_range(self):
        failure = explain(ifdr_assertion(3), dirac(fdr_state(1, 5)))
        assert failure.clause.text == "Pr[0 <= c and c < min(v,n)] = 1"

    def test_v_zero_violates_range(self):
        failure = explain(ifdr_assertion(3), dirac(fdr_state(0, 0)))
        assert failure.clause.text == "Pr[0 < v and v < 2*n] = 1"

    def test_tight_bound_excludes_n_equal_one(self):
        assert not holds(ifdr_assertion(1, v_upper="2*n - 1"), dirac(fdr_state(1, 0, 1)))
        assert holds(ifdr_assertion(1), dirac(fdr_state(1, 0, 1)))
