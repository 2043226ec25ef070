import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from disti.dist import EventPred, SubDist, dirac, mixture, substitute, substitute_pointwise, uniform
from disti.errors import MassError
from disti.lang import AffineMap, Const, Not, State, eval_expr, injective_inverse
from disti.parse import parse_expr, parse_pred

from strategies import affine_assignments, preds, probs, subdists

F = Fraction
HALF = F(1, 2)


def d(**kw):
    return dirac(State(kw), tuple(kw))


class TestConstruction:
    def test_dirac(self):
        mu = d(x=0, y=0)
        assert mu[State(x=0, y=0)] == 1
        assert mu.mass == 1

    def test_fdr_initial_shape(self):
        mu = dirac(State(v=1, c=0, n=3), ("v", "c", "n"))
        assert mu.support == {State(v=1, n=3)}

    def test_zero_weights_are_dropped(self):
        mu = SubDist({State(x=1): 0, State(x=2): HALF})
        assert len(mu) == 1

    def test_weights_are_normalised(self):
        assert SubDist({State(x=0): F(2, 4)}) == SubDist({State(x=0): HALF})

    @pytest.mark.parametrize("weights", [{State(x=0): F(3, 2)},
                                         {State(x=0): F(2, 3), State(x=1): F(2, 3)},
                                         {State(x=0): F(-1, 2)}])
    def test_invalid_mass_rejected(self, weights):
        with pytest.raises(MassError):
            SubDist(weights)


class TestAlgebra:
    def test_two_point_uniform(self):
        mu = d(x=1).scale(HALF) + d(x=0).scale(HALF)
        assert mu == uniform([State(x=0), State(x=1)])

    def test_figure4_left_triple(self):
        mu = (d(x=0, y=0).scale(F(1, 6)) + d(x=1, y=1).scale(F(1, 3))
              + d(x=0, y=1).scale(HALF))
        assert mu.mass == 1
        assert mu[State(x=0, y=1)] == HALF

    def test_add_zero_is_identity(self):
        mu = d(x=3)
        assert mu + SubDist({}) == mu

    def test_overfull_sum_faults(self):
        with pytest.raises(MassError):
            d(x=0) + d(x=1)

    def test_scale(self):
        assert d(x=0).scale(0).is_empty()
        assert d(x=0).scale(HALF)[State()] == HALF

    def test_first_biased_coin(self):
        coin = d(x=0).scale(F(2, 5)) + d(x=1).scale(F(3, 5))
        assert coin[State(x=0)] == F(2, 5) and coin[State(x=1)] == F(3, 5)

    @given(subdists(), subdists(), probs)
    def test_mass_laws(self, m1, m2, p):
        total = m1.mass + m2.mass
        if total <= 1:
            assert (m1 + m2).mass == total
        assert m1.scale(p).mass == p * m1.mass
        assert m1.marginal(["x"]).mass == m1.mass

    @given(subdists(), subdists(), probs)
    def test_no_stored_zeros(self, m1, m2, p):
        results = [m1.scale(p), m1.marginal(["y"]), m1.filter(parse_pred("x < y"))]
        if m1.mass + m2.mass <= 1:
            results.append(m1 + m2)
        for mu in results:
            assert all(w > 0 for _, w in mu.items())


class TestFilterAndProb:
    def test_filter_true(self):
        mu = uniform([State(x=0), State(x=1)])
        assert mu.filter(parse_pred("true")) == mu

    def test_filter_event(self):
        mu = uniform([State(x=0), State(x=1)])
        assert mu.filter(parse_pred("x = 0")) == d(x=0).scale(HALF)

    def test_terminal_fdr_state_fails_guard(self):
        assert dirac(State(v=4, c=0, n=3)).filter(parse_pred("v < n")).is_empty()

    def test_prob_of_unequal_coins(self):
        col = SubDist({State(x=0, y=0): F(4, 25), State(x=0, y=1): F(6, 25),
                       State(x=1, y=0): F(6, 25), State(x=1, y=1): F(9, 25)})
        assert col.prob(parse_pred("x != y")) == F(12, 25)
        assert col.prob(parse_pred("false")) == 0
        assert d(x=0, y=0).prob(parse_pred("x = y")) == 1

    def test_event_pred_negation(self):
        ev = EventPred(parse_pred("x = 0"))
        assert ev(State()) and not ev.negate()(State())

    @given(subdists(), preds())
    def test_filter_partition(self, mu, b):
        assert mu.filter(b) + mu.filter(Not(b)) == mu

    @given(subdists(), preds())
    def test_prob_is_mass_of_filter(self, mu, b):
        assert mu.prob(b) == mu.filter(b).mass


class TestMarginal:
    def test_fdr_one_iteration_marginal(self):
        # n=2 from (v=1,c=0): one iteration gives v=2 and c uniform on {0,1}
        mu = (dirac(State(v=2, c=0, n=2)).scale(HALF) + dirac(State(v=2, c=1, n=2)).scale(HALF))
        assert mu.marginal(["c"]) == d(c=0).scale(HALF) + d(c=1).scale(HALF)

    def test_marginal_on_all_vars(self):
        mu = uniform([State(x=1, y=2), State(x=3)])
        assert mu.marginal(["x", "y"]) == mu

    def test_drop_variable(self):
        assert dirac(State(x=1, y=7)).marginal(["x"]) == d(x=1)


class TestSubstitution:
    def test_shift(self):
        inv = AffineMap("x", 1, Const(1))  # x + 1
        assert substitute(d(x=1), inv) == d(x=0)

    def test_doubling_loses_mass(self):
        inv = AffineMap("x", 2, Const(0))  # 2x
        assert substitute(d(x=1), inv).is_empty()

    def test_halving_with_divisibility_guard(self):
        inv = AffineMap("x", 1, Const(0), 2)  # x / 2, defined when 2 | x
        assert substitute(d(x=1), inv) == d(x=2)
        assert substitute(d(x=1).scale(HALF) + d(x=3).scale(HALF), inv) == \
            d(x=2).scale(HALF) + d(x=6).scale(HALF)

    def test_identity_substitution(self):
        mu = uniform([State(x=1, y=2), State(x=-4)])
        assert substitute(mu, AffineMap("x", 1, Const(0))) == mu

    def test_inverse_of_assignment_target(self):
        # the assignment x := 2x + 1 moves x=3 to x=7; substituting its inverse does too
        inv = injective_inverse(parse_expr("2 * x + 1"), "x")
        assert substitute(d(x=3), inv) == d(x=7)

    @given(st.data())
    def test_agrees_with_pointwise_definition(self, data):
        x, e = data.draw(affine_assignments())
        inv = injective_inverse(e, x)
        mu = data.draw(subdists())
        # with e = a*x + t, any state in the support of the substitution has the form
        # tau[x/e(tau)] for tau in the support of mu; add unrelated states as noise
        candidates = {s.set(x, eval_expr(e, s)) for s in mu.support}
        candidates |= {s.set(x, v) for s in mu.support for v in range(-6, 7)}
        assert substitute(mu, inv) == substitute_pointwise(mu, inv, candidates)

    @given(subdists(), subdists(), probs, st.data())
    def test_distributes_over_add_and_scale(self, m1, m2, p, data):
        x, e = data.draw(affine_assignments())
        inv = injective_inverse(e, x)
        if m1.mass + m2.mass <= 1:
            assert substitute(m1 + m2, inv) == substitute(m1, inv) + substitute(m2, inv)
        assert substitute(m1.scale(p), inv) == substitute(m1, inv).scale(p)


class TestEqualityAndRendering:
    def test_lowest_terms(self):
        assert d(x=0).scale(HALF) == d(x=0).scale(F(2, 4))

    def test_scope_does_not_affect_equality(self):
        assert dirac(State(x=1), ("x", "y")) == dirac(State(x=1), ("y", "x"))

    def test_mixture(self):
        mu = mixture([(F(1, 3), d(x=0)), (F(2, 3), d(x=1))], ("x",))
        assert mu[State(x=1)] == F(2, 3)

    def test_render_is_sorted_by_scope_values(self):
        mu = SubDist({State(x=1): F(1, 2), State(y=3): F(1, 3)}, ("x", "y"))
        assert mu.render() == "1/3 : {x=0,y=3}\n1/2 : {x=1,y=0}"

    def test_json(self):
        obj = json.loads(d(x=1, y=0).scale(HALF).to_json())
        assert obj["schema"] == 1
        assert obj["mass"] == "1/2"
        assert obj["support"] == [{"p": "1/2", "state": {"x": 1, "y": 0}}]

    @given(subdists(), subdists())
    def test_order_is_pointwise(self, m1, m2):
        expected = all(w <= m2[s] for s, w in m1.items())
        assert (m1 <= m2) == expected
