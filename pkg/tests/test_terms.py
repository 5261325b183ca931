"""Unification, substitution algebra, and outcome enumeration."""
import itertools

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from kbmc.terms import (
    EMPTY,
    AltSet,
    Constant,
    Proposition,
    Substitution,
    Variable,
    alternative_outcomes,
    apply,
    apply_term,
    compose,
    instance_match,
    proposition_outcomes,
    unify,
)

from helpers import prop


def sub(**kw):
    return Substitution.of({k: v for k, v in kw.items()})


class TestUnify:
    def test_single_binding_forced(self):
        theta = unify(prop("weather", "?x", "monday"), prop("weather", "rainy", "monday"))
        assert theta == sub(x=Constant("rainy"))

    def test_restricted_proposition_pattern(self):
        theta = unify(
            prop("weather", ("fair", "cloudy", "rainy"), "?d"),
            prop("weather", "?x", "tomorrow"),
        )
        assert theta == sub(
            x=AltSet(("fair", "cloudy", "rainy")), d=Constant("tomorrow")
        )

    def test_relation_clash_fails(self):
        assert unify(prop("weather", "fair", "monday"), prop("forecast", "fair", "monday")) is None

    def test_arity_clash_fails(self):
        assert unify(prop("weather", "fair"), prop("weather", "fair", "monday")) is None

    def test_constant_narrows_altset(self):
        theta = unify(
            prop("weather", "rainy", "?d"),
            prop("weather", ("fair", "cloudy", "rainy"), "today"),
        )
        assert theta == sub(d=Constant("today"))

    def test_constant_outside_altset_fails(self):
        assert unify(
            prop("weather", "snowy", "today"),
            prop("weather", ("fair", "cloudy", "rainy"), "today"),
        ) is None

    def test_altsets_equal_order_sensitive(self):
        assert unify(
            prop("w", ("a", "b")), prop("w", ("a", "b"))
        ) == EMPTY
        assert unify(prop("w", ("a", "b")), prop("w", ("b", "a"))) is None

    def test_extends_input_substitution(self):
        theta = sub(x=Constant("rainy"))
        out = unify(prop("w", "?x", "?d"), prop("w", "rainy", "monday"), theta)
        assert out == sub(x=Constant("rainy"), d=Constant("monday"))
        assert unify(prop("w", "?x"), prop("w", "fair"), theta) is None

    def test_variable_chain_resolved(self):
        out = unify(prop("w", "?x", "?x"), prop("w", "?y", "rainy"))
        assert out is not None
        assert apply(out, prop("w", "?x", "?y")) == prop("w", "rainy", "rainy")


class TestComposeApply:
    def test_identity(self):
        theta = sub(x=Constant("rainy"))
        assert compose(EMPTY, theta) == theta
        assert compose(theta, EMPTY) == theta

    def test_chained_binding(self):
        assert compose(sub(x=Variable("y")), sub(y=Constant("rainy"))) == sub(
            x=Constant("rainy"), y=Constant("rainy")
        )

    def test_disjoint_union(self):
        assert compose(sub(x=Constant("fair")), sub(y=Constant("monday"))) == sub(
            x=Constant("fair"), y=Constant("monday")
        )

    def test_apply_binds_everywhere(self):
        assert apply(sub(x=Constant("rainy")), prop("weather", "?x", "saturday")) == prop(
            "weather", "rainy", "saturday"
        )

    def test_apply_empty_is_identity(self):
        p = prop("weather", "?x", "monday")
        assert apply(EMPTY, p) == p

    def test_apply_altset_binding(self):
        alts = ("fair", "cloudy", "rainy")
        assert apply(sub(x=AltSet(alts)), prop("weather", "?x", "monday")) == prop(
            "weather", alts, "monday"
        )


class TestAlternativeOutcomes:
    def test_single_restricted_proposition(self):
        p = prop("weather", ("fair", "cloudy", "rainy"), "monday")
        outs = alternative_outcomes([p])
        assert len(outs) == 3
        assert [o[0].label() for o in outs] == ["fair", "cloudy", "rainy"]
        assert outs[0][0].ground() == prop("weather", "fair", "monday")

    def test_empty_conjunction(self):
        assert alternative_outcomes([]) == ((),)

    def test_cross_product_order(self):
        outs = alternative_outcomes([prop("a", ("x", "y")), prop("b", ("u", "v"))])
        labels = [(o1.label(), o2.label()) for o1, o2 in outs]
        assert labels == [("x", "u"), ("x", "v"), ("y", "u"), ("y", "v")]

    def test_two_altsets_in_one_proposition(self):
        p = prop("mix", ("a", "b"), ("u", "v"))
        assert [o.label() for o in proposition_outcomes(p)] == [
            "a,u", "a,v", "b,u", "b,v",
        ]


class TestInstanceMatch:
    def test_instance_of_restricted_label(self):
        theta = instance_match(
            prop("weather", "?y", "monday"),
            prop("weather", ("fair", "cloudy", "rainy"), "monday"),
        )
        assert theta == sub(y=AltSet(("fair", "cloudy", "rainy")))

    def test_never_instantiates_the_label(self):
        assert instance_match(
            prop("weather", "?y", "monday"),
            prop("weather", ("fair", "cloudy", "rainy"), "?d"),
        ) is None

    def test_no_narrowing_reuse(self):
        assert instance_match(
            prop("weather", "rainy", "monday"),
            prop("weather", ("fair", "cloudy", "rainy"), "monday"),
        ) is None


# -- property tests --------------------------------------------------------------

_CONSTS = ["a", "b", "c"]
_ALTSETS = [("a", "b"), ("b", "c"), ("a", "b", "c")]

terms_st = st.one_of(
    st.sampled_from(_CONSTS).map(Constant),
    st.sampled_from(["x", "y", "z", "w"]).map(Variable),
    st.sampled_from(_ALTSETS).map(AltSet),
)
props_st = st.builds(
    lambda args: Proposition("p", tuple(args)),
    st.lists(terms_st, min_size=0, max_size=4),
)
pairs_st = st.tuples(props_st, props_st).filter(lambda pq: len(pq[0].args) == len(pq[1].args))

subs_st = st.builds(
    lambda names, terms: Substitution.of(dict(zip(names, terms))),
    st.lists(st.sampled_from(["x", "y", "z"]), max_size=3, unique=True),
    st.lists(st.one_of(st.sampled_from(_CONSTS).map(Constant),
                       st.sampled_from(["x", "y", "z", "u"]).map(Variable)), max_size=3),
)


def narrow_equal(p: Proposition, q: Proposition) -> bool:
    """Syntactic equality up to a value set narrowed to one of its members."""
    if p.relation != q.relation or len(p.args) != len(q.args):
        return False
    for a, b in zip(p.args, q.args):
        if a == b:
            continue
        if isinstance(a, AltSet) and isinstance(b, Constant) and b.symbol in a.members:
            continue
        if isinstance(b, AltSet) and isinstance(a, Constant) and a.symbol in b.members:
            continue
        return False
    return True


@given(pairs_st)
def test_unifier_soundness(pq):
    p, q = pq
    theta = unify(p, q)
    assume(theta is not None)
    assert narrow_equal(apply(theta, p), apply(theta, q))


@given(pairs_st)
@settings(max_examples=200)
def test_unifier_generality_by_exhaustive_grounding(pq):
    p, q = pq
    theta = unify(p, q)
    assume(theta is not None)
    names = sorted(set(p.variables()) | set(q.variables()))
    assume(len(names) <= 4)
    for values in itertools.product(_CONSTS, repeat=len(names)):
        sigma = Substitution.of({n: Constant(v) for n, v in zip(names, values)})
        if not narrow_equal(apply(sigma, p), apply(sigma, q)):
            continue
        # Any grounding unifier factors through the most general one.
        for n in names:
            via = apply_term(sigma, apply_term(theta, Variable(n)))
            direct = apply_term(sigma, Variable(n))
            assert via == direct or (
                isinstance(via, AltSet)
                and isinstance(direct, Constant)
                and direct.symbol in via.members
            )


@given(pairs_st)
def test_unify_result_idempotent(pq):
    p, q = pq
    theta = unify(p, q)
    assume(theta is not None)
    assert apply(theta, apply(theta, p)) == apply(theta, p)
    assert apply(theta, apply(theta, q)) == apply(theta, q)


@given(subs_st, subs_st, subs_st, props_st)
def test_compose_matches_sequential_application(t1, t2, t3, p):
    assert apply(compose(t1, t2), p) == apply(t2, apply(t1, p))
    left = compose(compose(t1, t2), t3)
    right = compose(t1, compose(t2, t3))
    assert apply(left, p) == apply(right, p)


@given(subs_st)
def test_compose_identity(theta):
    assert compose(EMPTY, theta) == theta
    assert compose(theta, EMPTY) == theta


@given(st.lists(st.sampled_from(_ALTSETS), min_size=0, max_size=3))
def test_alternative_outcomes_length(altsets):
    ps = [Proposition(f"p{i}", (AltSet(m),)) for i, m in enumerate(altsets)]
    expected = 1
    for m in altsets:
        expected *= len(m)
    assert len(alternative_outcomes(ps)) == expected
