"""Knowledge-base text format: parsing, validation diagnostics, round trips."""
import random

import pytest

from kbmc.knowledge import (
    DecideQuery,
    DistQuery,
    InfoInfluence,
    LogicClause,
    LogicQuery,
    Prior,
    ProbInfluence,
    ValueInfluence,
)
from kbmc.parser import ParseFailure, parse_kb, parse_query, serialize_kb, validate_query
from helpers import prop, random_kb

WEATHER = (
    "domain weather/2 @1 {fair, cloudy, rainy}.\n"
    "prior (weather ?x monday) = {fair: 0.7, cloudy: 0.2, rainy: 0.1}.\n"
)


class TestParseKb:
    def test_domain_and_prior(self):
        kb = parse_kb(WEATHER)
        assert len(kb.domains) == 1
        (prior,) = kb.influences
        assert isinstance(prior, Prior)
        assert prior.subject == prop("weather", ("fair", "cloudy", "rainy"), "monday")
        assert prior.dist.probs == (0.7, 0.2, 0.1)

    def test_bare_fact_gets_an_implicit_domain(self):
        kb = parse_kb("fact (weather rainy saturday).")
        assert kb.facts == (prop("weather", "rainy", "saturday"),)
        assert kb.domain_for("weather").arity == 2

    def test_bad_row_sum_rejected_not_renormalized(self):
        bad = "domain weather/2 @1 {fair, cloudy, rainy}.\n" \
              "prior (weather ?x monday) = {fair: 0.7, cloudy: 0.2, rainy: 0.2}.\n"
        with pytest.raises(ParseFailure) as exc:
            parse_kb(bad)
        (err,) = exc.value.errors
        assert err.kind == "bad-distribution"
        assert err.span.line == 2

    def test_uppercase_input_normalized(self):
        kb = parse_kb("fact (WEATHER RAINY SATURDAY).")
        assert kb.facts == (prop("weather", "rainy", "saturday"),)

    def test_comments_and_whitespace(self):
        kb = parse_kb("% a comment\n  fact (p a).  % trailing\n")
        assert len(kb.facts) == 1

    def test_logic_clause(self):
        kb = parse_kb("logic (wet ?d) <- (weather rainy ?d), (outside ?d).")
        (clause,) = kb.influences
        assert isinstance(clause, LogicClause)
        assert clause.head == prop("wet", "?d")
        assert len(clause.body) == 2

    def test_prob_with_guard_and_condition(self):
        text = (
            "domain weather/2 @1 {fair, cloudy, rainy}.\n"
            "prob (weather ?x tomorrow) |p (inversion today), (weather ?y today) = {\n"
            "  fair: 0.2, 0.3, 0.5; cloudy: 0.1, 0.3, 0.6; rainy: 0.05, 0.15, 0.8}.\n"
        )
        kb = parse_kb(text)
        (inf,) = kb.influences
        assert isinstance(inf, ProbInfluence)
        assert inf.guard_conditions == (prop("inversion", "today"),)
        assert inf.restricted_conditions == (
            prop("weather", ("fair", "cloudy", "rainy"), "today"),
        )
        assert len(inf.cpt.rows) == 3

    def test_unrestricted_cpt_single_row(self):
        text = (
            "domain coin/1 @1 {heads, tails}.\n"
            "prob (coin ?c) |p (rigged) = {0.9, 0.1}.\n"
        )
        kb = parse_kb(text)
        (inf,) = kb.influences
        assert inf.cpt.row_axes == ()
        assert inf.cpt.rows[0][1].probs == (0.9, 0.1)

    def test_info_and_value(self, picnic_kb):
        kinds = [type(i) for i in picnic_kb.influences]
        assert InfoInfluence in kinds and ValueInfluence in kinds
        info = next(i for i in picnic_kb.influences if isinstance(i, InfoInfluence))
        assert info.decision.restricted_positions == (0,)

    def test_errors_carry_spans_and_collect(self):
        bad = "fact (p a.\nfact q).\nfact (p a).\n"
        with pytest.raises(ParseFailure) as exc:
            parse_kb(bad, filename="bad.ikb")
        assert len(exc.value.errors) == 2
        assert all(e.span.file == "bad.ikb" for e in exc.value.errors)
        assert exc.value.errors[0].span.line == 1

    def test_unknown_relation_in_influence(self):
        with pytest.raises(ParseFailure) as exc:
            parse_kb("prior (weather ?x monday) = {fair: 1.0}.")
        assert exc.value.errors[0].kind == "unknown-relation"

    def test_duplicate_domain(self):
        with pytest.raises(ParseFailure) as exc:
            parse_kb("domain p/1.\ndomain p/2.")
        assert exc.value.errors[0].kind == "duplicate-domain"

    def test_arity_mismatch(self):
        with pytest.raises(ParseFailure) as exc:
            parse_kb("domain p/2.\nfact (p a).")
        assert exc.value.errors[0].kind == "arity-mismatch"

    def test_constant_outside_declared_set(self):
        with pytest.raises(ParseFailure) as exc:
            parse_kb("domain w/1 @1 {a, b}.\nfact (w c).")
        assert exc.value.errors[0].kind == "arity-mismatch"

    def test_altset_literal_must_match_declaration(self):
        with pytest.raises(ParseFailure) as exc:
            parse_kb("domain w/1 @1 {a, b}.\nprior (w {b, a}) = {b: 0.5, a: 0.5}.")
        assert exc.value.errors[0].kind == "arity-mismatch"

    def test_nonground_fact_rejected(self):
        with pytest.raises(ParseFailure) as exc:
            parse_kb("fact (p ?x).")
        assert exc.value.errors[0].kind == "syntax"

    def test_cpt_missing_row(self):
        text = (
            "domain w/1 @1 {a, b}.\n"
            "prob (w ?x) |p (w ?y) = {a: 0.5, 0.5}.\n"
        )
        with pytest.raises(ParseFailure) as exc:
            parse_kb(text)
        assert exc.value.errors[0].kind == "bad-distribution"

    def test_error_cap(self):
        text = "\n".join("fact (p ?x)." for _ in range(30))
        with pytest.raises(ParseFailure) as exc:
            parse_kb(text)
        assert len(exc.value.errors) == 20


class TestParseQuery:
    def test_logic_query(self):
        q = parse_query("?logic (weather rainy saturday).")
        assert isinstance(q, LogicQuery)
        assert q.goals == (prop("weather", "rainy", "saturday"),)

    def test_dist_query(self):
        q = parse_query("?dist (weather ?x monday).")
        assert isinstance(q, DistQuery)
        assert q.pattern == prop("weather", "?x", "monday")

    def test_decide_query(self):
        q = parse_query("?decide (payoff ?v).")
        assert isinstance(q, DecideQuery)

    def test_conjunction_and_optional_dot(self):
        q = parse_query("?logic (p ?x), (q ?x)")
        assert isinstance(q, LogicQuery) and len(q.goals) == 2

    def test_malformed_query(self):
        with pytest.raises(ParseFailure):
            parse_query("?what (p a).")
        with pytest.raises(ParseFailure):
            parse_query("?dist (p a), (q b).")

    def test_validate_query(self, weather_kb):
        q = parse_query("?dist (weather ?x monday).")
        assert validate_query(q, weather_kb) is q
        with pytest.raises(ParseFailure) as exc:
            validate_query(parse_query("?dist (nothing ?x)."), weather_kb)
        assert exc.value.errors[0].kind == "unknown-relation"
        with pytest.raises(ParseFailure):
            validate_query(parse_query("?logic (weather {fair, cloudy, rainy} monday)."), weather_kb)


class TestRoundTrip:
    def test_weather_prior_round_trip(self):
        kb = parse_kb(WEATHER)
        assert parse_kb(serialize_kb(kb)) == kb

    def test_empty_kb(self):
        kb = parse_kb("")
        assert kb.domains == () and kb.facts == () and kb.influences == ()
        assert serialize_kb(kb) == ""

    def test_fixture_round_trips(self, weather_kb, picnic_kb, inversion_kb):
        for kb in (weather_kb, picnic_kb, inversion_kb):
            text = serialize_kb(kb)
            again = parse_kb(text)
            assert again == kb
            assert serialize_kb(again) == text

    def test_generated_round_trips(self):
        rng = random.Random(20260810)
        for i in range(60):
            kb = random_kb(rng, declarations=rng.randint(1, 50))
            text = serialize_kb(kb)
            again = parse_kb(text, filename=f"gen{i}.ikb")
            assert again == kb, f"generated KB {i} failed to round trip"
            assert serialize_kb(again) == text

    def test_parse_is_deterministic(self):
        text = serialize_kb(random_kb(random.Random(7), declarations=25))
        assert serialize_kb(parse_kb(text)) == serialize_kb(parse_kb(text))


class TestWiderTables:
    def test_prior_over_two_restricted_positions(self):
        kb = parse_kb(
            "domain r/2 @1 {a, b} @2 {u, v}.\n"
            "prior (r ?x ?y) = {a, u: 0.1; a, v: 0.2; b, u: 0.3; b, v: 0.4}.\n"
        )
        (prior,) = kb.influences
        assert prior.dist.probs == (0.1, 0.2, 0.3, 0.4)
        assert [o.label() for o in prior.dist.outcomes] == ["a,u", "a,v", "b,u", "b,v"]
        assert parse_kb(serialize_kb(kb)) == kb

    def test_cpt_with_two_condition_axes(self):
        kb = parse_kb(
            "domain w/1 @1 {x, y}.\ndomain c1/1 @1 {a, b}.\ndomain c2/1 @1 {u, v}.\n"
            "prob (w ?q) |p (c1 ?r), (c2 ?s) = {\n"
            "  a, u: 0.1, 0.9; a, v: 0.2, 0.8;\n"
            "  b, u: 0.3, 0.7; b, v: 0.4, 0.6}.\n"
        )
        (inf,) = kb.influences
        assert len(inf.cpt.rows) == 4
        keys = ["&".join(o.label() for o in k) for k, _ in inf.cpt.rows]
        assert keys == ["a&u", "a&v", "b&u", "b&v"]
        assert parse_kb(serialize_kb(kb)) == kb
