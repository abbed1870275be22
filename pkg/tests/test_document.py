from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest

from helpers import FIXTURES, five_state, instances, random_claim
from superhedge.document import market_to_document, parse_market_document, serialize_market_document
from superhedge.errors import DocumentParseError, DocumentValueError, MarketValidationError
from superhedge.scenario import Partition


def read(name):
    return (FIXTURES / name).read_text(encoding="utf-8")


def test_five_state_fixture_resolves_filtrations():
    m, claims = five_state()
    assert m.seller_filtration[1] == Partition([["w1", "w4"], ["w2"], ["w3", "w5"]])
    assert m.full_filtration[1] == Partition([["w1"], ["w2"], ["w4"], ["w3", "w5"]])
    assert m.short_restricted == frozenset({0, 1})
    assert set(m.space.probabilities.values()) == {Fraction(1, 5)}
    assert sorted(claims) == ["call", "unit"]


def test_probabilities_not_summing_to_one_name_the_sum():
    with pytest.raises(MarketValidationError, match="9/10"):
        parse_market_document(read("five_state_bad_sum.json"))


def test_zero_denominator_is_a_value_error_naming_the_field():
    with pytest.raises(DocumentValueError) as info:
        parse_market_document(read("five_state_zero_denominator.json"))
    assert info.value.location == "$.assets[1].prices.1.w3"


def test_zero_probability_is_a_value_error():
    with pytest.raises(DocumentValueError):
        parse_market_document(read("five_state_zero_probability.json"))


def test_syntax_error_reports_line():
    with pytest.raises(DocumentParseError) as info:
        parse_market_document(read("five_state_syntax_error.json"))
    assert info.value.location.startswith("line 17")


def test_schema_violation_reports_path():
    doc = json.loads(read("five_state.json"))
    doc["horizon"] = "two"
    with pytest.raises(DocumentParseError) as info:
        parse_market_document(json.dumps(doc))
    assert info.value.location == "$.horizon"


def test_float_rationals_rejected():
    doc = json.loads(read("five_state.json"))
    doc["probabilities"]["w1"] = 0.2
    with pytest.raises(DocumentParseError):
        parse_market_document(json.dumps(doc))


def test_invalid_market_rejected_unless_validation_is_off():
    with pytest.raises(MarketValidationError) as info:
        parse_market_document(read("five_state_broken.json"))
    assert any("bond_discounted" in f for f in info.value.failures)
    m, _ = parse_market_document(read("five_state_broken.json"), validate=False)
    assert m.prices[0](1, "w1") == 2


def test_round_trip_five_state():
    m, claims = five_state()
    text = serialize_market_document(m, claims)
    m2, claims2 = parse_market_document(text)
    assert m2 == m
    assert claims2 == claims
    assert serialize_market_document(m2, claims2) == text


def test_round_trip_generated_markets():
    rng = random.Random(0)
    for m in instances(25, seed=21):
        claims = {"B": random_claim(m, rng)}
        m2, claims2 = parse_market_document(serialize_market_document(m, claims))
        assert (m2, claims2) == (m, claims)


def test_explicit_document_has_no_generated_modes():
    m, _ = five_state()
    doc = market_to_document(m)
    assert isinstance(doc["full_filtration"], dict) and isinstance(doc["seller_filtration"], dict)
    assert doc["no_short"] == ["bond", "S1"]
