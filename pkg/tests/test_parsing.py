from __future__ import annotations

import logging

import pytest
from hypothesis import given, strategies as st

from pragqa.llm.parsing import (
    ParseError,
    parse_comma_list,
    parse_likelihood,
    parse_numbered_list,
    parse_rating_0_100,
    parse_yes_no,
)


@pytest.mark.parametrize("text, value", [("85", 85.0), ("Rating: 42.5", 42.5), ("0", 0.0),
                                         (" 100.\n", 100.0), (b"77", 77.0)])
def test_rating(text, value):
    assert parse_rating_0_100(text) == value


@pytest.mark.parametrize("text", ["very happy", "", "150", "-3"])
def test_rating_errors(text):
    with pytest.raises(ParseError):
        parse_rating_0_100(text)


@pytest.mark.parametrize("text, value", [("Yes.", True), ("no", False), ("  'YES' ", True),
                                         ("No, it is false.", False), ("**yes**", True)])
def test_yes_no(text, value):
    assert parse_yes_no(text) is value


@pytest.mark.parametrize("text", ["maybe", "", "yesterday", "I think yes"])
def test_yes_no_errors(text):
    with pytest.raises(ParseError):
        parse_yes_no(text)


def test_numbered_list():
    assert parse_numbered_list("1. A\n2. B", 2) == ["A", "B"]
    assert parse_numbered_list("1) A\n2) B\n3) C", 2) == ["A", "B"]
    assert parse_numbered_list("- A\n- B", 5) == ["A", "B"]
    assert parse_numbered_list("Here:\n\n1. A\n2: B", 5) == ["A", "B"]
    with pytest.raises(ParseError):
        parse_numbered_list("", 3)


@pytest.mark.parametrize("text, value", [("0.7", 0.7), ("Likelihood: 0.05", 0.05), ("70%", 0.7),
                                         ("1", 1.0), (".5", 0.5)])
def test_likelihood(text, value):
    assert parse_likelihood(text) == pytest.approx(value)


@pytest.mark.parametrize("text", ["1.2", "none", "Likelihood: 7", "120%"])
def test_likelihood_errors(text):
    with pytest.raises(ParseError):
        parse_likelihood(text)


def test_comma_list():
    assert parse_comma_list("get a cold drink, avoid alcohol, learn the menu", 3) == [
        "get a cold drink", "avoid alcohol", "learn the menu"]
    assert parse_comma_list("a, b, and c.", 3) == ["a", "b", "c"]
    assert parse_comma_list("1. a\n2. b", 3) == ["a", "b"]


def test_phase_is_logged(caplog):
    with caplog.at_level(logging.DEBUG, logger="pragqa.llm.parsing"):
        parse_rating_0_100("85")
        parse_rating_0_100("Rating: 85")
    assert "strict" in caplog.text and "tolerant" in caplog.text


PARSERS = [parse_rating_0_100, parse_yes_no, parse_likelihood,
           lambda t: parse_numbered_list(t, 3), lambda t: parse_comma_list(t, 3)]


@given(st.binary(max_size=200))
def test_parsers_total_over_bytes(blob):
    for parse in PARSERS:
        try:
            parse(blob)
        except ParseError:
            pass


@given(st.text(max_size=200))
def test_parsers_total_over_text(text):
    for parse in PARSERS:
        try:
            parse(text)
        except ParseError:
            pass
