"""Parsers for LLM completions.

Each parser tries a strict reading first and then a tolerant fallback; the
phase that succeeded is logged at DEBUG. Every parser accepts arbitrary
``str`` or ``bytes`` and either returns a value or raises :class:`ParseError`.
"""
from __future__ import annotations

import logging
import re

log = logging.getLogger(__name__)

_NUMBER = re.compile(r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)")
_NUMBERED = re.compile(r"^\s*\(?\d+\s*[.):]\s*(.*\S)\s*$")
_BULLET = re.compile(r"^\s*[-*•]\s+(.*\S)\s*$")
_EDGE = " \t\r\n\"'`*.,;:!?()[]{}"


class ParseError(ValueError):
    def __init__(self, message: str, text: str = ""):
        super().__init__(message)
        self.text = text


def _as_text(text) -> str:
    if isinstance(text, (bytes, bytearray)):
        return bytes(text).decode("utf-8", errors="replace")
    if not isinstance(text, str):
        raise ParseError(f"expected text, got {type(text).__name__}")
    return text


def _strict_number(text: str) -> float | None:
    s = text.strip().rstrip(".")
    if _NUMBER.fullmatch(s):
        return float(s)
    return None


def _first_number(text: str) -> tuple[float, bool] | None:
    m = _NUMBER.search(text)
    if not m:
        return None
    rest = text[m.end():].lstrip()
    return float(m.group()), rest.startswith("%")


def parse_rating_0_100(text) -> float:
    """A rating on the 0-100 scale; out-of-range values are errors."""
    text = _as_text(text)
    value = _strict_number(text)
    phase = "strict"
    if value is None:
        found = _first_number(text)
        if found is None:
            raise ParseError("no number found", text)
        value, phase = found[0], "tolerant"
    if not 0.0 <= value <= 100.0:
        raise ParseError(f"rating {value} outside [0, 100]", text)
    log.debug("parse_rating_0_100: %s", phase)
    return value


def parse_likelihood(text) -> float:
    """A probability in [0, 1]; a percentage like ``70%`` is rescaled."""
    text = _as_text(text)
    value = _strict_number(text)
    phase = "strict"
    if value is None:
        found = _first_number(text)
        if found is None:
            raise ParseError("no number found", text)
        value, percent = found
        if percent:
            value /= 100.0
        phase = "tolerant"
    if not 0.0 <= value <= 1.0:
        raise ParseError(f"likelihood {value} outside [0, 1]", text)
    log.debug("parse_likelihood: %s", phase)
    return value


def parse_yes_no(text) -> bool:
    text = _as_text(text)
    s = text.strip(_EDGE).casefold()
    if s in ("yes", "no"):
        log.debug("parse_yes_no: strict")
        return s == "yes"
    m = re.match(r"(yes|no)\b", s)
    if m:
        log.debug("parse_yes_no: tolerant")
        return m.group(1) == "yes"
    raise ParseError("neither 'yes' nor 'no' found", text)


def parse_numbered_list(text, expected_n: int) -> list[str]:
    """Items of a numbered list; tolerant mode accepts bullets or bare lines."""
    text = _as_text(text)
    lines = [ln for ln in text.splitlines() if ln.strip()]
    items = [m.group(1).strip() for ln in lines if (m := _NUMBERED.match(ln))]
    phase = "strict"
    if not items:
        phase = "tolerant"
        items = []
        for ln in lines:
            m = _BULLET.match(ln)
            items.append((m.group(1) if m else ln).strip())
    items = [it for it in items if it.strip(_EDGE)]
    if not items:
        raise ParseError("no list items found", text)
    log.debug("parse_numbered_list: %s", phase)
    return items[:expected_n]


def parse_comma_list(text, expected_n: int) -> list[str]:
    """Items of a comma-separated list; falls back to list parsing."""
    text = _as_text(text)
    body = text.strip()
    if "\n" not in body and "," in body:
        items = [it.strip(_EDGE) for it in body.split(",")]
        items = [re.sub(r"^(and|or)\s+", "", it) for it in items]
        items = [it for it in items if it]
        if items:
            log.debug("parse_comma_list: strict")
            return items[:expected_n]
    items = []
    for item in parse_numbered_list(text, 10 * max(expected_n, 1)):
        items += [it.strip(_EDGE) for it in item.split(",") if it.strip(_EDGE)]
    if not items:
        raise ParseError("no list items found", text)
    log.debug("parse_comma_list: tolerant")
    return items[:expected_n]
