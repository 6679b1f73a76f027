"""Five-way coding of free-text answers by which alternatives they mention."""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .corpus import Vignette


class ResponseCategory(str, Enum):
    NO_OPTIONS = "no-options"
    COMPETITOR = "competitor"
    SIMILAR = "similar"
    UNRELATED = "unrelated"
    ALL_OPTIONS = "all-options"
    UNCLASSIFIED = "unclassified"

    def __str__(self) -> str:
        return self.value


# canonical order; also the argmax tie-break order
CATEGORIES = (
    ResponseCategory.NO_OPTIONS,
    ResponseCategory.COMPETITOR,
    ResponseCategory.SIMILAR,
    ResponseCategory.UNRELATED,
    ResponseCategory.ALL_OPTIONS,
)

ROLE_PRECEDENCE = ("competitor", "similar", "unrelated")

_WORD = re.compile(r"[^\W_]+", re.UNICODE)


def _stem(token: str) -> str:
    if len(token) > 3 and token.endswith("ies"):
        return token[:-3] + "y"
    if token.endswith(("ches", "shes", "sses", "xes", "zes", "oes")):
        return token[:-2]
    if len(token) > 2 and token.endswith("s") and not token.endswith(("ss", "us")):
        return token[:-1]
    return token


def tokens(text: str) -> list[str]:
    return [_stem(t) for t in _WORD.findall(text.casefold())]


@lru_cache(maxsize=4096)
def _name_tokens(name: str) -> tuple[str, ...]:
    return tuple(tokens(name))


def _contains(haystack: list[str], needle: tuple[str, ...]) -> bool:
    n = len(needle)
    if n == 0:
        return False
    return any(tuple(haystack[i:i + n]) == needle for i in range(len(haystack) - n + 1))


def mentioned(text: str, names: Iterable[str]) -> set[str]:
    """Names occurring in ``text`` as whole words, ignoring case and plurals."""
    toks = tokens(text)
    return {name for name in names if _contains(toks, _name_tokens(name))}


@dataclass(frozen=True)
class Categorization:
    category: ResponseCategory
    partial_mention: bool = False


def categorize_detailed(response_text: str, vignette: "Vignette") -> Categorization:
    """Category plus a flag for answers mentioning exactly two alternatives.

    Two-alternative answers take the most relevant mentioned role
    (competitor > similar > unrelated). Blank text is unclassified.
    """
    if not response_text or not response_text.strip():
        return Categorization(ResponseCategory.UNCLASSIFIED)
    roles = {opt.name: opt.role for opt in vignette.options}
    hits = {roles[name] for name in mentioned(response_text, roles)}
    if not hits:
        return Categorization(ResponseCategory.NO_OPTIONS)
    if len(hits) == len(roles):
        return Categorization(ResponseCategory.ALL_OPTIONS)
    best = next(role for role in ROLE_PRECEDENCE if role in hits)
    return Categorization(ResponseCategory(best), partial_mention=len(hits) > 1)


def categorize(response_text: str, vignette: "Vignette") -> ResponseCategory:
    return categorize_detailed(response_text, vignette).category
