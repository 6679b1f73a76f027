"""The pluggable slots of the model and their symbolic implementations.

Slots: semantic evaluation (base-level and pragmatic), utility evaluation,
goal proposal, response proposal, question proposal and question
likelihood. LLM-backed implementations live in :mod:`pragqa.llm.modules`.
"""
from __future__ import annotations

import csv
import math
import re
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol, Sequence

from .categorize import mentioned
from .corpus import Vignette
from .model import BASE, MODES, NO, YES, ModelError, Question, Response, WorldState

UTILITY_MIN = 0.0
UTILITY_MAX = 100.0


@dataclass(frozen=True)
class Goal:
    description: str
    preferred_option: str | None = None

    def __post_init__(self) -> None:
        if not self.description or not self.description.strip():
            raise ValueError("goal description must be non-empty")


@dataclass
class UtilityTable:
    """Mean ratings per (goal, option); raw samples kept alongside."""

    ratings: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for key, value in self.ratings.items():
            if not (UTILITY_MIN <= value <= UTILITY_MAX):
                raise ValueError(f"rating {value!r} for {key!r} outside [0, 100]")

    def __contains__(self, key: tuple[str, str]) -> bool:
        return _key(*key) in self.ratings

    def get(self, goal: str, option: str) -> float:
        try:
            return self.ratings[_key(goal, option)]
        except KeyError:
            raise ModelError(f"unelicited pair: ({goal!r}, {option!r})") from None


def _key(goal: str, option: str) -> tuple[str, str]:
    return (goal.casefold().strip(), option.casefold().strip())


def load_utility_table(path: str | Path | None = None) -> UtilityTable:
    """Read a ``goal,option,rating`` CSV; repeated pairs are averaged."""
    if path is None:
        text = resources.files("pragqa").joinpath("data/utilities.csv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None or not {"goal", "option", "rating"} <= set(reader.fieldnames):
        raise ValueError("utility CSV needs columns goal, option, rating")
    samples: dict = {}
    for lineno, row in enumerate(reader, start=2):
        try:
            value = float(row["rating"])
        except (TypeError, ValueError):
            raise ValueError(f"line {lineno}: rating {row['rating']!r} is not a number") from None
        if not math.isfinite(value) or not UTILITY_MIN <= value <= UTILITY_MAX:
            raise ValueError(f"line {lineno}: rating {value!r} outside [0, 100]")
        samples.setdefault(_key(row["goal"], row["option"]), []).append(value)
    ratings = {k: math.fsum(v) / len(v) for k, v in samples.items()}
    return UtilityTable(ratings, samples)


def normalize_text(text: str) -> str:
    """De-duplication key: lowercase, punctuation stripped, whitespace collapsed."""
    table = str.maketrans("", "", string.punctuation + "“”‘’¿¡")
    return " ".join(text.casefold().translate(table).split())


def dedupe(items: Sequence, key=lambda x: normalize_text(x.text)) -> list:
    seen: set = set()
    out = []
    for item in items:
        k = key(item)
        if k not in seen:
            seen.add(k)
            out.append(item)
    return out


# --- interfaces ---------------------------------------------------------------

class UtilityEvaluator(Protocol):
    def rate(self, goal: Goal, option: str) -> float: ...


class GoalProposer(Protocol):
    def propose(self, vignette: Vignette, n: int) -> list[Goal]: ...


class ResponseProposer(Protocol):
    def propose(self, vignette: Vignette, n: int) -> list[Response]: ...


class QuestionProposer(Protocol):
    def sample(self, goal: Goal, vignette: Vignette, n: int) -> list[Question]: ...

    def propose(self, goal: Goal, vignette: Vignette, n: int) -> list[Question]: ...


class QuestionLikelihood(Protocol):
    def score(self, goal: Goal | None, vignette: Vignette, question: Question) -> float: ...


# --- text <-> domain objects ----------------------------------------------------

_NEGATION = re.compile(
    r"\b(no|nope|don'?t have|do not have|not have|haven'?t got|out of|sold out|"
    r"doesn'?t|does not|not available|unavailable|none|sorry)\b"
)
_AFFIRM = re.compile(r"^\W*(yes|yeah|yep|sure|of course)\b")


def response_from_text(text: str, vignette: Vignette) -> Response:
    """Wrap free text: alternatives are found lexically, the polar part by
    leading yes/no or a denial of the target."""
    text = text.strip()
    low = text.casefold()
    polar: str | None = None
    if _AFFIRM.match(low):
        polar = YES
    elif _NEGATION.search(low):
        polar = NO
    mentions = mentioned(text, vignette.alternatives)
    return Response(text, polar, frozenset(mentions))


def question_from_text(text: str, vignette: Vignette) -> Question:
    text = text.strip()
    if normalize_text(text) == normalize_text(vignette.question_text):
        return vignette.question
    return Question(text, "free-text")


def canonical_responses(vignette: Vignette) -> list[Response]:
    """One response per category: "I'm sorry, we don't have {target}. {continuation}"."""
    lead = f"I'm sorry, we don't have {vignette.target}."
    comp, sim, unrel = vignette.alternatives
    return [
        Response(lead, NO, frozenset()),
        Response(f"{lead} We have {comp}.", NO, frozenset({comp})),
        Response(f"{lead} We have {sim}.", NO, frozenset({sim})),
        Response(f"{lead} We have {unrel}.", NO, frozenset({unrel})),
        Response(f"{lead} We have {comp}, {sim}, and {unrel}.", NO, frozenset({comp, sim, unrel})),
    ]


def no_options_response(vignette: Vignette) -> Response:
    return canonical_responses(vignette)[0]


def all_options_response(vignette: Vignette) -> Response:
    return canonical_responses(vignette)[-1]


def symbolic_questions(vignette: Vignette) -> list[Question]:
    polars = [
        vignette.question if x == vignette.target else Question(f"Do you have {x}?", "polar", x)
        for x in vignette.universe
    ]
    return polars + [Question("What do you have?", "wh-all")]


# --- symbolic implementations ----------------------------------------------------

class SymbolicSemantics:
    """Truth conditions over option availability.

    The polar part of an answer is true iff the queried option's
    availability matches it; mentioned options must all be available. In
    base-level mode only bare literal answers count as safe.
    """

    def __init__(self, universe: Sequence[str]):
        self.universe = tuple(universe)
        self._vocab = frozenset(self.universe)

    def _subject(self, question: Question) -> str | None:
        if question.queried_option is not None:
            return question.queried_option
        if question.kind == "free-text":
            hits = mentioned(question.text, self.universe)
            if len(hits) == 1:
                return next(iter(hits))
        return None

    def is_true_and_safe(
        self, world: WorldState, question: Question, response: Response, mode: str
    ) -> bool:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        unknown = response.mentioned_options - self._vocab
        if unknown:
            raise ModelError(f"option out of vocabulary: {sorted(unknown)!r}")
        avail = world.available_options
        mentions = response.mentioned_options
        mentions_true = mentions <= avail and (not response.exhaustive or mentions == avail)
        if question.kind == "wh-all":
            if response.polar_part is not None:
                return False
            if mode == BASE and not response.exhaustive and len(mentions) != 1:
                return False
            return mentions_true
        subject = self._subject(question)
        if response.polar_part is None:
            polar_true = mode != BASE
        elif subject is None:
            polar_true = False
        else:
            polar_true = (response.polar_part == YES) == (subject in avail)
        if mode == BASE:
            return polar_true and not mentions and not response.exhaustive
        return polar_true and mentions_true


class TableUtilityEvaluator:
    """Look up human-elicited ratings."""

    def __init__(self, table: UtilityTable | None = None):
        self.table = table if table is not None else load_utility_table()

    def rate(self, goal: Goal, option: str) -> float:
        name = goal.preferred_option or goal.description
        value = self.table.get(name, option)
        return min(UTILITY_MAX, max(UTILITY_MIN, value))


class SymbolicGoalProposer:
    """The fixed goals: wanting each option of the universe, target first."""

    def propose(self, vignette: Vignette, n: int) -> list[Goal]:
        if n < 1:
            raise ValueError("n must be >= 1")
        goals = [Goal(x, preferred_option=x) for x in vignette.universe]
        return goals[:n]


class SymbolicResponseProposer:
    def propose(self, vignette: Vignette, n: int) -> list[Response]:
        if n < 1:
            raise ValueError("n must be >= 1")
        return canonical_responses(vignette)


class SymbolicQuestionProposer:
    """Polar questions about every option plus a wh-question, for any goal."""

    def sample(self, goal: Goal, vignette: Vignette, n: int) -> list[Question]:
        if n < 1:
            raise ValueError("n must be >= 1")
        return symbolic_questions(vignette)

    def propose(self, goal: Goal, vignette: Vignette, n: int) -> list[Question]:
        return with_observed(self.sample(goal, vignette, n), vignette)


def with_observed(questions: Sequence[Question], vignette: Vignette) -> list[Question]:
    """Proposals plus the observed question, de-duplicated by normalized text."""
    return dedupe(list(questions) + [vignette.question])


def with_rule_based_responses(responses: Sequence[Response], vignette: Vignette) -> list[Response]:
    return dedupe(list(responses) + [no_options_response(vignette), all_options_response(vignette)])
