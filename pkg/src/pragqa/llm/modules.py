"""LLM-backed implementations of the pluggable slots.

Each instance is bound to one iteration index so repeated runs draw fresh
(cached) samples. Evaluators memoize per prompt; the client cache does the
rest.
"""
from __future__ import annotations

import re
import threading

from ..corpus import Vignette
from ..model import BASE, MODES, Question, Response, WorldState
from ..modules import (
    Goal,
    UTILITY_MAX,
    UTILITY_MIN,
    dedupe,
    normalize_text,
    question_from_text,
    response_from_text,
    with_observed,
    with_rule_based_responses,
)
from . import parsing
from .client import LLMClient
from .prompts import load_template, render

_QUOTES = " \t\"'“”‘’`"


def situation(context: str, question: str) -> str:
    return f"{context}\nSomeone asks: {question}"


def _join(items) -> str:
    return ", ".join(items)


class _Bound:
    def __init__(self, client: LLMClient, iteration: int = 0):
        self.client = client
        self.iteration = iteration
        self._memo: dict = {}
        self._lock = threading.Lock()

    def _ask(self, prompt: str) -> str:
        return self.client.chat(prompt, self.iteration)

    def _memoized(self, key, compute):
        with self._lock:
            if key in self._memo:
                return self._memo[key]
        value = compute()
        with self._lock:
            self._memo[key] = value
        return value


class LLMSemantics(_Bound):
    """Truth (pragmatic mode) or truth and safety (base-level mode) judged by
    the LLM for the world's description."""

    def is_true_and_safe(
        self, world: WorldState, question: Question, response: Response, mode: str
    ) -> bool:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        key = (world.description, question.text, response.text, mode)
        return self._memoized(key, lambda: self._judge(world, question, response, mode))

    def _judge(self, world, question, response, mode) -> bool:
        scene = situation(world.description, question.text)
        if mode == BASE:
            prompt = render("base_semantics", **{"context + question": scene, "utterance": response.text})
        else:
            prompt = render("pragmatic_semantics", state=scene, utterance=response.text)
        return parsing.parse_yes_no(self._ask(prompt))


class LLMUtilityEvaluator(_Bound):
    def rate(self, goal: Goal, option: str) -> float:
        def compute() -> float:
            prompt = render("utility_evaluator", goal=goal.description, option=option)
            value = parsing.parse_rating_0_100(self._ask(prompt))
            return min(UTILITY_MAX, max(UTILITY_MIN, value))
        return self._memoized((goal.description, option), compute)


class LLMGoalProposer(_Bound):
    """The goal prompt carries no context slot; the item follows the template."""

    def propose(self, vignette: Vignette, n: int) -> list[Goal]:
        if n < 1:
            raise ValueError("n must be >= 1")
        prompt = (
            render("goal_proposer", num_samples=n).rstrip()
            + "\n\n" + situation(vignette.context, vignette.question_text)
        )
        items = parsing.parse_comma_list(self._ask(prompt), n)
        goals = [Goal(t.strip(_QUOTES)) for t in items if t.strip(_QUOTES)]
        return dedupe(goals, key=lambda g: normalize_text(g.description))


class LLMResponseProposer(_Bound):
    def sample(self, vignette: Vignette, n: int) -> list[Response]:
        if n < 1:
            raise ValueError("n must be >= 1")
        prompt = render(
            "response_proposer", question=vignette.question_text,
            options=_join(vignette.alternatives), num_samples=n,
        )
        items = parsing.parse_numbered_list(self._ask(prompt), n)
        texts = [t.strip(_QUOTES) for t in items]
        return dedupe([response_from_text(t, vignette) for t in texts if t])

    def propose(self, vignette: Vignette, n: int) -> list[Response]:
        return with_rule_based_responses(self.sample(vignette, n), vignette)


class LLMQuestionProposer(_Bound):
    def sample(self, goal: Goal, vignette: Vignette, n: int) -> list[Question]:
        if n < 1:
            raise ValueError("n must be >= 1")
        key = (goal.description, vignette.id, n)

        def compute() -> list[Question]:
            prompt = render(
                "question_proposer", goal=goal.description, context=vignette.context, num_samples=n,
            )
            items = parsing.parse_numbered_list(self._ask(prompt), n)
            texts = [t.strip(_QUOTES) for t in items]
            return [question_from_text(t, vignette) for t in texts if t]
        return list(self._memoized(key, compute))

    def propose(self, goal: Goal, vignette: Vignette, n: int) -> list[Question]:
        return with_observed(dedupe(self.sample(goal, vignette, n)), vignette)


class LLMQuestionLikelihood(_Bound):
    """Raw likelihood of a question, with or without the questioner's goal."""

    def __init__(self, client: LLMClient, iteration: int = 0, with_goals: bool = True):
        super().__init__(client, iteration)
        self.with_goals = with_goals

    def score(self, goal: Goal | None, vignette: Vignette, question: Question) -> float:
        if self.with_goals:
            if goal is None:
                raise ValueError("goal-conditioned likelihood needs a goal")
            prompt = render(
                "questioner_with_goals", goal=goal.description,
                state=vignette.context, utterance=question.text,
            )
        else:
            prompt = render("questioner_without_goals", state=vignette.context, utterance=question.text)
        return self._memoized(prompt, lambda: parsing.parse_likelihood(self._ask(prompt)))


_REPLY = re.compile(r"you reply\s*:", re.IGNORECASE)


def extract_reply(completion: str) -> str:
    """The answer after the last "You reply:"; else the last paragraph."""
    parts = _REPLY.split(completion)
    if len(parts) > 1:
        return parts[-1].strip()
    paragraphs = [p.strip() for p in re.split(r"\n\s*\n", completion) if p.strip()]
    return paragraphs[-1] if paragraphs else ""


class LLMOneShotCoT(_Bound):
    """The monolithic variant: one chain-of-thought completion per item."""

    def prompt(self, vignette: Vignette) -> str:
        item = f"{vignette.context} \nSomeone asks: {vignette.question_text} \n\nLet's think step by step."
        return load_template("one_shot_cot").rstrip() + "\n\n" + item

    def answer(self, vignette: Vignette) -> str:
        return extract_reply(self._ask(self.prompt(vignette)))
