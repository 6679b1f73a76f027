"""Decision problems and the recursive question-answering agents.

Three agents are defined here:

* the base-level respondent, which answers literally and uniformly among
  the true and safe literal answers;
* the pragmatic questioner, which picks questions by soft-maximizing the
  expected value of its decision problem after a base-level answer;
* the pragmatic respondent, which infers the questioner's decision problem
  from the question asked and soft-maximizes a mix of informativity and
  action relevance.

All inference is exact enumeration. The numerical inner loop (conditioning
a world prior on many truth masks and valuing each posterior) is delegated
to :mod:`pragqa.kernels`.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Protocol, Sequence

import numpy as np

from . import kernels
from .distribution import Distribution, softmax, softmax_probs

YES = "yes"
NO = "no"
BASE = "base-level"
PRAGMATIC = "pragmatic"
MODES = (BASE, PRAGMATIC)

QUESTION_KINDS = ("polar", "wh-all", "free-text")


class ModelError(ValueError):
    """A modelling failure: no admissible answer, inconsistent response, ..."""


@dataclass(frozen=True)
class WorldState:
    """Which options exist. ``description`` is the natural-language context
    LLM-backed evaluators see for this world."""

    available_options: frozenset
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "available_options", frozenset(self.available_options))

    def __contains__(self, option: str) -> bool:
        return option in self.available_options


@dataclass(frozen=True)
class Question:
    text: str
    kind: str = "polar"
    queried_option: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in QUESTION_KINDS:
            raise ValueError(f"unknown question kind {self.kind!r}")
        if self.kind == "polar" and not self.queried_option:
            raise ValueError("polar questions need exactly one queried option")
        if self.kind != "polar" and self.queried_option is not None:
            raise ValueError(f"{self.kind} questions carry no queried option")


@dataclass(frozen=True)
class Response:
    """An answer. ``mentioned_options`` are the alternatives the answer
    asserts to exist; the queried item is covered by ``polar_part``.
    ``exhaustive`` marks answers that claim to list everything available."""

    text: str
    polar_part: str | None = None
    mentioned_options: frozenset = frozenset()
    exhaustive: bool = False

    def __post_init__(self) -> None:
        if self.polar_part not in (None, YES, NO):
            raise ValueError(f"polar_part must be yes/no/None, got {self.polar_part!r}")
        object.__setattr__(self, "mentioned_options", frozenset(self.mentioned_options))


class SemanticEvaluator(Protocol):
    def is_true_and_safe(
        self, world: WorldState, question: Question, response: Response, mode: str
    ) -> bool: ...


@dataclass(frozen=True)
class DecisionProblem:
    """The questioner's goal: worlds, options, utilities[world][option] and a
    prior over worlds."""

    worlds: tuple
    options: tuple
    utilities: tuple
    world_prior: Distribution
    goal_label: str = ""

    def __post_init__(self) -> None:
        worlds = tuple(self.worlds)
        options = tuple(self.options)
        utilities = tuple(tuple(float(u) for u in row) for row in self.utilities)
        object.__setattr__(self, "worlds", worlds)
        object.__setattr__(self, "options", options)
        object.__setattr__(self, "utilities", utilities)
        if not worlds or not options:
            raise ValueError("decision problem needs worlds and options")
        if len(utilities) != len(worlds) or any(len(row) != len(options) for row in utilities):
            raise ValueError("utilities must be defined for every (world, option) pair")
        if not all(math.isfinite(u) for row in utilities for u in row):
            raise ValueError("utilities must be finite")
        if self.world_prior.support != worlds:
            raise ValueError("world_prior must be over the decision problem's worlds, in order")

    @cached_property
    def utility_matrix(self) -> np.ndarray:
        return np.array(self.utilities, dtype=float)

    @cached_property
    def prior_vector(self) -> np.ndarray:
        return np.array(self.world_prior.probs, dtype=float)

    def with_prior(self, probs: Sequence[float]) -> "DecisionProblem":
        return DecisionProblem(
            self.worlds, self.options, self.utilities,
            Distribution(self.worlds, tuple(probs)), self.goal_label,
        )


@dataclass(frozen=True)
class AgentParams:
    alpha_questioner: float = 5.0
    alpha_respondent: float = 5.0
    # rationality of the action policy inside a decision problem's value
    alpha_policy: float = 0.06
    lambda_info: float = 0.3
    cost_response: Mapping = field(default_factory=dict)
    cost_question: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("alpha_questioner", "alpha_respondent", "alpha_policy"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite")
        if not 0.0 <= self.lambda_info <= 1.0:
            raise ValueError("lambda_info must lie in [0, 1]")
        for costs in (self.cost_response, self.cost_question):
            if any(c < 0 for c in costs.values()):
                raise ValueError("costs must be non-negative")

    def response_cost(self, response: Response) -> float:
        return float(self.cost_response.get(response, 0.0))

    def question_cost(self, question: Question) -> float:
        return float(self.cost_question.get(question, 0.0))


def availability_worlds(
    universe: Sequence[str], describe: Callable[[frozenset], str] | None = None
) -> tuple:
    """Every subset of ``universe`` as a world, smallest subsets first."""
    worlds = []
    for k in range(len(universe) + 1):
        for subset in itertools.combinations(universe, k):
            opts = frozenset(subset)
            worlds.append(WorldState(opts, describe(opts) if describe else ""))
    return tuple(worlds)


def availability_dp(
    universe: Sequence[str],
    ratings: Mapping[str, float],
    goal_label: str = "",
    worlds: Sequence[WorldState] | None = None,
) -> DecisionProblem:
    """Decision problem over which options exist, with a flat world prior.

    Choosing an option that is available in a world earns its rating;
    choosing an absent one earns nothing.
    """
    worlds = tuple(worlds) if worlds is not None else availability_worlds(universe)
    options = tuple(universe)
    utilities = tuple(
        tuple(float(ratings[a]) if a in w else 0.0 for a in options) for w in worlds
    )
    return DecisionProblem(worlds, options, utilities, Distribution.uniform(worlds), goal_label)


def dp_value(dp: DecisionProblem, alpha: float) -> float:
    """Expected utility of the soft-max (rationality ``alpha``) policy that
    chooses options by their prior expected utility."""
    return float(kernels.dp_value(dp.utility_matrix, dp.prior_vector, alpha))


def truth_mask(
    dp: DecisionProblem, question: Question, response: Response,
    semantics: SemanticEvaluator, mode: str = PRAGMATIC,
) -> np.ndarray:
    return np.array(
        [semantics.is_true_and_safe(w, question, response, mode) for w in dp.worlds], dtype=bool
    )


def updated_dp(
    dp: DecisionProblem, question: Question, response: Response,
    semantics: SemanticEvaluator, mode: str = PRAGMATIC,
) -> DecisionProblem:
    """Condition the world prior on the worlds where ``response`` is true."""
    mask = truth_mask(dp, question, response, semantics, mode)
    post = np.where(mask, dp.prior_vector, 0.0)
    total = post.sum()
    if total <= 0:
        raise ModelError("response inconsistent with all worlds")
    return dp.with_prior(post / total)


def literal_candidates(question: Question, universe: Sequence[str]) -> tuple:
    """The literal answers a base-level respondent chooses among.

    Polar (and free-text) questions get bare yes/no. A wh-question gets the
    mention-some answers "We have X." plus an exhaustive "none" answer for
    the empty world.
    """
    if question.kind == "wh-all":
        some = tuple(Response(f"We have {x}.", None, frozenset({x})) for x in universe)
        return some + (Response("We have none of these.", None, frozenset(), exhaustive=True),)
    return (Response(YES, YES), Response(NO, NO))


def base_respondent(
    question: Question, world: WorldState, semantics: SemanticEvaluator,
    candidates: Sequence[Response],
) -> Distribution:
    """Uniform over the candidates that are true in ``world`` and safe."""
    survivors = [r for r in candidates if semantics.is_true_and_safe(world, question, r, BASE)]
    if not survivors:
        raise ModelError(f"no true safe response to {question.text!r}")
    return Distribution.uniform(survivors)


class LiteralRespondent:
    """Base-level respondent bound to a semantics and an option universe."""

    def __init__(self, semantics: SemanticEvaluator, universe: Sequence[str]):
        self.semantics = semantics
        self.universe = tuple(universe)
        self._memo: dict = {}

    def candidates(self, question: Question) -> tuple:
        return literal_candidates(question, self.universe)

    def __call__(self, question: Question, world: WorldState) -> Distribution:
        key = (question, world)
        if key not in self._memo:
            self._memo[key] = base_respondent(question, world, self.semantics, self.candidates(question))
        return self._memo[key]


def _unique(items: Iterable) -> list:
    seen: list = []
    for x in items:
        if x not in seen:
            seen.append(x)
    return seen


def questioner_scores(
    dp: DecisionProblem, questions: Sequence[Question],
    respondent: Callable[[Question, WorldState], Distribution], params: AgentParams,
) -> np.ndarray:
    """Expected post-answer value of each question, net of costs."""
    U, prior = dp.utility_matrix, dp.prior_vector
    scores = np.empty(len(questions))
    for i, q in enumerate(questions):
        answers = [respondent(q, w) for w in dp.worlds]
        responses = _unique(r for a in answers for r in a.support)
        # Bayes with the base-level respondent: worlds where r is admissible
        masks = np.array(
            [[r in set(a.support) for a in answers] for r in responses], dtype=np.uint8
        )
        values, _, _ = kernels.conditioned_values(U, prior, masks, params.alpha_policy)
        net = {r: values[j] - params.response_cost(r) for j, r in enumerate(responses)}
        total = 0.0
        for w_idx, a in enumerate(answers):
            if prior[w_idx] == 0.0:
                continue
            total += prior[w_idx] * sum(p * net[r] for r, p in a)
        scores[i] = total - params.question_cost(q)
    return scores


def pragmatic_questioner(
    dp: DecisionProblem, questions: Sequence[Question],
    respondent: Callable[[Question, WorldState], Distribution], params: AgentParams,
) -> Distribution:
    """Q(q | D): soft-max over expected decision-problem values."""
    if not questions:
        raise ModelError("empty choice set")
    scores = questioner_scores(dp, questions, respondent, params)
    return softmax(scores, params.alpha_questioner, support=questions)


def _log_softmax(scores: np.ndarray, alpha: float) -> np.ndarray:
    z = alpha * (scores - scores.max())
    return z - np.log(np.exp(z).sum())


class EnumerationQuestioner:
    """Likelihood source ``log Q(q | D)`` computed by exact enumeration.

    ``alternatives`` gives the question set a decision problem's questioner
    chooses from: a fixed list, a mapping keyed by decision problem, or a
    callable.
    """

    def __init__(self, respondent, params: AgentParams, alternatives):
        self.respondent = respondent
        self.params = params
        self._alternatives = alternatives
        self._memo: dict = {}

    def alternatives(self, dp: DecisionProblem) -> list:
        alts = self._alternatives
        if callable(alts):
            return list(alts(dp))
        if isinstance(alts, Mapping):
            return list(alts[dp])
        return list(alts)

    def distribution(self, dp: DecisionProblem) -> Distribution:
        return pragmatic_questioner(dp, self.alternatives(dp), self.respondent, self.params)

    def log_likelihood(self, dp: DecisionProblem, question: Question) -> float:
        if dp not in self._memo:
            questions = self.alternatives(dp)
            scores = questioner_scores(dp, questions, self.respondent, self.params)
            self._memo[dp] = (questions, _log_softmax(scores, self.params.alpha_questioner))
        questions, logp = self._memo[dp]
        if question not in questions:
            raise ModelError(f"question {question.text!r} is not among the questioner's alternatives")
        return float(logp[questions.index(question)])


def _log_likelihood(questioner, dp: DecisionProblem, question: Question) -> float:
    if hasattr(questioner, "log_likelihood"):
        return float(questioner.log_likelihood(dp, question))
    p = float(questioner(dp, question))
    if p < 0 or not math.isfinite(p):
        raise ModelError(f"invalid likelihood {p!r}")
    return math.log(p) if p > 0 else -math.inf


def infer_dp(
    question: Question, dps: Sequence[DecisionProblem],
    dp_prior: Distribution | None, questioner,
) -> Distribution:
    """Posterior over decision problems: ``∝ Q(q | D) · prior(D)``.

    ``questioner`` is an object with ``log_likelihood(dp, question)`` or a
    plain callable returning the probability ``Q(q | D)``.
    """
    dps = tuple(dps)
    if dp_prior is None:
        dp_prior = Distribution.uniform(dps)
    if dp_prior.support != dps:
        raise ValueError("dp_prior must be over dps, in order")
    logpost = np.full(len(dps), -np.inf)
    for i, (dp, p) in enumerate(dp_prior):
        if p > 0:
            logpost[i] = _log_likelihood(questioner, dp, question) + math.log(p)
    if not np.any(np.isfinite(logpost)):
        raise ModelError("question unexplainable under all goals")
    w = np.exp(logpost - logpost[np.isfinite(logpost)].max())
    return Distribution(dps, tuple(w / w.sum()))


def respondent_utilities(
    question: Question, responses: Sequence[Response], dp_posterior: Distribution,
    semantics: SemanticEvaluator, params: AgentParams,
) -> np.ndarray:
    """Utility of each response: informativity (KL of the questioner's world
    beliefs after vs. before, in bits) mixed with the value of the updated
    decision problem, averaged over the decision-problem posterior."""
    util = np.zeros(len(responses))
    masks_by_worlds: dict = {}
    lam = params.lambda_info
    for dp, weight in dp_posterior:
        if weight == 0.0:
            continue
        if dp.worlds not in masks_by_worlds:
            masks_by_worlds[dp.worlds] = np.array(
                [truth_mask(dp, question, r, semantics, PRAGMATIC) for r in responses], dtype=np.uint8
            )
        masks = masks_by_worlds[dp.worlds]
        values, kls, mass = kernels.conditioned_values(
            dp.utility_matrix, dp.prior_vector, masks, params.alpha_policy
        )
        if np.any(mass <= 0):
            bad = responses[int(np.argmax(mass <= 0))]
            raise ModelError(f"response inconsistent with all worlds: {bad.text!r}")
        util += weight * (lam * kls + (1.0 - lam) * values)
    util -= np.array([params.response_cost(r) for r in responses])
    return util


def pragmatic_respondent(
    question: Question, responses: Sequence[Response], dp_posterior: Distribution,
    semantics: SemanticEvaluator, params: AgentParams, world: WorldState,
) -> Distribution:
    """R1(r | q): soft-max over the responses that are true in ``world``."""
    candidates = _unique(responses)
    admissible = [r for r in candidates if semantics.is_true_and_safe(world, question, r, PRAGMATIC)]
    if not admissible:
        raise ModelError("no admissible response")
    util = respondent_utilities(question, admissible, dp_posterior, semantics, params)
    return Distribution(tuple(admissible), tuple(softmax_probs(util, params.alpha_respondent)))
