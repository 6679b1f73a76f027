"""Named model variants as bindings of the pluggable slots, and their runner.

Every variant except the chain-of-thought one runs the same pipeline:

    goals -> decision problems -> question likelihoods -> DP posterior
          -> candidate responses -> pragmatic respondent -> categories

and differs only in which implementation fills each slot.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Mapping, Sequence

from .categorize import CATEGORIES, ResponseCategory, categorize, categorize_detailed
from .corpus import Vignette
from .distribution import Distribution
from .llm.client import LLMClient, LLMConfig, LLMError, OfflineCacheMiss
from .model import (
    AgentParams,
    DecisionProblem,
    EnumerationQuestioner,
    LiteralRespondent,
    ModelError,
    PRAGMATIC,
    Question,
    Response,
    availability_dp,
    infer_dp,
    pragmatic_respondent,
)
from .modules import (
    Goal,
    SymbolicGoalProposer,
    SymbolicQuestionProposer,
    SymbolicResponseProposer,
    SymbolicSemantics,
    TableUtilityEvaluator,
    UtilityTable,
    load_utility_table,
    normalize_text,
)

log = logging.getLogger(__name__)

SYMBOLIC = "symbolic"
LLM = "llm"
SLOTS = ("base_semantics", "pragmatic_semantics", "utilities", "goals", "proposals", "questioner")
QUESTIONERS = ("enumeration", "sampled", "prompted-goals", "prompted-nogoals")
NORMALIZATIONS = ("per-dp", "joint")
COT = "one-shot-cot"


def _b(base, prag, util, goals, props, questioner="enumeration") -> dict:
    return dict(zip(SLOTS, (base, prag, util, goals, props, questioner)))


S, L = SYMBOLIC, LLM
BINDINGS: dict[str, dict] = {
    "pcm": _b(S, S, S, S, S),
    "llm-utilities": _b(S, S, L, S, S),
    "llm-semantics": _b(L, L, S, S, S),
    "llm-semantics-utilities": _b(L, L, L, S, S),
    "llm-base-semantics-utilities": _b(L, S, L, S, S),
    "llm-semantics-utilities-dps": _b(L, L, L, L, S),
    "full-nesy": _b(L, L, L, L, L, "sampled"),
    "prompted-questioner-goals": _b(L, L, L, L, L, "prompted-goals"),
    "prompted-questioner-nogoals": _b(L, L, L, L, L, "prompted-nogoals"),
}
del S, L

VARIANTS = tuple(BINDINGS) + (COT,)
ALL_SYMBOLIC = _b(SYMBOLIC, SYMBOLIC, SYMBOLIC, SYMBOLIC, SYMBOLIC)


class ConfigError(ValueError):
    """An unknown variant, slot, binding, or out-of-range setting."""


class PipelineError(RuntimeError):
    def __init__(self, vignette: str, iteration: int, stage: str, cause: BaseException):
        super().__init__(f"{vignette} (iteration {iteration}) at {stage}: {type(cause).__name__}: {cause}")
        self.vignette = vignette
        self.iteration = iteration
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "pcm"
    agent_params: AgentParams = field(default_factory=AgentParams)
    n_response_proposals: int = 10
    n_question_proposals: int = 3
    n_goal_proposals: int = 4
    iterations: int = 5
    seed: int = 0
    llm: LLMConfig = field(default_factory=LLMConfig)
    normalization: str = "per-dp"
    overrides: Mapping = field(default_factory=dict)
    max_failure_rate: float = 0.5

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {', '.join(VARIANTS)}")
        for name in ("n_response_proposals", "n_question_proposals", "n_goal_proposals", "iterations"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")
        if not 0.0 <= self.max_failure_rate <= 1.0:
            raise ConfigError("max_failure_rate must lie in [0, 1]")
        if self.variant == COT and self.overrides:
            raise ConfigError("the chain-of-thought variant has no slots to override")
        for slot, value in self.overrides.items():
            if slot not in SLOTS:
                raise ConfigError(f"unknown slot {slot!r}")
            allowed = QUESTIONERS if slot == "questioner" else (SYMBOLIC, LLM)
            if value not in allowed:
                raise ConfigError(f"slot {slot!r} cannot be bound to {value!r}")
        if self.agent_params.cost_response or self.agent_params.cost_question:
            log.debug("non-zero utterance costs configured")

    @property
    def bindings(self) -> dict:
        if self.variant == COT:
            return {}
        return {**BINDINGS[self.variant], **dict(self.overrides)}

    @property
    def uses_llm(self) -> bool:
        if self.variant == COT:
            return True
        return any(v not in (SYMBOLIC, "enumeration") for v in self.bindings.values())

    def to_json(self) -> dict:
        p = self.agent_params
        return {
            "variant": self.variant,
            "bindings": self.bindings,
            "agent_params": {
                "alpha_questioner": p.alpha_questioner,
                "alpha_respondent": p.alpha_respondent,
                "alpha_policy": p.alpha_policy,
                "lambda_info": p.lambda_info,
            },
            "n_response_proposals": self.n_response_proposals,
            "n_question_proposals": self.n_question_proposals,
            "n_goal_proposals": self.n_goal_proposals,
            "iterations": self.iterations,
            "seed": self.seed,
            "normalization": self.normalization,
            "overrides": dict(self.overrides),
            "max_failure_rate": self.max_failure_rate,
            "llm": self.llm.to_json(),
        }

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ModelConfig":
        """Build from a plain mapping (e.g. a JSON config file)."""
        data = dict(data)
        data.pop("bindings", None)
        param_names = {f.name for f in fields(AgentParams)} - {"cost_response", "cost_question"}
        params = dict(data.pop("agent_params", {}) or {})
        for name in list(data):
            if name in param_names:
                params[name] = data.pop(name)
        llm = dict(data.pop("llm", {}) or {})
        known = {f.name for f in fields(cls)} - {"agent_params", "llm"}
        unknown = set(data) - known | (set(params) - param_names)
        llm_known = {f.name for f in fields(LLMConfig)}
        unknown |= {f"llm.{k}" for k in set(llm) - llm_known}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(agent_params=AgentParams(**params), llm=LLMConfig(**llm), **data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **bindings) -> "ModelConfig":
        return replace(self, overrides={**dict(self.overrides), **bindings})


def degenerate(config: ModelConfig) -> ModelConfig:
    """The same variant with every slot bound symbolically."""
    return replace(config, overrides=dict(ALL_SYMBOLIC))


# --- question likelihood sources ----------------------------------------------------

def estimate_question_likelihood(
    goal: Goal, question: Question, proposer, n: int, vignette: Vignette
) -> float:
    """Add-one smoothed share of ``n`` proposer samples matching ``question``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    samples = list(proposer.sample(goal, vignette, n))[:n]
    target = normalize_text(question.text)
    hits = sum(normalize_text(q.text) == target for q in samples)
    return (hits + 1) / (n + 2)


class SampledQuestioner:
    """Q(q | D) approximated from question-proposer samples for D's goal."""

    def __init__(self, goals: Mapping, proposer, n: int, vignette: Vignette):
        self.goals = goals
        self.proposer = proposer
        self.n = n
        self.vignette = vignette

    def __call__(self, dp: DecisionProblem, question: Question) -> float:
        return estimate_question_likelihood(self.goals[dp], question, self.proposer, self.n, self.vignette)


class PromptedQuestioner:
    """Q(q | D) from elicited likelihood scores.

    ``per-dp`` normalizes over each DP's question alternatives; ``joint``
    normalizes over the whole question x DP grid.
    """

    def __init__(
        self, scorer, goals: Mapping, alternatives: Mapping, vignette: Vignette,
        with_goals: bool, normalization: str = "per-dp",
    ):
        if normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {normalization!r}")
        self.scorer = scorer
        self.goals = goals
        self.alternatives = alternatives
        self.vignette = vignette
        self.with_goals = with_goals
        self.normalization = normalization
        self._totals: dict = {}

    def _score(self, dp: DecisionProblem, question: Question) -> float:
        goal = self.goals[dp] if self.with_goals else None
        return float(self.scorer.score(goal, self.vignette, question))

    def _total(self, dp: DecisionProblem | None) -> float:
        if dp not in self._totals:
            dps = list(self.alternatives) if dp is None else [dp]
            self._totals[dp] = math.fsum(self._score(d, q) for d in dps for q in self.alternatives[d])
        return self._totals[dp]

    def __call__(self, dp: DecisionProblem, question: Question) -> float:
        if question not in self.alternatives[dp]:
            raise ModelError(f"question {question.text!r} is not among the alternatives")
        total = self._total(dp if self.normalization == "per-dp" else None)
        return self._score(dp, question) / total if total > 0 else 0.0


# --- module binding ----------------------------------------------------------------

@dataclass
class Modules:
    base_semantics: object
    pragmatic_semantics: object
    utilities: object
    goals: object
    responses: object
    questions: object
    likelihood: object | None = None


def bind_modules(
    config: ModelConfig, vignette: Vignette, iteration: int,
    client: LLMClient | None, table: UtilityTable,
) -> Modules:
    from .llm import modules as lm

    b = config.bindings
    need_llm = config.uses_llm
    if need_llm and client is None:
        raise ConfigError(f"variant {config.variant!r} needs an LLM client")
    sym_sem = SymbolicSemantics(vignette.universe)
    llm_sem = lm.LLMSemantics(client, iteration) if need_llm else None
    likelihood = None
    if b["questioner"].startswith("prompted"):
        likelihood = lm.LLMQuestionLikelihood(client, iteration, with_goals=b["questioner"] == "prompted-goals")
    return Modules(
        base_semantics=llm_sem if b["base_semantics"] == LLM else sym_sem,
        pragmatic_semantics=llm_sem if b["pragmatic_semantics"] == LLM else sym_sem,
        utilities=lm.LLMUtilityEvaluator(client, iteration) if b["utilities"] == LLM else TableUtilityEvaluator(table),
        goals=lm.LLMGoalProposer(client, iteration) if b["goals"] == LLM else SymbolicGoalProposer(),
        responses=lm.LLMResponseProposer(client, iteration) if b["proposals"] == LLM else SymbolicResponseProposer(),
        questions=lm.LLMQuestionProposer(client, iteration) if b["proposals"] == LLM else SymbolicQuestionProposer(),
        likelihood=likelihood,
    )


# --- pipeline ----------------------------------------------------------------------

class _Stage:
    def __init__(self, vignette: Vignette, iteration: int):
        self.vignette = vignette.id
        self.iteration = iteration
        self.name = "setup"

    def __call__(self, name: str) -> "_Stage":
        self.name = name
        return self


def answerable(question: Question, worlds: Sequence, respondent: LiteralRespondent) -> bool:
    """True iff the base-level respondent has an answer in every world."""
    try:
        for w in worlds:
            respondent(question, w)
    except ModelError:
        return False
    return True


@dataclass(frozen=True)
class IterationOutcome:
    proportions: dict
    partial_mention: float = 0.0
    unclassified: int = 0
    dropped_questions: int = 0
    dropped_responses: int = 0


def category_distribution(dist: Distribution, vignette: Vignette) -> tuple[dict, float]:
    """Sum response probabilities by category; also the partial-mention mass."""
    props = {c: 0.0 for c in CATEGORIES}
    partial = 0.0
    unclassified = 0.0
    for r, p in dist:
        cat = categorize_detailed(r.text, vignette)
        if cat.category == ResponseCategory.UNCLASSIFIED:
            unclassified += p
            continue
        props[cat.category] += p
        if cat.partial_mention:
            partial += p
    total = math.fsum(props.values())
    if total <= 0:
        raise ModelError("all response mass is unclassified")
    return {c: v / total for c, v in props.items()}, partial


def run_pipeline(
    config: ModelConfig, vignette: Vignette, modules: Modules, stage: _Stage
) -> IterationOutcome:
    params = config.agent_params
    b = config.bindings
    universe = vignette.universe
    worlds = vignette.worlds()

    stage("goals")
    goals = modules.goals.propose(vignette, config.n_goal_proposals)
    if not goals:
        raise ModelError("no goals proposed")

    stage("utilities")
    dps: list[DecisionProblem] = []
    goal_of: dict = {}
    for g in goals:
        ratings = {o: modules.utilities.rate(g, o) for o in universe}
        dp = availability_dp(universe, ratings, g.description, worlds)
        if dp in goal_of:
            continue
        goal_of[dp] = g
        dps.append(dp)

    stage("questions")
    literal = LiteralRespondent(modules.base_semantics, universe)
    alternatives: dict = {}
    dropped_q = 0
    ok_memo: dict = {}
    for dp in dps:
        keep = []
        for q in modules.questions.propose(goal_of[dp], vignette, config.n_question_proposals):
            if q not in ok_memo:
                ok_memo[q] = answerable(q, worlds, literal)
            if ok_memo[q]:
                keep.append(q)
            else:
                dropped_q += 1
        alternatives[dp] = keep

    stage("dp-inference")
    kind = b["questioner"]
    if kind == "enumeration":
        questioner = EnumerationQuestioner(literal, params, alternatives)
    elif kind == "sampled":
        questioner = SampledQuestioner(goal_of, modules.questions, config.n_question_proposals, vignette)
    else:
        questioner = PromptedQuestioner(
            modules.likelihood, goal_of, alternatives, vignette,
            with_goals=kind == "prompted-goals", normalization=config.normalization,
        )
    posterior = infer_dp(vignette.question, dps, None, questioner)

    stage("responses")
    proposed = modules.responses.propose(vignette, config.n_response_proposals)
    sem = modules.pragmatic_semantics
    question = vignette.question
    consistent = [
        r for r in proposed
        if any(sem.is_true_and_safe(w, question, r, PRAGMATIC) for w in worlds)
    ]

    stage("respondent")
    dist = pragmatic_respondent(question, consistent, posterior, sem, params, vignette.actual_world())
    props, partial = category_distribution(dist, vignette)
    return IterationOutcome(
        props, partial, 0, dropped_q, len(proposed) - len(consistent),
    )


def run_cot(vignette: Vignette, cot, stage: _Stage) -> IterationOutcome:
    stage("cot")
    reply = cot.answer(vignette)
    cat = categorize_detailed(reply, vignette)
    if cat.category == ResponseCategory.UNCLASSIFIED:
        return IterationOutcome({}, 0.0, 1)
    props = {c: float(c == cat.category) for c in CATEGORIES}
    return IterationOutcome(props, float(cat.partial_mention))


# --- runner ------------------------------------------------------------------------

@dataclass(frozen=True)
class IterationFailure:
    vignette: str
    iteration: int
    stage: str
    error: str
    offline_miss: bool = False


@dataclass
class VignetteResult:
    vignette: str
    proportions: dict
    iterations_ok: int
    partial_mention: float
    unclassified: int
    dropped_questions: int = 0
    dropped_responses: int = 0

    def vector(self) -> list[float]:
        return [self.proportions[c] for c in CATEGORIES]


@dataclass
class VariantResult:
    variant: str
    config: ModelConfig
    per_vignette: dict
    failures: list
    work_items: int
    missing_keys: list = field(default_factory=list)

    @property
    def failure_rate(self) -> float:
        return len(self.failures) / self.work_items if self.work_items else 0.0

    @property
    def vignette_ids(self) -> list[str]:
        return list(self.per_vignette)


def _work(config, vignette, iteration, client, table) -> IterationOutcome:
    from .llm.modules import LLMOneShotCoT

    stage = _Stage(vignette, iteration)
    try:
        if config.variant == COT:
            if client is None:
                raise ConfigError("the chain-of-thought variant needs an LLM client")
            return run_cot(vignette, LLMOneShotCoT(client, iteration), stage)
        modules = bind_modules(config, vignette, iteration, client, table)
        return run_pipeline(config, vignette, modules, stage)
    except ConfigError:
        raise
    except Exception as exc:  # noqa: BLE001 - annotated and re-raised
        raise PipelineError(vignette.id, iteration, stage.name, exc) from exc


def run_variant(
    config: ModelConfig, corpus: Sequence[Vignette], client: LLMClient | None = None,
    workers: int = 1, table: UtilityTable | None = None,
) -> VariantResult:
    """Run every (vignette, iteration) work item and average per vignette.

    Failed iterations are recorded and excluded. Purely symbolic
    configurations are deterministic, so one iteration stands for all.
    """
    table = table if table is not None else load_utility_table()
    if config.uses_llm and client is None:
        client = LLMClient(config.llm)
    n_iter = config.iterations if config.uses_llm else 1
    items = [(v, i) for v in corpus for i in range(n_iter)]

    def task(item):
        v, i = item
        try:
            return _work(config, v, i, client, table)
        except PipelineError as exc:
            return exc

    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(task, items))
    else:
        outcomes = [task(it) for it in items]

    failures: list[IterationFailure] = []
    per_vignette: dict = {}
    for v in corpus:
        ok: list[IterationOutcome] = []
        unclassified = 0
        for (vv, i), out in zip(items, outcomes):
            if vv is not v:
                continue
            if isinstance(out, PipelineError):
                offline = isinstance(out.cause, OfflineCacheMiss)
                (log.debug if offline else log.warning)("%s", out)
                failures.append(IterationFailure(
                    v.id, i, out.stage, f"{type(out.cause).__name__}: {out.cause}",
                    offline,
                ))
                continue
            unclassified += out.unclassified
            if out.proportions:
                ok.append(out)
        if not ok:
            continue
        props = {c: math.fsum(o.proportions[c] for o in ok) / len(ok) for c in CATEGORIES}
        per_vignette[v.id] = VignetteResult(
            v.id, props, len(ok) * (config.iterations // n_iter),
            math.fsum(o.partial_mention for o in ok) / len(ok), unclassified,
            sum(o.dropped_questions for o in ok), sum(o.dropped_responses for o in ok),
        )
    missing = [asdict(k) for k in client.missing_keys] if client is not None else []
    return VariantResult(config.variant, config, per_vignette, failures, len(items), missing)


def is_llm_error(failure: IterationFailure) -> bool:
    return failure.offline_miss or failure.error.split(":", 1)[0] in {
        "LLMError", "LLMConfigError", "LLMTransportError", "OfflineCacheMiss",
    }


def modal_category(result: VignetteResult) -> ResponseCategory:
    """Argmax with ties resolved in canonical order."""
    return max(CATEGORIES, key=lambda c: (result.proportions[c], -CATEGORIES.index(c)))


__all__ = [
    "BINDINGS", "COT", "ConfigError", "IterationFailure", "LLMError", "ModelConfig",
    "PipelineError", "PromptedQuestioner", "SLOTS", "SampledQuestioner", "VARIANTS",
    "VariantResult", "VignetteResult", "categorize", "degenerate",
    "estimate_question_likelihood", "modal_category", "run_variant",
]
