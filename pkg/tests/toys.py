"""Random small instances for oracle comparisons."""
from __future__ import annotations

import random
from dataclasses import dataclass

from pragqa.distribution import Distribution
from pragqa.model import (
    AgentParams,
    DecisionProblem,
    Question,
    Response,
    WorldState,
    base_respondent,
)


class TableSemantics:
    """Truth looked up in an explicit table keyed by (world, q, r, mode)."""

    def __init__(self, table):
        self.table = table

    def is_true_and_safe(self, world, question, response, mode):
        return self.table[(world.description, question.text, response.text, mode)]


@dataclass
class Toy:
    worlds: tuple
    questions: list
    candidates: dict
    responses: list
    semantics: TableSemantics
    dps: list
    actual: int
    params: AgentParams
    raw: dict

    def respondent(self, q, w):
        return base_respondent(q, w, self.semantics, self.candidates[q])

    def truth(self, w, q, r, mode):
        return self.raw[(w, q, r, mode)]


def make_toy(rng: random.Random, util_scale: float = 10.0) -> Toy:
    n_w = rng.randint(1, 3)
    n_o = rng.randint(1, 4)
    n_q = rng.randint(1, 4)
    n_r = rng.randint(1, 6)
    n_d = rng.randint(1, 3)
    worlds = tuple(WorldState(frozenset(), f"w{k}") for k in range(n_w))
    questions = [Question(f"q{j}", "free-text") for j in range(n_q)]
    candidates = {}
    table, raw = {}, {}
    for j, q in enumerate(questions):
        cands = [Response(f"q{j}-l{m}") for m in range(rng.randint(1, 3))]
        candidates[q] = cands
        for w in range(n_w):
            bits = [rng.random() < 0.5 for _ in cands]
            if not any(bits):
                bits[rng.randrange(len(cands))] = True
            for m, c in enumerate(cands):
                table[(f"w{w}", q.text, c.text, "base-level")] = bits[m]
                raw[(w, j, c.text, "base-level")] = bits[m]
    actual = rng.randrange(n_w)
    responses = [Response(f"r{k}") for k in range(n_r)]
    for j, q in enumerate(questions):
        truth = {(w, k): rng.random() < 0.6 for w in range(n_w) for k in range(n_r)}
        if not any(truth[(actual, k)] for k in range(n_r)):
            truth[(actual, rng.randrange(n_r))] = True
        for (w, k), t in truth.items():
            table[(f"w{w}", q.text, responses[k].text, "pragmatic")] = t
            raw[(w, j, responses[k].text, "pragmatic")] = t
    dps = []
    for d in range(n_d):
        U = [[rng.uniform(0, util_scale) for _ in range(n_o)] for _ in range(n_w)]
        weights = [rng.uniform(0.1, 1.0) for _ in range(n_w)]
        prior = Distribution.from_weights(worlds, weights)
        dps.append(DecisionProblem(worlds, tuple(f"o{i}" for i in range(n_o)), U, prior, f"goal{d}"))
    params = AgentParams(
        alpha_questioner=rng.uniform(0.5, 5.0),
        alpha_respondent=rng.uniform(0.5, 5.0),
        alpha_policy=rng.uniform(0.1, 2.0),
        lambda_info=rng.uniform(0.0, 1.0),
    )
    return Toy(worlds, questions, candidates, responses, TableSemantics(table), dps, actual, params, raw)


def oracle_args(toy: Toy):
    """Translate a toy into the oracle's index-based tables."""
    qidx = {q: j for j, q in enumerate(toy.questions)}

    def truth(w, j, r, mode):
        return toy.raw[(w, j, r, mode)]

    cands = {j: [c.text for c in toy.candidates[q]] for q, j in qidx.items()}
    dps = [([list(row) for row in dp.utilities], list(dp.world_prior.probs)) for dp in toy.dps]
    return truth, cands, dps
