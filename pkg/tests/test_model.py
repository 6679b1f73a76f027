from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from toys import TableSemantics, make_toy, oracle_args
from pragqa.distribution import Distribution
from pragqa.model import (
    BASE,
    NO,
    PRAGMATIC,
    YES,
    AgentParams,
    DecisionProblem,
    EnumerationQuestioner,
    LiteralRespondent,
    ModelError,
    Question,
    Response,
    WorldState,
    availability_dp,
    availability_worlds,
    base_respondent,
    dp_value,
    infer_dp,
    literal_candidates,
    pragmatic_questioner,
    pragmatic_respondent,
    updated_dp,
)

YES_R, NO_R = Response(YES, YES), Response(NO, NO)


def one_world_dp(us, label=""):
    w = WorldState(frozenset(), "only")
    return DecisionProblem((w,), tuple(f"a{i}" for i in range(len(us))), (tuple(us),),
                           Distribution.point(w), label)


# --- types -----------------------------------------------------------------------

def test_question_invariants():
    with pytest.raises(ValueError):
        Question("Do you have it?", "polar")
    with pytest.raises(ValueError):
        Question("What?", "wh-all", "x")
    with pytest.raises(ValueError):
        Question("x", "rhetorical")


def test_dp_invariants():
    w = WorldState(frozenset({"a"}))
    prior = Distribution.point(w)
    with pytest.raises(ValueError):
        DecisionProblem((w,), ("a", "b"), ((1.0,),), prior)
    with pytest.raises(ValueError):
        DecisionProblem((w,), ("a",), ((math.inf,),), prior)
    with pytest.raises(ValueError):
        DecisionProblem((w,), ("a",), ((1.0,),), Distribution.point("other"))


def test_agent_params_invariants():
    with pytest.raises(ValueError):
        AgentParams(alpha_questioner=0)
    with pytest.raises(ValueError):
        AgentParams(lambda_info=1.5)
    with pytest.raises(ValueError):
        AgentParams(cost_response={YES_R: -1.0})
    assert AgentParams().response_cost(YES_R) == 0.0


# --- base-level respondent -------------------------------------------------------------

def test_base_respondent_target_absent(cafe, cafe_semantics):
    d = base_respondent(cafe.question, cafe.actual_world(), cafe_semantics, literal_candidates(cafe.question, cafe.universe))
    assert d.as_dict() == {NO_R: 1.0}


def test_base_respondent_option_present(cafe_semantics):
    q = Question("Do you have soda?", "polar", "soda")
    d = base_respondent(q, WorldState(frozenset({"soda"})), cafe_semantics, [YES_R, NO_R])
    assert d.as_dict() == {YES_R: 1.0}


def test_base_respondent_uniform_over_survivors():
    w = WorldState(frozenset(), "w")
    q = Question("q", "free-text")
    sem = TableSemantics({("w", "q", YES, BASE): True, ("w", "q", NO, BASE): True})
    assert base_respondent(q, w, sem, [YES_R, NO_R]).probs == (0.5, 0.5)


def test_base_respondent_no_survivor():
    w = WorldState(frozenset(), "w")
    q = Question("q", "free-text")
    sem = TableSemantics({("w", "q", YES, BASE): False, ("w", "q", NO, BASE): False})
    with pytest.raises(ModelError, match="no true safe response"):
        base_respondent(q, w, sem, [YES_R, NO_R])


def test_wh_literal_candidates_are_mention_some(cafe, cafe_semantics):
    q = Question("What do you have?", "wh-all")
    lit = LiteralRespondent(cafe_semantics, cafe.universe)
    d = lit(q, cafe.actual_world())
    assert len(d) == 3 and all(len(r.mentioned_options) == 1 for r in d.support)
    empty = lit(q, WorldState(frozenset()))
    assert [r.exhaustive for r in empty.support] == [True]


# --- value and updates --------------------------------------------------------------

def test_dp_value_examples():
    assert dp_value(one_world_dp([100, 0]), 1e4) == pytest.approx(100.0)
    assert dp_value(one_world_dp([50, 50]), 3.0) == pytest.approx(50.0)
    e = math.e
    assert dp_value(one_world_dp([1, 0]), 1.0) == pytest.approx(e / (1 + e), abs=1e-12)
    assert dp_value(one_world_dp([1, 0]), 1.0) == pytest.approx(0.731, abs=1e-3)


utils_st = st.lists(st.lists(st.floats(0, 100), min_size=1, max_size=4), min_size=1, max_size=3)


@given(utils_st, st.data())
def test_dp_value_matches_oracle_and_argmax_limit(rows, data):
    n_o = min(len(r) for r in rows)
    U = [r[:n_o] for r in rows]
    weights = data.draw(st.lists(st.floats(0.05, 1.0), min_size=len(U), max_size=len(U)))
    worlds = tuple(WorldState(frozenset(), f"w{i}") for i in range(len(U)))
    prior = Distribution.from_weights(worlds, weights)
    dp = DecisionProblem(worlds, tuple(range(n_o)), U, prior)
    alpha = data.draw(st.floats(0.001, 1.0))
    assert dp_value(dp, alpha) == pytest.approx(oracle.value(U, list(prior.probs), alpha), abs=1e-9)
    best = max(oracle.expected_utilities(U, list(prior.probs)))
    assert abs(dp_value(dp, 1e4) - best) <= 1e-3


def test_updated_dp_examples(cafe_semantics):
    tea = WorldState(frozenset({"iced tea"}), "tea")
    none = WorldState(frozenset(), "none")
    dp = availability_dp(["iced tea"], {"iced tea": 100}, worlds=(none, tea))
    q = Question("Do you have iced tea?", "polar", "iced tea")
    post = updated_dp(dp, q, NO_R, cafe_semantics)
    assert post.world_prior.probs == (1.0, 0.0)
    assert post.utilities == dp.utilities
    taut = Response("We have a menu.", None)
    assert updated_dp(dp, q, taut, cafe_semantics).world_prior == dp.world_prior


def test_updated_dp_bayes_by_hand():
    worlds = tuple(WorldState(frozenset(), f"w{i}") for i in range(3))
    dp = DecisionProblem(worlds, ("a",), ((1,), (2,), (3,)), Distribution(worlds, (0.5, 0.25, 0.25)))
    q = Question("q", "free-text")
    r = Response("r")
    sem = TableSemantics({(f"w{i}", "q", "r", PRAGMATIC): i > 0 for i in range(3)})
    assert updated_dp(dp, q, r, sem).world_prior.probs == (0.0, 0.5, 0.5)
    never = TableSemantics({(f"w{i}", "q", "r", PRAGMATIC): False for i in range(3)})
    with pytest.raises(ModelError, match="inconsistent with all worlds"):
        updated_dp(dp, q, r, never)


# --- questioner --------------------------------------------------------------------

def _polar_toy(bad=0):
    universe = ("good", "bad")
    worlds = availability_worlds(universe)
    from pragqa.modules import SymbolicSemantics
    sem = SymbolicSemantics(universe)
    dp = availability_dp(universe, {"good": 100, "bad": bad}, worlds=worlds)
    qs = [Question("Do you have good?", "polar", "good"), Question("Do you have bad?", "polar", "bad")]
    return dp, qs, LiteralRespondent(sem, universe)


def test_questioner_singleton_and_symmetry():
    dp, qs, lit = _polar_toy()
    assert pragmatic_questioner(dp, qs[:1], lit, AgentParams()).probs == (1.0,)
    flat = availability_dp(("good", "bad"), {"good": 0, "bad": 0}, worlds=dp.worlds)
    assert pragmatic_questioner(flat, qs, lit, AgentParams()).probs == pytest.approx((0.5, 0.5))
    with pytest.raises(ModelError, match="empty choice set"):
        pragmatic_questioner(dp, [], lit, AgentParams())


def test_questioner_prefers_high_utility_question():
    # asking about the better option: 0.5*100 + 0.5*(0.5*60) = 65 under argmax;
    # asking about the other one: 0.5*60 + 0.5*50 = 55
    dp, qs, lit = _polar_toy(bad=60)
    d = pragmatic_questioner(dp, qs, lit, AgentParams(alpha_questioner=50, alpha_policy=5.0))
    assert d[qs[0]] > 0.999
    scores = [
        sum(0.25 * oracle.value([list(r) for r in dp.utilities],
                                oracle.condition([0.25] * 4, [ans in lit(q, v).support for v in dp.worlds]), 5.0)
            for w in dp.worlds for ans in lit(q, w).support)
        for q in qs
    ]
    assert scores[0] == pytest.approx(65.0, abs=1e-6)
    assert scores[1] == pytest.approx(55.0, abs=1e-6)


def test_questioner_question_cost_shifts_mass():
    dp, qs, lit = _polar_toy()
    flat = availability_dp(("good", "bad"), {"good": 0, "bad": 0}, worlds=dp.worlds)
    d = pragmatic_questioner(flat, qs, lit, AgentParams(cost_question={qs[0]: 1.0}))
    assert d[qs[1]] > d[qs[0]]


@pytest.mark.parametrize("seed", range(40))
def test_agents_match_oracle(seed):
    rng = random.Random(seed)
    toy = make_toy(rng)
    truth, cands, odps = oracle_args(toy)
    p = toy.params
    qi = list(range(len(toy.questions)))
    for dp, (U, prior) in zip(toy.dps, odps):
        got = pragmatic_questioner(dp, toy.questions, toy.respondent, p).probs
        want = oracle.questioner(U, prior, qi, truth, cands, p.alpha_questioner, p.alpha_policy)
        assert np.max(np.abs(np.array(got) - want)) <= 1e-9
    observed = rng.randrange(len(toy.questions))
    Q = EnumerationQuestioner(toy.respondent, p, toy.questions)
    post = infer_dp(toy.questions[observed], toy.dps, None, Q)
    want_post = oracle.infer([observed] * len(odps), odps, [1 / len(odps)] * len(odps),
                             [qi] * len(odps), truth, cands, p.alpha_questioner, p.alpha_policy)
    assert np.max(np.abs(np.array(post.probs) - want_post)) <= 1e-9
    r1 = pragmatic_respondent(toy.questions[observed], toy.responses, post, toy.semantics, p,
                              toy.worlds[toy.actual])
    want_r1 = oracle.respondent(observed, [r.text for r in toy.responses], toy.actual, odps,
                                want_post, truth, p.alpha_respondent, p.alpha_policy, p.lambda_info)
    assert set(r.text for r in r1.support) == set(want_r1)
    for r, prob in r1:
        assert abs(prob - want_r1[r.text]) <= 1e-9


# --- DP inference --------------------------------------------------------------------

def test_infer_dp_examples():
    a, b = one_world_dp([1], "a"), one_world_dp([2], "b")
    q = Question("q", "free-text")
    lik = {a: 0.8, b: 0.2}
    post = infer_dp(q, [a, b], None, lambda dp, _: lik[dp])
    assert post.probs == pytest.approx((0.8, 0.2))
    post = infer_dp(q, [a, b], Distribution((a, b), (1.0, 0.0)), lambda dp, _: lik[dp])
    assert post.probs == (1.0, 0.0)
    lik = {a: 0.3, b: 0.1}
    post = infer_dp(q, [a, b], Distribution.uniform((a, b)), lambda dp, _: lik[dp])
    assert post.probs == pytest.approx((0.75, 0.25), abs=1e-12)
    with pytest.raises(ModelError, match="unexplainable"):
        infer_dp(q, [a, b], None, lambda dp, _: 0.0)


# --- pragmatic respondent -----------------------------------------------------------

def test_respondent_singleton_survivor(cafe, cafe_semantics):
    from pragqa.modules import canonical_responses
    dps = [availability_dp(cafe.universe, {x: 50 for x in cafe.universe}, worlds=cafe.worlds())]
    lie = Response("Yes, we have iced tea.", YES)
    only = canonical_responses(cafe)[1]
    d = pragmatic_respondent(cafe.question, [lie, only], Distribution.uniform(dps), cafe_semantics,
                             AgentParams(), cafe.actual_world())
    assert d.as_dict() == {only: 1.0}
    with pytest.raises(ModelError, match="no admissible response"):
        pragmatic_respondent(cafe.question, [lie], Distribution.uniform(dps), cafe_semantics,
                             AgentParams(), cafe.actual_world())


def test_respondent_relevance_picks_competitor():
    from pragqa.modules import SymbolicSemantics
    universe = ("target", "comp", "other")
    sem = SymbolicSemantics(universe)
    worlds = availability_worlds(universe)
    dp = availability_dp(universe, {"target": 100, "comp": 90, "other": 0}, worlds=worlds)
    q = Question("Do you have target?", "polar", "target")
    rs = [Response("No.", NO), Response("No, we have comp.", NO, {"comp"}),
          Response("No, we have other.", NO, {"other"})]
    d = pragmatic_respondent(q, rs, Distribution.point(dp), sem,
                             AgentParams(alpha_respondent=20, lambda_info=0.0, alpha_policy=0.2),
                             WorldState(frozenset({"comp", "other"})))
    assert d.argmax() is rs[1]
    # brute-force expected value check of that ranking
    U = [list(row) for row in dp.utilities]
    prior = list(dp.world_prior.probs)
    vals = []
    for r in rs:
        keep = [sem.is_true_and_safe(w, q, r, PRAGMATIC) for w in worlds]
        vals.append(oracle.value(U, oracle.condition(prior, keep), 0.2))
    assert int(np.argmax(vals)) == 1


@pytest.mark.parametrize("seed", range(10))
def test_scale_invariance(seed):
    rng = random.Random(1000 + seed)
    toy = make_toy(rng)
    k = rng.uniform(0.2, 5.0)
    p = toy.params
    p0 = AgentParams(p.alpha_questioner, p.alpha_respondent, p.alpha_policy, 0.0)
    pk = AgentParams(p.alpha_questioner / k, p.alpha_respondent / k, p.alpha_policy / k, 0.0)
    scaled = [DecisionProblem(d.worlds, d.options, [[u * k for u in row] for row in d.utilities],
                              d.world_prior, d.goal_label) for d in toy.dps]
    q = toy.questions[0]
    for d, s in zip(toy.dps, scaled):
        a = pragmatic_questioner(d, toy.questions, toy.respondent, p0).probs
        b = pragmatic_questioner(s, toy.questions, toy.respondent, pk).probs
        assert np.max(np.abs(np.array(a) - b)) <= 1e-9
    pa = infer_dp(q, toy.dps, None, EnumerationQuestioner(toy.respondent, p0, toy.questions))
    pb = infer_dp(q, scaled, None, EnumerationQuestioner(toy.respondent, pk, toy.questions))
    assert np.max(np.abs(np.array(pa.probs) - pb.probs)) <= 1e-9
    w = toy.worlds[toy.actual]
    ra = pragmatic_respondent(q, toy.responses, pa, toy.semantics, p0, w)
    rb = pragmatic_respondent(q, toy.responses, pb, toy.semantics, pk, w)
    assert np.max(np.abs(np.array(ra.probs) - rb.probs)) <= 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_agent_outputs_are_distributions(seed):
    toy = make_toy(random.Random(2000 + seed))
    Q = EnumerationQuestioner(toy.respondent, toy.params, toy.questions)
    for dp in toy.dps:
        d = Q.distribution(dp)
        assert abs(sum(d.probs) - 1) <= 1e-9 and min(d.probs) >= 0
    post = infer_dp(toy.questions[0], toy.dps, None, Q)
    r1 = pragmatic_respondent(toy.questions[0], toy.responses, post, toy.semantics, toy.params,
                              toy.worlds[toy.actual])
    for d in (post, r1):
        assert abs(sum(d.probs) - 1) <= 1e-9 and min(d.probs) >= 0
