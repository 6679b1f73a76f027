from __future__ import annotations

import json

import pytest

from pragqa.categorize import CATEGORIES
from pragqa.corpus import (
    CorpusError,
    bundled_path,
    canonical_json,
    human_reference,
    load_vignettes,
    parse_vignettes,
)
from pragqa.model import NO, Response
from pragqa.modules import SymbolicSemantics
from pragqa.model import PRAGMATIC


def _raw():
    return json.loads(bundled_path().read_text(encoding="utf-8"))


def test_bundled_corpus(corpus, cafe):
    assert len(corpus) >= 5
    assert cafe.target == "iced tea"
    assert (cafe.competitor, cafe.similar, cafe.unrelated) == ("iced coffee", "soda", "Chardonnay")
    assert all(v.source == "bundled" for v in corpus)


def test_round_trip_is_canonical(corpus):
    raw = _raw()
    assert json.loads(canonical_json(corpus)) == raw
    assert canonical_json(parse_vignettes(json.loads(canonical_json(corpus)), "bundled")) == canonical_json(corpus)


def test_target_question_answered_no(corpus):
    for v in corpus:
        sem = SymbolicSemantics(v.universe)
        assert sem.is_true_and_safe(v.actual_world(), v.question, Response("no", NO), PRAGMATIC)


def test_two_competitors_rejected():
    raw = _raw()
    raw[0]["options"][1]["role"] = "competitor"
    with pytest.raises(CorpusError) as exc:
        parse_vignettes(raw)
    assert any("[0].options" in d and "competitor" in d for d in exc.value.diagnostics)


@pytest.mark.parametrize("mutate, needle", [
    (lambda r: r[0].update(target="soda"), "must not be among"),
    (lambda r: r[1].update(id="cafe"), "duplicate id"),
    (lambda r: r[0]["options"][2].update(name="Soda"), "distinct"),
    (lambda r: r[0].pop("question"), "question"),
    (lambda r: r[0].update(id="Not A Slug"), "[0].id"),
    (lambda r: r[0]["options"].pop(), "[0].options"),
    (lambda r: r[0].update(extra=1), "extra"),
])
def test_invariant_violations(mutate, needle):
    raw = _raw()
    mutate(raw)
    with pytest.raises(CorpusError) as exc:
        parse_vignettes(raw)
    assert needle in str(exc.value)


def test_empty_and_malformed_files(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    with pytest.raises(CorpusError, match="empty file"):
        load_vignettes(empty)
    bad = tmp_path / "bad.json"
    bad.write_text('[\n  {"id": }\n]')
    with pytest.raises(CorpusError, match=r"bad.json:2:"):
        load_vignettes(bad)


def test_external_source(tmp_path):
    raw = _raw()[:1]
    for item in raw:
        item.pop("source")
    p = tmp_path / "c.json"
    p.write_text(json.dumps(raw))
    assert load_vignettes(p)[0].source == "external"


def test_human_reference():
    ref = human_reference()
    assert set(ref.proportions) == set(CATEGORIES)
    assert abs(sum(ref.proportions.values()) - 1.0) <= 0.02
    assert ref.vector() == [0.20, 0.52, 0.18, 0.00, 0.10]
    assert human_reference().proportions == ref.proportions
