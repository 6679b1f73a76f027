"""Vignette schema, corpus loading and the human reference proportions."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import jsonschema

from .categorize import CATEGORIES, ResponseCategory
from .model import Question, WorldState, availability_worlds

ROLES = ("competitor", "similar", "unrelated")
BUNDLED = "bundled"


class CorpusError(ValueError):
    """Schema or invariant violation; ``diagnostics`` lists every problem."""

    def __init__(self, diagnostics: Sequence[str]):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


@dataclass(frozen=True)
class Option:
    role: str
    name: str


@dataclass(frozen=True)
class Vignette:
    id: str
    context: str
    question_text: str
    target: str
    options: tuple
    setting: str = ""
    source: str = BUNDLED

    def option(self, role: str) -> Option:
        return next(o for o in self.options if o.role == role)

    @property
    def competitor(self) -> str:
        return self.option("competitor").name

    @property
    def similar(self) -> str:
        return self.option("similar").name

    @property
    def unrelated(self) -> str:
        return self.option("unrelated").name

    @property
    def alternatives(self) -> tuple[str, str, str]:
        return (self.competitor, self.similar, self.unrelated)

    @property
    def universe(self) -> tuple[str, ...]:
        """Target first, then alternatives by relevance."""
        return (self.target,) + self.alternatives

    @property
    def question(self) -> Question:
        return Question(self.question_text, "polar", self.target)

    def describe_world(self, available: frozenset) -> str:
        items = [x for x in self.universe if x in available]
        lead = f"{self.setting} " if self.setting else ""
        if not items:
            return f"{lead}None of the items {_join(self.universe)} are available."
        return f"{lead}The only items available are: {_join(items)}."

    def actual_world(self) -> WorldState:
        return WorldState(frozenset(self.alternatives), self.context)

    def worlds(self) -> tuple:
        return availability_worlds(self.universe, self.describe_world)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "id": self.id,
            "context": self.context,
            "question": self.question_text,
            "target": self.target,
            "options": [{"role": o.role, "name": o.name} for o in self.options],
        }
        if self.setting:
            out["setting"] = self.setting
        out["source"] = self.source
        return out


def _join(items: Sequence[str]) -> str:
    items = list(items)
    if len(items) <= 2:
        return " and ".join(items)
    return ", ".join(items[:-1]) + ", and " + items[-1]


def schema() -> dict:
    return json.loads(resources.files("pragqa").joinpath("data/vignette.schema.json").read_text())


def _vignette_invariants(idx: int, item: dict) -> list[str]:
    where = f"[{idx}]"
    problems = []
    roles = [o["role"] for o in item["options"]]
    for role in ROLES:
        if roles.count(role) != 1:
            problems.append(f"{where}.options: expected exactly one {role!r} option, found {roles.count(role)}")
    names = [o["name"].casefold() for o in item["options"]]
    if item["target"].casefold() in names:
        problems.append(f"{where}.target: target {item['target']!r} must not be among the options")
    if len(set(names)) != len(names):
        problems.append(f"{where}.options: option names must be distinct")
    return problems


def parse_vignettes(data: Any, source: str = "external") -> list[Vignette]:
    """Validate decoded JSON against the schema and invariants."""
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        diags = []
        for e in errors:
            path = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
            diags.append(f"{path or '<root>'}: {e.message}")
        raise CorpusError(diags)
    problems: list[str] = []
    seen: dict[str, int] = {}
    for idx, item in enumerate(data):
        problems += _vignette_invariants(idx, item)
        if item["id"] in seen:
            problems.append(f"[{idx}].id: duplicate id {item['id']!r} (first at [{seen[item['id']]}])")
        seen.setdefault(item["id"], idx)
    if problems:
        raise CorpusError(problems)
    return [
        Vignette(
            id=item["id"],
            context=item["context"],
            question_text=item["question"],
            target=item["target"],
            options=tuple(Option(o["role"], o["name"]) for o in item["options"]),
            setting=item.get("setting", ""),
            source=item.get("source", source),
        )
        for item in data
    ]


def bundled_path() -> Path:
    return Path(str(resources.files("pragqa").joinpath("data/vignettes.json")))


def load_vignettes(path: str | Path = BUNDLED) -> list[Vignette]:
    """Load a corpus file; ``"bundled"`` selects the shipped desk corpus."""
    is_bundled = str(path) == BUNDLED
    p = bundled_path() if is_bundled else Path(path)
    text = p.read_text(encoding="utf-8")
    if not text.strip():
        raise CorpusError([f"{p}: empty file"])
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError([f"{p}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    return parse_vignettes(data, BUNDLED if is_bundled else "external")


def canonical_json(vignettes: Sequence[Vignette]) -> str:
    return json.dumps([v.to_json() for v in vignettes], indent=2, ensure_ascii=False) + "\n"


def corpus_hash(vignettes: Sequence[Vignette]) -> str:
    return hashlib.sha256(canonical_json(vignettes).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class HumanReference:
    proportions: dict

    def vector(self) -> list[float]:
        return [self.proportions[c] for c in CATEGORIES]


# Free-production answer proportions for the 30-item corpus (rounded).
_HUMAN = {
    ResponseCategory.NO_OPTIONS: 0.20,
    ResponseCategory.COMPETITOR: 0.52,
    ResponseCategory.SIMILAR: 0.18,
    ResponseCategory.UNRELATED: 0.00,
    ResponseCategory.ALL_OPTIONS: 0.10,
}


def human_reference() -> HumanReference:
    return HumanReference(dict(_HUMAN))
