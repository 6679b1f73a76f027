"""Prompt templates shipped as package data, filled in a single regex pass."""
from __future__ import annotations

import hashlib
import re
from functools import lru_cache
from importlib import resources

TEMPLATE_NAMES = (
    "utility_evaluator",
    "base_semantics",
    "pragmatic_semantics",
    "response_proposer",
    "question_proposer",
    "goal_proposer",
    "questioner_with_goals",
    "questioner_without_goals",
    "one_shot_cot",
)

PLACEHOLDER = re.compile(r"\{([a-z_]+(?: \+ [a-z_]+)?)\}")


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown prompt template {name!r}")
    path = resources.files("pragqa").joinpath(f"prompts/{name}.txt")
    return path.read_bytes().decode("utf-8")


def placeholders(template: str) -> list[str]:
    return list(dict.fromkeys(PLACEHOLDER.findall(template)))


def fill(template: str, values: dict) -> str:
    """Substitute every placeholder at once; inserted text is never rescanned."""
    missing = [p for p in placeholders(template) if p not in values]
    if missing:
        raise KeyError(f"missing prompt values: {missing}")
    return PLACEHOLDER.sub(lambda m: str(values[m.group(1)]), template)


def render(name: str, **values) -> str:
    return fill(load_template(name), values)


def template_hashes() -> dict[str, str]:
    return {
        name: hashlib.sha256(load_template(name).encode("utf-8")).hexdigest()
        for name in TEMPLATE_NAMES
    }
