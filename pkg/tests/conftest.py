from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pragqa.corpus import load_vignettes  # noqa: E402
from pragqa.modules import SymbolicSemantics  # noqa: E402


@pytest.fixture(scope="session")
def corpus():
    return load_vignettes()


@pytest.fixture(scope="session")
def cafe(corpus):
    return next(v for v in corpus if v.id == "cafe")


@pytest.fixture()
def cafe_semantics(cafe):
    return SymbolicSemantics(cafe.universe)


# --- acceptance summary --------------------------------------------------------------

ACCEPTANCE: list[tuple[str, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, line in sorted(ACCEPTANCE, key=lambda t: int(t[0])):
        terminalreporter.write_line(f"[{status}] criterion {number}: {line}")
