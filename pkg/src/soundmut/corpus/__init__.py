"""The shipped fixture corpus and a synthetic program generator."""

from __future__ import annotations

from pathlib import Path

from soundmut.applang import Program, load_program
from soundmut.corpus.synthetic import SyntheticSpec, generate_corpus, generate_program

FIXTURES = Path(__file__).resolve().parent / "fixtures"

# fixtures built around unreachable code (dead branches, uncalled methods, unregistered classes)
DEAD_CODE_FIXTURES = ("dead_code", "lifecycle_basic", "static_receivers")
# (fixture, class) whose three lifecycle callbacks see each other's fields
COUNTING_FIXTURE = ("lifecycle_basic", "Main")


def fixture_names() -> list[str]:
    return sorted(d.name for d in FIXTURES.iterdir() if d.is_dir() and any(d.glob("*.al")))


def fixture_dir(name: str) -> Path:
    d = FIXTURES / name
    if not d.is_dir():
        raise KeyError(f"no fixture named {name!r}")
    return d


def load_fixture(name: str) -> Program:
    return load_program(fixture_dir(name))


__all__ = [
    "COUNTING_FIXTURE", "DEAD_CODE_FIXTURES", "FIXTURES", "SyntheticSpec", "fixture_dir",
    "fixture_names", "generate_corpus", "generate_program", "load_fixture",
]
