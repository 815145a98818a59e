"""Shared fixtures: the shipped corpus, seeded once per session."""

from __future__ import annotations

import os
from dataclasses import dataclass

import pytest
from hypothesis import HealthCheck, settings

from soundmut.applang import Program, parse_program
from soundmut.corpus import fixture_names, load_fixture
from soundmut.detectors import DetectionReport, analyze, reference_configs
from soundmut.execengine import FilterResult, filter_executable
from soundmut.mutagen import DEFAULT_LEAK, SeedResult, parse_schemes, seed_all

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ALL_SCHEMES = "reach,complex,taint,scope"


@dataclass
class Seeded:
    name: str
    original: Program
    seed: SeedResult
    filtered: FilterResult
    reports: dict[str, DetectionReport]

    @property
    def program(self) -> Program:
        return self.seed.program

    @property
    def ledger(self):
        return self.seed.ledger


def seed_fixture(name: str, schemes: str = ALL_SCHEMES) -> Seeded:
    p = load_fixture(name)
    res = seed_all(p, parse_schemes(schemes), DEFAULT_LEAK)
    filtered = filter_executable(res.program, res.ledger)
    reports = {n: analyze(res.program, c) for n, c in reference_configs().items()}
    return Seeded(name, p, res, filtered, reports)


@pytest.fixture(scope="session")
def corpus() -> dict[str, Seeded]:
    return {n: seed_fixture(n) for n in fixture_names()}


@pytest.fixture(scope="session")
def fixtures() -> dict[str, Program]:
    return {n: load_fixture(n) for n in fixture_names()}


def program(text: str, unit: str = "app.al") -> Program:
    return parse_program({unit: text})
