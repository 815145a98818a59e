"""Deterministic execution of AppLang programs and the dynamic mutant filter."""

from soundmut.execengine.events import Event, EventError
from soundmut.execengine.explore import (
    SYSTEMATIC,
    ExplorationLimit,
    ExplorationStrategy,
    FilterResult,
    FingerprintMismatch,
    Witness,
    explore_all,
    filter_executable,
    observed,
    replay,
    replay_filter,
    run,
)
from soundmut.execengine.interpreter import EnvState, Interpreter, Value
from soundmut.execengine.trace import (
    ExecutionTrace,
    Fault,
    Frame,
    Observation,
    SourceHit,
    format_trace_log,
    parse_trace_log,
)

__all__ = [
    "EnvState", "Event", "EventError", "ExecutionTrace", "ExplorationLimit",
    "ExplorationStrategy", "Fault", "FilterResult", "FingerprintMismatch", "Frame",
    "Interpreter", "Observation", "SYSTEMATIC", "SourceHit", "Value", "Witness",
    "explore_all", "filter_executable", "format_trace_log", "observed",
    "parse_trace_log", "replay", "replay_filter", "run",
]
