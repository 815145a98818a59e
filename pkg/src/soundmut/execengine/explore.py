"""Exploration strategies, the exhaustive oracle and the executability filter."""

from __future__ import annotations

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from soundmut.applang import Program, fingerprint
from soundmut.execengine import events as ev
from soundmut.execengine.events import Event
from soundmut.execengine.interpreter import EnvState, Interpreter
from soundmut.execengine.trace import ExecutionTrace, Observation
from soundmut.mutagen.ledger import Ledger

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 400
MAX_STATES = 200_000
MAX_CHOICE_RUNS = 1024


class ExplorationLimit(RuntimeError):
    pass


class FingerprintMismatch(ValueError):
    pass


@dataclass(frozen=True)
class ExplorationStrategy:
    kind: str = "systematic"  # systematic | brute
    depth: int = 3
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.kind not in ("systematic", "brute"):
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.depth < 1 or self.budget < 1:
            raise ValueError("strategy depth and budget must be >= 1")

    @classmethod
    def parse(cls, text: str, budget: int = DEFAULT_BUDGET) -> "ExplorationStrategy":
        text = text.strip()
        if text == "systematic":
            return cls("systematic", budget=budget)
        if text.startswith("brute:"):
            try:
                k = int(text.split(":", 1)[1])
            except ValueError:
                raise ValueError(f"bad strategy {text!r}") from None
            return cls("brute", depth=k, budget=budget)
        raise ValueError(f"unknown strategy {text!r} (expected systematic or brute:K)")

    def __str__(self) -> str:
        return "systematic" if self.kind == "systematic" else f"brute:{self.depth}"


SYSTEMATIC = ExplorationStrategy()


class _Budget(Exception):
    pass


class _Runner:
    """One run: fresh environment, fixed branch policy, bounded event count."""

    def __init__(self, p: Program, policy: bool, budget: int, label: str):
        self.interp = Interpreter(p)
        self.trace = ExecutionTrace(label=label)
        self.policy = policy
        self.budget = budget

    def fire(self, e: Event) -> None:
        if len(self.trace.events) >= self.budget:
            self.trace.truncated = True
            raise _Budget()
        self.interp.fire(e, self.trace, lambda c, m, line: self.policy)

    def is_enabled(self, e: Event) -> bool:
        return e in self.interp.enabled()


def _rounds(r: "_Runner", rng: Optional[random.Random]) -> None:
    """Fire every enabled click and broadcast, then drain, until nothing new registers."""
    env = r.interp.env
    while True:
        before = (tuple(env.receivers), tuple(env.listeners))
        batch = [e for e in r.interp.enabled() if e.kind in (ev.CLICK, ev.BROADCAST)]
        if rng is not None:
            rng.shuffle(batch)
        for e in batch:
            if r.is_enabled(e):
                r.fire(e)
        if env.queue:
            r.fire(ev.drain())
        after = (tuple(env.receivers), tuple(env.listeners))
        if after == before and not env.queue:
            break


def _systematic_run(p: Program, activity: str, policy: bool, budget: int, rng: Optional[random.Random]) -> ExecutionTrace:
    r = _Runner(p, policy, budget, f"{activity}:{'T' if policy else 'F'}")
    env = r.interp.env
    try:
        r.fire(ev.launch(activity))
        _rounds(r, rng)
        for t in ev.TRANSITIONS:
            if env.current == activity:
                r.fire(ev.lifecycle(activity, t))
                _rounds(r, rng)
        # recreate after destroy: state kept outside the activity survives
        r.fire(ev.launch(activity))
    except _Budget:
        logger.info("event budget %d exhausted on %s", budget, r.trace.label)
    return r.trace


def run(p: Program, strategy: ExplorationStrategy = SYSTEMATIC, seed_order: Optional[int] = None) -> list[ExecutionTrace]:
    """Traces produced by ``strategy``; ``seed_order`` shuffles event order within rounds."""
    if strategy.kind == "brute":
        return explore_all(p, strategy.depth)
    traces = []
    for policy in (True, False):
        for a in p.manifest.activities:
            rng = random.Random(seed_order) if seed_order is not None else None
            traces.append(_systematic_run(p, a, policy, strategy.budget, rng))
    return traces


def replay(p: Program, events: Sequence[Event], choices: Sequence[Sequence[bool]] = ()) -> ExecutionTrace:
    """Re-execute a recorded event sequence in a fresh environment."""
    interp = Interpreter(p)
    trace = ExecutionTrace(label="replay")
    for n, e in enumerate(events):
        bits = list(choices[n]) if n < len(choices) else []
        interp.fire(e, trace, lambda c, m, line: bits.pop(0) if bits else False)
    return trace


def _fire_all_choices(p: Program, env: EnvState, base: ExecutionTrace, e: Event):
    """Yield (env, trace) for every resolution of the unknown branches ``e`` meets."""
    pending: list[list[bool]] = [[]]
    runs = 0
    while pending:
        prefix = pending.pop()
        runs += 1
        if runs > MAX_CHOICE_RUNS:
            raise ExplorationLimit(f"more than {MAX_CHOICE_RUNS} branch resolutions for one event")
        made: list[bool] = []

        def choose(c, m, line):
            b = prefix[len(made)] if len(made) < len(prefix) else False
            made.append(b)
            return b

        trace = ExecutionTrace(list(base.events), list(base.choices), list(base.observations),
                               dict(base.source_hits), list(base.faults), label="brute")
        interp = Interpreter(p, env.copy())
        interp.fire(e, trace, choose)
        for i in range(len(made) - 1, len(prefix) - 1, -1):
            if not made[i]:
                pending.append(made[:i] + [True])
        yield interp.env, trace


def explore_all(p: Program, k: int, max_states: int = MAX_STATES) -> list[ExecutionTrace]:
    """Every event sequence of length <= k (all branch resolutions), deduplicating states."""
    if k <= 0:
        return []
    root = EnvState()
    seen = {root.key()}
    frontier = deque([(root, ExecutionTrace(label="brute"))])
    traces: list[ExecutionTrace] = []
    for _ in range(k):
        nxt = deque()
        for env, base in frontier:
            for e in Interpreter(p, env).enabled():
                for env2, trace in _fire_all_choices(p, env, base, e):
                    traces.append(trace)
                    key = env2.key()
                    if key in seen:
                        continue
                    seen.add(key)
                    if len(seen) > max_states:
                        raise ExplorationLimit(f"state count exceeded {max_states}")
                    nxt.append((env2, trace))
        frontier = nxt
    return traces


def observed(traces: Iterable[ExecutionTrace]) -> set[str]:
    out: set[str] = set()
    for t in traces:
        out |= t.observed_tags
    return out


@dataclass(frozen=True)
class Witness:
    trace: ExecutionTrace
    observation: Observation


@dataclass
class FilterResult:
    executable: frozenset
    nonexecutable: frozenset
    witnesses: dict[str, Witness] = field(default_factory=dict)
    traces: list[ExecutionTrace] = field(default_factory=list)


def filter_executable(p: Program, ledger: Ledger, strategy: ExplorationStrategy = SYSTEMATIC,
                      seed_order: Optional[int] = None) -> FilterResult:
    """Partition the ledger's tags by whether some run observes them."""
    fp = fingerprint(p)
    if fp != ledger.fingerprint:
        raise FingerprintMismatch(f"ledger fingerprint {ledger.fingerprint[:12]} does not match program {fp[:12]}")
    return _partition(ledger, run(p, strategy, seed_order))


def _partition(ledger: Ledger, traces: list[ExecutionTrace]) -> FilterResult:
    tags = set(ledger.tags)
    witnesses: dict[str, Witness] = {}
    for t in traces:
        for o in t.observations:
            if o.tag in tags and o.tag not in witnesses:
                witnesses[o.tag] = Witness(t, o)
    executable = frozenset(witnesses)
    return FilterResult(executable, frozenset(tags - executable), witnesses, traces)


def replay_filter(p: Program, ledger: Ledger, logged: Sequence[ExecutionTrace]) -> FilterResult:
    """Rebuild a filter result from a trace log by replaying every run.

    Logs carry no call chains; replay restores them. A log whose
    observations do not reproduce on ``p`` is rejected.
    """
    fp = fingerprint(p)
    if fp != ledger.fingerprint:
        raise FingerprintMismatch(f"ledger fingerprint {ledger.fingerprint[:12]} does not match program {fp[:12]}")
    traces = []
    for t in logged:
        again = replay(p, t.events, t.choices)
        if [(o.tag, o.step) for o in again.observations] != [(o.tag, o.step) for o in t.observations]:
            raise FingerprintMismatch(f"trace {t.label or '?'} does not replay on this program")
        again.label, again.truncated = t.label, t.truncated
        traces.append(again)
    return _partition(ledger, traces)
