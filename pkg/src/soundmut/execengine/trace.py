"""Execution traces and the plain-text trace log."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from soundmut.execengine.events import Event


@dataclass(frozen=True)
class Frame:
    cls: str
    method: str
    step: int
    via: str  # launch | lifecycle | click | broadcast | drain | attach | call | init

    def __str__(self) -> str:
        return f"{self.cls}.{self.method}@{self.step}({self.via})"


Chain = tuple[Frame, ...]


@dataclass(frozen=True)
class Observation:
    tag: str
    step: int
    chain: Chain = field(default=(), compare=False)


@dataclass(frozen=True)
class SourceHit:
    unit: str
    line: int
    step: int
    chain: Chain = field(default=(), compare=False)


@dataclass(frozen=True)
class Fault:
    step: int
    unit: str
    line: int
    message: str


@dataclass
class ExecutionTrace:
    events: list[Event] = field(default_factory=list)
    choices: list[tuple[bool, ...]] = field(default_factory=list)
    observations: list[Observation] = field(default_factory=list)
    source_hits: dict[tuple[str, int], SourceHit] = field(default_factory=dict)
    faults: list[Fault] = field(default_factory=list)
    truncated: bool = False
    state_hash: str = ""
    label: str = ""

    @property
    def observed_tags(self) -> set[str]:
        return {o.tag for o in self.observations}

    def first(self, tag: str) -> Optional[Observation]:
        for o in self.observations:
            if o.tag == tag:
                return o
        return None

    def events_until(self, step: int) -> list[Event]:
        return self.events[:step]


def format_trace_log(traces: Iterable[ExecutionTrace]) -> str:
    out = []
    for i, t in enumerate(traces):
        head = f"TRACE {i}"
        if t.label:
            head += f" {t.label}"
        if t.truncated:
            head += " truncated"
        out.append(head)
        for n, ev in enumerate(t.events, start=1):
            out.append(f"EVT {n} {ev}")
            bits = t.choices[n - 1] if n - 1 < len(t.choices) else ()
            if bits:
                out.append(f"CHOICE {n} {''.join('1' if b else '0' for b in bits)}")
        for o in t.observations:
            out.append(f"LEAK {o.tag} {o.step}")
        for f in t.faults:
            out.append(f"FAULT {f.step} {f.unit}:{f.line} {f.message}")
        out.append(f"STATE {t.state_hash}")
    return "\n".join(out) + ("\n" if out else "")


def parse_trace_log(text: str) -> list[ExecutionTrace]:
    """Inverse of :func:`format_trace_log` (call chains are not serialised)."""
    traces: list[ExecutionTrace] = []
    cur: Optional[ExecutionTrace] = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        word, _, rest = line.partition(" ")
        if word == "TRACE":
            parts = rest.split()
            cur = ExecutionTrace(truncated="truncated" in parts[1:])
            cur.label = next((x for x in parts[1:] if x != "truncated"), "")
            traces.append(cur)
            continue
        if cur is None:
            raise ValueError(f"trace log line {lineno}: record outside a TRACE block")
        if word == "EVT":
            n, _, ev = rest.partition(" ")
            cur.events.append(Event.parse(ev))
            cur.choices.append(())
        elif word == "CHOICE":
            n, _, bits = rest.partition(" ")
            cur.choices[int(n) - 1] = tuple(b == "1" for b in bits.strip())
        elif word == "LEAK":
            tag, n = rest.rsplit(" ", 1)
            cur.observations.append(Observation(tag, int(n)))
        elif word == "FAULT":
            n, loc, msg = rest.split(" ", 2)
            unit, _, ln = loc.rpartition(":")
            cur.faults.append(Fault(int(n), unit, int(ln), msg))
        elif word == "STATE":
            cur.state_hash = rest.strip()
        else:
            raise ValueError(f"trace log line {lineno}: unknown record {word!r}")
    return traces
