"""Events driving an app run and their one-line text form."""

from __future__ import annotations

import shlex
from dataclasses import dataclass
from typing import Optional

LAUNCH = "launch"
LIFECYCLE = "lifecycle"
CLICK = "click"
BROADCAST = "broadcast"
DRAIN = "drainAsync"

TRANSITIONS = ("pauseResume", "stopRestart", "destroy")


class EventError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Event:
    kind: str
    a: Optional[str] = None
    b: Optional[str] = None

    def __post_init__(self):
        if self.kind == LIFECYCLE and self.b not in TRANSITIONS:
            raise EventError(f"unknown lifecycle transition {self.b!r}")

    def __str__(self) -> str:
        return " ".join([self.kind] + [shlex.quote(x) for x in (self.a, self.b) if x is not None])

    @classmethod
    def parse(cls, text: str) -> "Event":
        parts = shlex.split(text)
        if not parts:
            raise EventError("empty event")
        kind, args = parts[0], parts[1:]
        arity = {LAUNCH: 1, LIFECYCLE: 2, CLICK: 2, BROADCAST: 1, DRAIN: 0}
        if kind not in arity:
            raise EventError(f"unknown event kind {kind!r}")
        if len(args) != arity[kind]:
            raise EventError(f"{kind} takes {arity[kind]} argument(s), got {len(args)}")
        return cls(kind, *args)


def launch(activity: str) -> Event:
    return Event(LAUNCH, activity)


def lifecycle(activity: str, transition: str) -> Event:
    return Event(LIFECYCLE, activity, transition)


def click(layout: str, button: str) -> Event:
    return Event(CLICK, layout, button)


def broadcast(action: str) -> Event:
    return Event(BROADCAST, action)


def drain() -> Event:
    return Event(DRAIN)
