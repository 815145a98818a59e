"""Detector configurations: recognised callbacks, soundness-gap toggles, APIs."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

from soundmut.applang.nodes import (
    ACTIVITY_LIFECYCLE,
    ASYNC_APIS,
    CLOSURE_CALLBACKS,
    CRYPTO_APIS,
    FRAGMENT_LIFECYCLE,
    SOURCE_APIS,
    WEAK_CRYPTO_PARAMS,
)

logger = logging.getLogger(__name__)

# registration mechanisms a detector may or may not model
REGISTRATIONS = (
    "manifestActivity",
    "manifestReceiver",
    "attachFragment",
    "layoutOnClick",
    "registerReceiver",
    "setOnClick",
) + ASYNC_APIS

CALLBACK_KINDS = tuple(dict.fromkeys(ACTIVITY_LIFECYCLE + FRAGMENT_LIFECYCLE + ("onReceive", "onClick") + CLOSURE_CALLBACKS))
FULL_CALLBACKS = frozenset(CALLBACK_KINDS + REGISTRATIONS)

TOGGLES = ("fc1", "fc2", "fc3", "fc4", "fc5")
# constructs a detector can be configured to choke on (models tool crashes)
CRASH_FEATURES = ("fragment", "registerReceiver", "setOnClick", "charLoop", "crypto") + ASYNC_APIS


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    name: str
    callback_list: frozenset = FULL_CALLBACKS
    fc1: bool = False  # drop callbacks / registrations missing from callback_list
    fc2: bool = False  # ignore closures handed to runOnUi/submit/startThread
    fc3: bool = False  # skip anonymous classes created inside anonymous classes
    fc4: bool = False  # analyse every entry point with a fresh field store
    fc5: bool = False  # skip fragment lifecycle callbacks and fragment construction
    sources: frozenset = frozenset(SOURCE_APIS)
    crypto_apis: frozenset = frozenset(CRYPTO_APIS)
    weak_params: frozenset = frozenset(WEAK_CRYPTO_PARAMS)
    crash_on: frozenset = field(default=frozenset())

    def __post_init__(self):
        unknown = set(self.callback_list) - FULL_CALLBACKS
        if unknown:
            raise ConfigError(f"unknown callback list entries: {', '.join(sorted(unknown))}")
        bad = set(self.crash_on) - set(CRASH_FEATURES)
        if bad:
            raise ConfigError(f"unknown crash features: {', '.join(sorted(bad))}")
        if set(self.sources) - set(SOURCE_APIS):
            raise ConfigError("unknown source API in config")

    @property
    def toggles(self) -> tuple[str, ...]:
        return tuple(t for t in TOGGLES if getattr(self, t))

    def admits(self, token: str) -> bool:
        """Whether a callback kind / registration mechanism is modelled."""
        return not self.fc1 or token in self.callback_list

    def behaviour(self) -> tuple:
        """Everything except the name (two configs with equal behaviour analyse identically)."""
        return (tuple(sorted(self.callback_list)), self.toggles, tuple(sorted(self.sources)),
                tuple(sorted(self.crypto_apis)), tuple(sorted(self.weak_params)), tuple(sorted(self.crash_on)))

    def to_text(self) -> str:
        lines = [f"name={self.name}"]
        for t in TOGGLES:
            lines.append(f"{t}={'true' if getattr(self, t) else 'false'}")
        dropped = sorted(FULL_CALLBACKS - set(self.callback_list))
        lines.append(f"drop_callbacks={','.join(dropped)}")
        lines.append(f"sources={','.join(sorted(self.sources))}")
        if self.crash_on:
            lines.append(f"crash_on={','.join(sorted(self.crash_on))}")
        return "\n".join(lines) + "\n"


def _bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _items(value: str) -> list[str]:
    return [x.strip() for x in value.split(",") if x.strip()]


def parse_config(text: str, default_name: str = "detector") -> DetectorConfig:
    """Parse ``key=value`` lines (``#`` starts a comment)."""
    kw: dict = {"name": default_name}
    callbacks = set(FULL_CALLBACKS)
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config line {n}: expected key=value")
        key, value = key.strip(), value.strip()
        if key == "name":
            kw["name"] = value
        elif key in TOGGLES:
            kw[key] = _bool(key, value)
        elif key == "callbacks":
            callbacks = set(FULL_CALLBACKS) if value == "all" else set(_items(value))
        elif key == "drop_callbacks":
            callbacks -= set(_items(value))
        elif key == "sources":
            kw["sources"] = frozenset(_items(value))
        elif key == "crypto_apis":
            kw["crypto_apis"] = frozenset(_items(value))
        elif key == "weak_params":
            kw["weak_params"] = frozenset(_items(value))
        elif key == "crash_on":
            kw["crash_on"] = frozenset(_items(value))
        else:
            raise ConfigError(f"config line {n}: unknown key {key!r}")
    kw["callback_list"] = frozenset(callbacks)
    return DetectorConfig(**kw)


def load_config(path: Union[str, Path]) -> DetectorConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), default_name=path.stem)


BASELINE = DetectorConfig("baseline")


def reference_configs() -> dict[str, DetectorConfig]:
    """The sound baseline plus one detector per flaw class."""
    return {
        "baseline": BASELINE,
        "fc1": replace(BASELINE, name="fc1", fc1=True, callback_list=FULL_CALLBACKS - {"onReceive"}),
        "fc2": replace(BASELINE, name="fc2", fc2=True),
        "fc3": replace(BASELINE, name="fc3", fc3=True),
        "fc4": replace(BASELINE, name="fc4", fc4=True),
        "fc5": replace(BASELINE, name="fc5", fc5=True),
    }


def combine(name: str, *configs: DetectorConfig) -> DetectorConfig:
    """Union of the gaps of several configs (toggles OR-ed, callback lists intersected)."""
    out = replace(BASELINE, name=name)
    cbs = set(FULL_CALLBACKS)
    for c in configs:
        for t in c.toggles:
            out = replace(out, **{t: True})
        if c.fc1:
            cbs &= set(c.callback_list)
    return replace(out, callback_list=frozenset(cbs))
