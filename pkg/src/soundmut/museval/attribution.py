"""Structural predicates tying an undetected mutant to a detector's known gap."""

from __future__ import annotations

from typing import Optional

from soundmut.applang import INIT, Program
from soundmut.applang.nodes import ASYNC_APIS
from soundmut.detectors.callgraph import callback_tokens, is_fragment_lifecycle
from soundmut.detectors.config import DetectorConfig
from soundmut.execengine.trace import Chain
from soundmut.museval.diff import UndetectedMutant, source_chain

FLAW_CLASSES = ("FC1", "FC2", "FC3", "FC4", "FC5")
# when several gaps explain a miss, the most specific structural cause wins
PRIORITY = ("FC1", "FC2", "FC3", "FC5", "FC4")
TOGGLE_OF = {"FC1": "fc1", "FC2": "fc2", "FC3": "fc3", "FC4": "fc4", "FC5": "fc5"}


def _fc1(p: Program, config: DetectorConfig, chain: Chain) -> Optional[str]:
    for f in chain:
        tokens = callback_tokens(p, f.cls, f.method, f.via)
        if tokens is None:
            continue
        for t in tokens:
            if t and not config.admits(t):
                return f"missing-callback:{t}"
    return None


def _fc2(p: Program, chain: Chain) -> Optional[str]:
    index = p.index
    for f in chain:
        info = index.classes[f.cls]
        if info.anonymous and info.created_by in ASYNC_APIS:
            return f"implicit-call:{info.created_by}"
    return None


def _fc3(p: Program, chain: Chain) -> Optional[str]:
    index = p.index
    for f in chain:
        if index.is_anon_in_anon(f.cls):
            info = index.classes[f.cls]
            outer = index.classes[info.parent]
            return f"nested-anonymous:{info.created_by}-in-{outer.created_by}"
    return None


def _fc5(p: Program, chain: Chain) -> Optional[str]:
    for f in chain:
        if is_fragment_lifecycle(p, f.cls, f.method):
            return f"lifecycle:fragment.{f.method}"
    return None


def _kind(p: Program, cls: str, method: str) -> str:
    if method == INIT:
        return "init"
    return p.index.callback_kind(cls, method) or "method"


def _fc4(p: Program, m: UndetectedMutant) -> Optional[str]:
    r = m.record
    if not r.split:
        return None
    src = _kind(p, r.source.cls, r.source.method)
    snk = _kind(p, r.sink.cls, r.sink.method)
    return f"async-flow:{src}->{snk}"


def structural_match(p: Program, config: DetectorConfig, flaw_class: str, m: UndetectedMutant) -> Optional[str]:
    """Signature if the mutant matches ``flaw_class``'s predicate, else None."""
    chain = tuple(m.witness.observation.chain) + tuple(source_chain(m))
    if flaw_class == "FC1":
        return _fc1(p, config, chain)
    if flaw_class == "FC2":
        return _fc2(p, chain)
    if flaw_class == "FC3":
        return _fc3(p, chain)
    if flaw_class == "FC5":
        return _fc5(p, chain)
    if flaw_class == "FC4":
        return _fc4(p, m)
    raise ValueError(f"unknown flaw class {flaw_class!r}")


def attribute(p: Program, config: DetectorConfig, m: UndetectedMutant) -> Optional[tuple[str, str]]:
    """(flaw class, signature) among the gaps ``config`` enables, by priority."""
    for fc in PRIORITY:
        if getattr(config, TOGGLE_OF[fc]):
            sig = structural_match(p, config, fc, m)
            if sig is not None:
                return fc, sig
    return None
