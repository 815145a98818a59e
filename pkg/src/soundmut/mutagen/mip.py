"""Mutation schemes and mutant injection profiles (MIPs)."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from soundmut.applang import INIT, Program, callback_inventory
from soundmut.applang.inventory import STATIC_LAYOUT
from soundmut.applang.nodes import ClassKind
from soundmut.mutagen.operators import SecurityOperator

MethodRef = tuple[str, str]


class SchemeKind(str, enum.Enum):
    REACHABILITY = "reach"
    COMPLEX = "complex"
    TAINT = "taint"
    SCOPE = "scope"


@dataclass(frozen=True)
class MutationScheme:
    kind: SchemeKind
    # taint: "all" pairs every callback with every callback of its class
    # (n*n sinks), "cross" skips the source's own callback
    taint_pairing: str = "all"
    max_scope_depth: int = 2

    def __post_init__(self):
        if self.taint_pairing not in ("all", "cross"):
            raise ValueError(f"unknown taint pairing policy {self.taint_pairing!r}")
        if self.max_scope_depth < 1:
            raise ValueError("max_scope_depth must be >= 1")

    @property
    def name(self) -> str:
        return self.kind.value


def parse_schemes(text: str) -> list[MutationScheme]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if part:
            out.append(MutationScheme(SchemeKind(part)))
    return out


@dataclass(frozen=True)
class InjectionPoint:
    kind: str  # methodEntry | classDecl | taintPair | scopePair
    source: MethodRef
    sink: MethodRef
    host: Optional[str] = None  # class declaring the shared leak field
    android: tuple[str, ...] = ()


def android_tags(p: Program, ref: MethodRef, bound: set[MethodRef]) -> tuple[str, ...]:
    """Android abstractions a placement sits inside (used to prioritise/report)."""
    index = p.index
    tags = set()
    for q in index.ancestors(ref[0]):
        info = index.classes[q]
        if info.kind is ClassKind.FRAGMENT:
            tags.add("fragment")
        if info.kind is ClassKind.RECEIVER:
            tags.add("receiver")
        if info.created_by in ("runOnUi", "submit", "startThread"):
            tags.add("async")
        if index.is_anon_in_anon(q):
            tags.add("nested-dynamic")
    if ref in bound:
        tags.add("layout-bound")
    return tuple(sorted(tags))


def _bound_methods(p: Program) -> set[MethodRef]:
    return {(e.cls, e.method) for e in callback_inventory(p) if e.registration == STATIC_LAYOUT}


def compute_mip(p: Program, scheme: MutationScheme, op: Optional[SecurityOperator] = None) -> list[InjectionPoint]:
    """Every injection point the scheme admits, in AST pre-order."""
    index = p.index
    bound = _bound_methods(p)
    points: list[InjectionPoint] = []
    kind = scheme.kind

    if kind in (SchemeKind.REACHABILITY, SchemeKind.COMPLEX):
        for q, info in index.classes.items():
            if kind is SchemeKind.REACHABILITY and not info.anonymous:
                ref = (q, INIT)
                points.append(InjectionPoint("classDecl", ref, ref, q, android_tags(p, ref, bound)))
            for m in info.decl.methods:
                ref = (q, m.name)
                points.append(InjectionPoint("methodEntry", ref, ref, None, android_tags(p, ref, bound)))
        return points

    if kind is SchemeKind.TAINT:
        by_class: dict[str, list[str]] = {}
        for e in callback_inventory(p):
            by_class.setdefault(e.cls, []).append(e.method)
        for q in index.classes:
            cbs = [m.name for m in index.classes[q].decl.methods if m.name in by_class.get(q, ())]
            host = index.named_owner(q)
            for src in cbs:
                for snk in cbs:
                    if scheme.taint_pairing == "cross" and src == snk:
                        continue
                    sref = (q, snk)
                    points.append(InjectionPoint("taintPair", (q, src), sref, host, android_tags(p, sref, bound)))
        return points

    # scope: field in an outer named class, assigned in a method of a named
    # class nested (up to max depth) inside it, sunk at both levels
    for outer, oinfo in index.classes.items():
        if oinfo.anonymous:
            continue
        inner_classes = []
        frontier = [(outer, 0)]
        while frontier:
            q, d = frontier.pop(0)
            if d >= scheme.max_scope_depth:
                continue
            for n in index.classes[q].decl.nested:
                nq = f"{q}.{n.name}"
                inner_classes.append(nq)
                frontier.append((nq, d + 1))
        inner_classes.sort(key=list(index.classes).index)
        for om in oinfo.decl.methods:
            for iq in inner_classes:
                for im in index.classes[iq].decl.methods:
                    ref = (iq, im.name)
                    points.append(InjectionPoint("scopePair", ref, (outer, om.name), outer, android_tags(p, ref, bound)))
    return points
