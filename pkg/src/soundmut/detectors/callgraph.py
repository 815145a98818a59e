"""Call graph construction with Android-style entry points."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from soundmut.applang import INIT, Program
from soundmut.applang.nodes import (
    FRAGMENT_LIFECYCLE,
    Assign,
    AsyncCall,
    Call,
    ClassKind,
    RegisterReceiver,
    SetOnClick,
    iter_expr,
    stmt_exprs,
    Var,
    walk_stmts,
)
from soundmut.applang.scopes import walk_scoped
from soundmut.detectors.config import DetectorConfig

Node = tuple[str, str]

# edge kinds
CALL = "call"
INIT_EDGE = "init"
CLOSURE = "closure"
REGISTRATION = "registration"


@dataclass(frozen=True)
class Edge:
    src: Node
    dst: Node
    kind: str


@dataclass
class CallGraph:
    entries: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    nodes: list[Node] = field(default_factory=list)

    def succ(self, n: Node, kinds: Optional[tuple[str, ...]] = None) -> list[Node]:
        return [e.dst for e in self._out.get(n, ()) if kinds is None or e.kind in kinds]

    @property
    def _out(self) -> dict[Node, list[Edge]]:
        cache = self.__dict__.get("_out_cache")
        if cache is None or cache[0] != len(self.edges):
            out: dict[Node, list[Edge]] = {}
            for e in self.edges:
                out.setdefault(e.src, []).append(e)
            cache = (len(self.edges), out)
            self.__dict__["_out_cache"] = cache
        return cache[1]

    def __contains__(self, n: Node) -> bool:
        return n in set(self.nodes)


def callback_tokens(p: Program, cls: str, method: str, via: str = "") -> Optional[tuple[str, str]]:
    """(callback kind, registration mechanism) for a dispatched callback, else None.

    ``via`` disambiguates methods reached through a layout ``onClick``
    binding, which carry no callback keyword of their own.
    """
    index = p.index
    info = index.classes[cls]
    if method == INIT:
        return None
    if via == "click" and not info.anonymous:
        return ("onClick", "layoutOnClick")
    kind = index.callback_kind(cls, method)
    if kind is None:
        return None
    if info.anonymous:
        return (kind, info.created_by)
    if info.kind is ClassKind.ACTIVITY:
        return (kind, "manifestActivity")
    if info.kind is ClassKind.FRAGMENT:
        return (kind, "attachFragment")
    if info.kind is ClassKind.RECEIVER:
        return (kind, "manifestReceiver")
    return (kind, "")


def is_fragment_lifecycle(p: Program, cls: str, method: str) -> bool:
    info = p.index.classes[cls]
    return info.kind is ClassKind.FRAGMENT and not info.anonymous and (method == INIT or method in FRAGMENT_LIFECYCLE)


def _admit(config: DetectorConfig, tokens: Optional[tuple[str, str]]) -> bool:
    if tokens is None:
        return True
    kind, reg = tokens
    return config.admits(kind) and (not reg or config.admits(reg))


def _field_owners(p: Program, cls: str, method: str) -> set[str]:
    """Classes whose fields the method reads or writes."""
    index = p.index
    owners = set()
    for _path, s, env in walk_scoped(index, cls, method):
        names = set()
        for e in stmt_exprs(s):
            names |= {x.name for x in iter_expr(e) if isinstance(x, Var)}
        if isinstance(s, Assign):
            names.add(s.name)
        for n in names:
            sym = env.get(n)
            if sym is not None and sym.kind == "field":
                owners.add(sym.owner)
    if method == INIT:
        for f in index.field_decls(cls):
            if f.init is not None:
                for x in iter_expr(f.init):
                    if isinstance(x, Var):
                        owner = index.field_owner(cls, x.name)
                        if owner is not None:
                            owners.add(owner)
    return owners


def _out_edges(p: Program, node: Node, config: DetectorConfig) -> list[Edge]:
    index = p.index
    cls, method = node
    out: list[Edge] = []

    def construct(q: str):
        if not (config.fc5 and is_fragment_lifecycle(p, q, INIT)):
            out.append(Edge(node, (q, INIT), INIT_EDGE))

    for owner in sorted(_field_owners(p, cls, method)):
        if owner != cls or method != INIT:
            construct(owner)
    for s in walk_stmts(index.body_of(cls, method)):
        if isinstance(s, Call):
            q = index.resolve_call(cls, s.target, s.method)
            if q is None:
                continue
            if s.target != "this":
                construct(q)
            out.append(Edge(node, (q, s.method), CALL))
        elif isinstance(s, (RegisterReceiver, SetOnClick, AsyncCall)):
            decl = s.receiver if isinstance(s, RegisterReceiver) else s.listener if isinstance(s, SetOnClick) else s.closure
            anon = index.anon_name(decl)
            if config.fc3 and index.is_anon_in_anon(anon):
                continue
            if isinstance(s, AsyncCall):
                if config.fc2:
                    continue
                kind = CLOSURE
            else:
                kind = REGISTRATION
            for m in decl.methods:
                cb = index.callback_kind(anon, m.name)
                if cb is None:
                    continue
                if not _admit(config, callback_tokens(p, anon, m.name)):
                    continue
                out.append(Edge(node, (anon, m.name), kind))
    return out


def _layout_entries(p: Program, cls: str, config: DetectorConfig) -> list[Node]:
    index = p.index
    lid = index.classes[cls].decl.layout
    if lid is None or not _admit(config, ("onClick", "layoutOnClick")):
        return []
    out = []
    for b in p.layout(lid).buttons:
        if b.on_click is None:
            continue
        owner = index.resolve_binding(cls, b.on_click)
        if owner is not None:
            out.append((owner, b.on_click))
    return out


def static_entries(p: Program, config: DetectorConfig) -> list[Node]:
    """Entry points known without looking at method bodies."""
    index = p.index
    entries: list[Node] = []

    def add(n: Node):
        if n not in entries:
            entries.append(n)

    def add_callbacks(cls: str):
        for m in index.classes[cls].decl.methods:
            if index.callback_kind(cls, m.name) is None:
                continue
            if config.fc5 and is_fragment_lifecycle(p, cls, m.name):
                continue
            if _admit(config, callback_tokens(p, cls, m.name)):
                add((cls, m.name))

    for a in p.manifest.activities:
        add((a, INIT))
        add_callbacks(a)
        frags = index.attached_fragments(a)
        for f in frags:
            if not config.fc5:
                add((f, INIT))
            add_callbacks(f)
        for q in [a] + frags:
            for n in _layout_entries(p, q, config):
                add(n)
                if not (config.fc5 and is_fragment_lifecycle(p, n[0], INIT)):
                    add((n[0], INIT))
    for r, _action in p.manifest.receivers:
        add((r, INIT))
        add_callbacks(r)
    return entries


def build_call_graph(p: Program, config: DetectorConfig) -> CallGraph:
    """Entry points plus everything reachable from them.

    Targets of registration and closure edges are entry points in their own
    right: once registered, the framework may invoke them at any later time.
    """
    g = CallGraph()
    entries = static_entries(p, config)
    seen = set()
    work = list(entries)
    while work:
        n = work.pop(0)
        if n in seen:
            continue
        seen.add(n)
        g.nodes.append(n)
        for e in _out_edges(p, n, config):
            g.edges.append(e)
            if e.kind in (REGISTRATION, CLOSURE) and e.dst not in entries:
                entries.append(e.dst)
            if e.dst not in seen:
                work.append(e.dst)
    g.entries = entries
    return g


def closure(g: CallGraph, start: Node) -> list[Node]:
    """Nodes reached from ``start`` through call and construction edges only."""
    seen = [start]
    work = [start]
    while work:
        n = work.pop()
        for m in g.succ(n, (CALL, INIT_EDGE)):
            if m not in seen:
                seen.append(m)
                work.append(m)
    return seen

