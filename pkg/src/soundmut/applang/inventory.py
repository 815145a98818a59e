from __future__ import annotations

from dataclasses import dataclass

from soundmut.applang.errors import AppLangError, Diagnostic
from soundmut.applang.nodes import ClassKind, Program

STATIC_MANIFEST = "static-manifest"
STATIC_LAYOUT = "static-layout"
STATIC_ATTACHED = "static-attached"
DYNAMIC = "dynamic"
DYNAMIC_NESTED = "dynamic-within-dynamic"
ASYNC = "async"
UNREGISTERED = "unregistered"


@dataclass(frozen=True)
class CallbackEntry:
    cls: str
    method: str
    callback_kind: str
    registration: str
    detail: str = ""


def _registration(p: Program, cls: str) -> tuple[str, str]:
    index = p.index
    info = index.classes[cls]
    if info.anonymous:
        if info.created_by in ("runOnUi", "submit", "startThread"):
            return ASYNC, info.created_by
        parent = index.classes[info.parent]
        if parent.anonymous and parent.created_by in ("registerReceiver", "setOnClick"):
            return DYNAMIC_NESTED, info.created_by
        return DYNAMIC, info.created_by
    if info.parent is None:
        if info.kind is ClassKind.ACTIVITY and cls in p.manifest.activities:
            return STATIC_MANIFEST, "activity"
        if info.kind is ClassKind.RECEIVER and any(r == cls for r, _ in p.manifest.receivers):
            return STATIC_MANIFEST, "receiver"
        return UNREGISTERED, ""
    parent = index.classes[info.parent]
    if info.kind is ClassKind.FRAGMENT and parent.kind is ClassKind.ACTIVITY and parent.parent is None:
        return STATIC_ATTACHED, info.parent
    return UNREGISTERED, ""


def callback_inventory(p: Program) -> list[CallbackEntry]:
    """Every callback method once, with how it gets registered.

    Layout ``onClick`` bindings contribute the bound method (resolved in the
    class using the layout or its lexical ancestors) as a static-layout entry.
    """
    index = p.index
    entries: list[CallbackEntry] = []
    seen: set[tuple[str, str]] = set()
    for cls, info in index.classes.items():
        for m in info.decl.methods:
            kind = index.callback_kind(cls, m.name)
            if kind is None:
                continue
            reg, detail = _registration(p, cls)
            entries.append(CallbackEntry(cls, m.name, kind, reg, detail))
            seen.add((cls, m.name))
    diags = []
    for cls, info in index.classes.items():
        lid = info.decl.layout
        if lid is None:
            continue
        lay = p.layout(lid)
        for b in lay.buttons:
            if b.on_click is None:
                continue
            owner = index.resolve_binding(cls, b.on_click)
            if owner is None:
                diags.append(Diagnostic(info.unit, lay.line, 1,
                                        f"layout {lid!r} button {b.id!r} binds missing method {b.on_click!r}"))
                continue
            if (owner, b.on_click) in seen:
                continue
            seen.add((owner, b.on_click))
            entries.append(CallbackEntry(owner, b.on_click, "onClick", STATIC_LAYOUT, f"{lid}.{b.id}"))
    if diags:
        raise AppLangError(diags)
    return entries
