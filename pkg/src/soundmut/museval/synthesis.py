"""Minimal-example synthesis by slicing a program down to one witness chain."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

from soundmut.applang import INIT, AppLangError, Program, fingerprint, parse_program, render_program
from soundmut.applang.nodes import (
    Assign,
    AsyncCall,
    Button,
    Call,
    ClassDecl,
    ClassKind,
    FieldDecl,
    If,
    InitBlock,
    LayoutResource,
    Log,
    Manifest,
    MethodDecl,
    RegisterReceiver,
    SetOnClick,
    Str,
    VarDecl,
    walk_stmts,
)
from soundmut.execengine.explore import Witness
from soundmut.execengine.trace import Chain
from soundmut.mutagen.ledger import Ledger, LedgerError, MutantRecord, relocate

logger = logging.getLogger(__name__)


class SynthesisError(RuntimeError):
    """The witness chain could not be turned into a valid skeleton."""


@dataclass(frozen=True)
class MinimalExample:
    tag: str
    program: Program
    ledger: Ledger

    @property
    def tags(self) -> list[str]:
        return self.ledger.tags


def _path_var(var: str) -> str:
    stem = var.rstrip("0123456789")
    return f"{stem}Path{var[len(stem):]}"


def _chains(p: Program, rec: MutantRecord, w: Witness) -> list[Chain]:
    out = [w.observation.chain]
    hit = w.trace.source_hits.get((rec.source.unit, rec.source.line))
    if hit is not None:
        out.append(hit.chain)
    return out


def _constructors(p: Program, chain: Chain) -> set:
    """Methods whose call constructed a class along ``chain``.

    A static call ``X.m()`` instantiates X before ``m`` runs, so the chain
    records ``X.<init>`` but never ``X.m``; the skeleton needs the call back.
    """
    index = p.index
    out = set()
    for caller, f in zip(chain, chain[1:]):
        if f.via != "init" or f.method != INIT:
            continue
        decl = next((m for m in index.classes[caller.cls].decl.methods if m.name == caller.method), None)
        if decl is None:
            continue
        for s in walk_stmts(decl.body):
            if isinstance(s, Call) and index.resolve_call(caller.cls, s.target, s.method) == f.cls:
                out.add((f.cls, s.method))
                break
    return out


class _Slicer:
    def __init__(self, p: Program, methods: set, tags: set, variables: set):
        self.p = p
        self.index = p.index
        self.methods = set(methods)
        self.tags = tags
        self.variables = variables
        self.buttons: set[tuple[str, str]] = set()  # (layout, button) referenced by kept setOnClick
        self._close()

    def _close(self):
        index = self.index
        while True:
            classes = set()
            for q, _m in self.methods:
                classes.update(index.ancestors(q))
            extra = set()
            for q in classes:
                info = index.classes[q]
                if info.anonymous and info.creator not in self.methods:
                    extra.add(info.creator)
            if not extra:
                break
            self.methods |= extra
        self.classes = classes

    def body(self, body, q: str):
        out = []
        for s in body:
            if isinstance(s, Log):
                if s.tag in self.tags:
                    out.append(s)
            elif isinstance(s, (VarDecl, Assign)):
                if s.name in self.variables:
                    out.append(s)
            elif isinstance(s, Call):
                target = self.index.resolve_call(q, s.target, s.method)
                if target is not None and (target, s.method) in self.methods:
                    out.append(Call(s.target, s.method, tuple(Str("") for _ in s.args), s.line))
            elif isinstance(s, (RegisterReceiver, SetOnClick, AsyncCall)):
                decl = s.receiver if isinstance(s, RegisterReceiver) else s.listener if isinstance(s, SetOnClick) else s.closure
                anon = self.index.anon_name(decl)
                if anon not in self.classes:
                    continue
                sliced = self.cls(decl, anon)
                if isinstance(s, RegisterReceiver):
                    out.append(RegisterReceiver(sliced, s.action, s.line))
                elif isinstance(s, SetOnClick):
                    self.buttons.add((self.index.resolve_button(q, s.button), s.button))
                    out.append(SetOnClick(s.button, sliced, s.line))
                else:
                    out.append(AsyncCall(s.api, sliced, s.line))
            elif isinstance(s, If):
                then = tuple(self.body(s.then, q))
                orelse = tuple(self.body(s.orelse, q)) if s.orelse is not None else ()
                if then or orelse:
                    out.append(If(s.cond, then, orelse or None, s.line))
        return out

    def cls(self, decl: ClassDecl, q: str) -> ClassDecl:
        members = []
        for m in decl.members:
            if isinstance(m, FieldDecl):
                if m.name in self.variables:
                    members.append(m)
            elif isinstance(m, InitBlock):
                if (q, INIT) in self.methods:
                    members.append(InitBlock(tuple(self.body(m.body, q)), m.line))
            elif isinstance(m, MethodDecl):
                if (q, m.name) in self.methods:
                    members.append(MethodDecl(m.name, m.params, tuple(self.body(m.body, q)), m.is_callback, m.line))
            elif isinstance(m, ClassDecl):
                nq = f"{q}.{m.name}"
                if nq in self.classes:
                    members.append(self.cls(m, nq))
        return ClassDecl(decl.kind, decl.name, tuple(members), decl.layout, decl.unit, decl.line)


def _layouts(p: Program, slicer: _Slicer, classes: list[ClassDecl]) -> tuple[list[ClassDecl], list[LayoutResource]]:
    """Keep only buttons that dispatch to kept code; drop layouts nobody needs."""
    index = p.index
    needed: dict[str, dict[str, Button]] = {}
    for q in slicer.classes:
        lid = index.classes[q].decl.layout
        if lid is None:
            continue
        for b in p.layout(lid).buttons:
            if b.on_click is None:
                continue
            owner = index.resolve_binding(q, b.on_click)
            if owner is not None and (owner, b.on_click) in slicer.methods:
                needed.setdefault(lid, {})[b.id] = b
    for lid, bid in slicer.buttons:
        b = p.layout(lid).button(bid)
        keep = needed.setdefault(lid, {})
        if bid not in keep:
            keep[bid] = Button(bid, None) if b.on_click is not None else b
    layouts = []
    for lay in p.layouts:
        if lay.id in needed:
            buttons = tuple(b for b in lay.buttons if b.id in needed[lay.id])
            buttons = tuple(needed[lay.id][b.id] for b in buttons)
            layouts.append(LayoutResource(lay.id, buttons, lay.unit, lay.line))

    def strip(c: ClassDecl) -> ClassDecl:
        members = tuple(strip(m) if isinstance(m, ClassDecl) and not m.anonymous else m for m in c.members)
        layout = c.layout if c.layout in needed else None
        return ClassDecl(c.kind, c.name, members, layout, c.unit, c.line)

    return [strip(c) for c in classes], layouts


def synthesize_minimal_example(tag: str, p: Program, ledger: Ledger, witnesses: Mapping[str, Witness]) -> MinimalExample:
    """Skeleton keeping only the manifest entry, the witness call chain(s) and the mutant.

    Scope mutants keep every sibling sink (inner and outer level), so the
    nesting the mutant exercises survives.
    """
    rec = ledger.get(tag)
    if rec is None:
        raise SynthesisError(f"tag {tag!r} is not in the ledger")
    w = witnesses.get(tag)
    if w is None:
        raise SynthesisError(f"tag {tag!r} has no witness trace")
    records = [rec]
    if rec.scheme == "scope":
        records = [r for r in ledger.siblings(tag)]
    methods: set = set()
    for r in records:
        methods.add((r.source.cls, r.source.method))
        methods.update((s.cls, s.method) for s in r.sinks)
        rw = witnesses.get(r.tag)
        if rw is not None:
            for chain in _chains(p, r, rw):
                methods.update((f.cls, f.method) for f in chain)
                methods |= _constructors(p, chain)
    variables = set()
    for r in records:
        variables |= {r.var, _path_var(r.var)}
    slicer = _Slicer(p, methods, {r.tag for r in records}, variables)

    m = p.manifest
    classes = [slicer.cls(c, c.name) for c in p.classes if c.name in slicer.classes]
    activities = tuple(a for a in m.activities if a in slicer.classes)
    entry = m.entry if m.entry in slicer.classes else (activities[0] if activities else m.entry)
    if entry not in slicer.classes:
        shell = p.top_class(entry)
        classes.insert(0, ClassDecl(ClassKind.ACTIVITY, entry, (), None, shell.unit, shell.line))
        activities = (entry,) + activities
    receivers = tuple((r, a) for r, a in m.receivers if r in slicer.classes)
    classes, layouts = _layouts(p, slicer, classes)
    manifest = Manifest(entry, activities, receivers, m.unit, m.line)
    used = {manifest.unit} | {c.unit for c in classes} | {lay.unit for lay in layouts}
    skeleton = Program(manifest, tuple(classes), tuple(layouts), tuple(u for u in p.units if u in used))
    try:
        skeleton = parse_program(render_program(skeleton))
    except AppLangError as exc:
        raise SynthesisError(f"skeleton for {tag} does not validate: {exc}") from exc
    try:
        kept = relocate(skeleton, records)
    except LedgerError as exc:
        raise SynthesisError(f"mutant {tag} did not survive slicing: {exc}") from exc
    return MinimalExample(tag, skeleton, Ledger(tuple(kept), fingerprint(skeleton)))


def try_synthesize(tag: str, p: Program, ledger: Ledger, witnesses: Mapping[str, Witness]) -> Optional[MinimalExample]:
    try:
        return synthesize_minimal_example(tag, p, ledger, witnesses)
    except SynthesisError as exc:
        logger.warning("minimal example for %s needs manual synthesis: %s", tag, exc)
        return None
