"""Structural index over a parsed program.

Assigns qualified names to every class (nested named classes are
``Outer.Inner``, anonymous classes ``Outer$1`` numbered in pre-order per
enclosing class), records lexical parents and the API that created each
anonymous class, and answers name-resolution queries shared by the
validator, the interpreter and the detectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from soundmut.applang.nodes import (
    ClassDecl,
    ClassKind,
    FieldDecl,
    If,
    MethodDecl,
    Program,
    Stmt,
    anon_class_of,
    callback_set,
    registration_api,
)

INIT = "<init>"


@dataclass(frozen=True)
class ClassInfo:
    qualname: str
    decl: ClassDecl
    parent: Optional[str]
    # anonymous classes only: creating API and the (class, method) that creates it
    created_by: Optional[str] = None
    creator: Optional[tuple[str, str]] = None
    unit: str = ""
    depth: int = 0

    @property
    def kind(self) -> ClassKind:
        return self.decl.kind

    @property
    def anonymous(self) -> bool:
        return self.decl.anonymous


@dataclass(frozen=True)
class MethodInfo:
    cls: str
    decl: MethodDecl

    @property
    def key(self) -> tuple[str, str]:
        return (self.cls, self.decl.name)


class ProgramIndex:
    def __init__(self, program: Program):
        self.program = program
        self.classes: dict[str, ClassInfo] = {}
        self.methods: dict[tuple[str, str], MethodInfo] = {}
        self._anon_by_id: dict[int, str] = {}
        for c in program.classes:
            self._add_class(c, c.name, None, None, None, c.unit, 0)

    def _add_class(self, decl, qualname, parent, created_by, creator, unit, depth):
        self.classes[qualname] = ClassInfo(qualname, decl, parent, created_by, creator, unit, depth)
        counter = [0]
        for m in decl.members:
            if isinstance(m, ClassDecl):
                self._add_class(m, f"{qualname}.{m.name}", qualname, None, None, unit, depth + 1)
            elif isinstance(m, MethodDecl):
                self.methods[(qualname, m.name)] = MethodInfo(qualname, m)
                self._scan_body(m.body, qualname, m.name, counter, unit, depth)
            elif hasattr(m, "body"):  # init block
                self._scan_body(m.body, qualname, INIT, counter, unit, depth)

    def _scan_body(self, body, qualname, mname, counter, unit, depth):
        for s in body:
            anon = anon_class_of(s)
            if anon is not None:
                counter[0] += 1
                aq = f"{qualname}${counter[0]}"
                self._anon_by_id[id(anon)] = aq
                self._add_class(anon, aq, qualname, registration_api(s), (qualname, mname), unit, depth + 1)
            elif isinstance(s, If):
                self._scan_body(s.then, qualname, mname, counter, unit, depth)
                if s.orelse is not None:
                    self._scan_body(s.orelse, qualname, mname, counter, unit, depth)

    # ------------------------------------------------------------------
    # queries

    def anon_name(self, decl: ClassDecl) -> str:
        return self._anon_by_id[id(decl)]

    def ancestors(self, qualname: str) -> Iterator[str]:
        """The class itself followed by its lexical ancestors, innermost first."""
        q: Optional[str] = qualname
        while q is not None:
            yield q
            q = self.classes[q].parent

    def named_owner(self, qualname: str) -> str:
        """Nearest class in the lexical chain that can hold fields (i.e. is named)."""
        for q in self.ancestors(qualname):
            if not self.classes[q].anonymous:
                return q
        raise KeyError(qualname)

    def field_owner(self, qualname: str, name: str) -> Optional[str]:
        for q in self.ancestors(qualname):
            for f in self.classes[q].decl.fields:
                if f.name == name:
                    return q
        return None

    def resolve_class(self, context: str, name: str) -> Optional[str]:
        for q in self.ancestors(context):
            for n in self.classes[q].decl.nested:
                if n.name == name:
                    return f"{q}.{n.name}"
        if self.program.top_class(name) is not None:
            return name
        return None

    def resolve_call(self, context: str, target: str, method: str) -> Optional[str]:
        """Qualified class owning the called method, or None."""
        if target == "this":
            for q in self.ancestors(context):
                if self.classes[q].decl.method(method) is not None:
                    return q
            return None
        q = self.resolve_class(context, target)
        if q is not None and self.classes[q].decl.method(method) is not None:
            return q
        return None

    def resolve_button(self, context: str, button: str) -> Optional[str]:
        """Layout id holding ``button`` among the layouts used along the lexical chain."""
        for q in self.ancestors(context):
            lid = self.classes[q].decl.layout
            if lid is None:
                continue
            lay = self.program.layout(lid)
            if lay is not None and lay.button(button) is not None:
                return lid
        return None

    def resolve_binding(self, context: str, method: str) -> Optional[str]:
        for q in self.ancestors(context):
            if self.classes[q].decl.method(method) is not None:
                return q
        return None

    def callback_kind(self, cls: str, method: str) -> Optional[str]:
        if method == INIT:
            return None
        info = self.classes[cls]
        m = info.decl.method(method)
        if m is None or not m.is_callback:
            return None
        return m.name if m.name in callback_set(info.kind, info.anonymous) else None

    def attached_fragments(self, activity: str) -> list[str]:
        info = self.classes[activity]
        return [f"{activity}.{n.name}" for n in info.decl.nested if n.kind is ClassKind.FRAGMENT]

    def is_anon_in_anon(self, qualname: str) -> bool:
        info = self.classes[qualname]
        return info.anonymous and info.parent is not None and self.classes[info.parent].anonymous

    def body_of(self, cls: str, method: str) -> tuple[Stmt, ...]:
        decl = self.classes[cls].decl
        if method == INIT:
            init = decl.init
            return init.body if init is not None else ()
        m = decl.method(method)
        return m.body if m is not None else ()

    def field_decls(self, cls: str) -> tuple[FieldDecl, ...]:
        return self.classes[cls].decl.fields

    def preorder_classes(self) -> list[str]:
        return list(self.classes)

    def all_methods(self) -> list[tuple[str, str]]:
        """(class, method) pairs in AST pre-order (class order, then member order)."""
        out = []
        for q, info in self.classes.items():
            for m in info.decl.methods:
                out.append((q, m.name))
        return out

    def unit_of(self, cls: str) -> str:
        return self.classes[cls].unit
