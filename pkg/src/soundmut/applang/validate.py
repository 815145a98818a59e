"""Well-formedness checks run after parsing."""

from __future__ import annotations

from collections import Counter

from soundmut.applang.errors import AppLangError, Diagnostic
from soundmut.applang.index import INIT
from soundmut.applang.nodes import (
    Call,
    InitBlock,
    ClassKind,
    CryptoCall,
    CRYPTO_APIS,
    Program,
    RegisterReceiver,
    SetOnClick,
    SourceCall,
    SOURCE_APIS,
    VarDecl,
    Assign,
    Var,
    callback_set,
    iter_expr,
    stmt_exprs,
)
from soundmut.applang.scopes import class_symbols, walk_scoped


def validate_program(p: Program) -> None:
    diags: list[Diagnostic] = []

    def err(unit, line, msg):
        diags.append(Diagnostic(unit, line, 1, msg))

    m = p.manifest
    mu = m.unit
    top = Counter(c.name for c in p.classes)
    for name, n in top.items():
        if n > 1:
            err(mu, 0, f"duplicate class name {name!r}")
    if m.entry not in m.activities:
        err(mu, m.line, f"entry activity {m.entry!r} not listed as activity")
    for a in m.activities:
        c = p.top_class(a)
        if c is None:
            err(mu, m.line, f"manifest references undeclared class {a!r}")
        elif c.kind is not ClassKind.ACTIVITY:
            err(mu, m.line, f"manifest activity {a!r} is declared as {c.kind.value}")
    for r, action in m.receivers:
        c = p.top_class(r)
        if c is None:
            err(mu, m.line, f"manifest references undeclared class {r!r}")
        elif c.kind is not ClassKind.RECEIVER:
            err(mu, m.line, f"manifest receiver {r!r} is declared as {c.kind.value}")
        if not action:
            err(mu, m.line, "empty receiver action")
    for lid, n in Counter(lay.id for lay in p.layouts).items():
        if n > 1:
            err("", 0, f"duplicate layout {lid!r}")
    for lay in p.layouts:
        for bid, n in Counter(b.id for b in lay.buttons).items():
            if n > 1:
                err(lay.unit, lay.line, f"duplicate button {bid!r} in layout {lay.id!r}")
    if diags:
        raise AppLangError(diags)

    index = p.index
    for q, info in index.classes.items():
        decl = info.decl
        unit = info.unit
        names = Counter(n.name for n in decl.nested)
        for name, n in names.items():
            if n > 1:
                err(unit, decl.line, f"duplicate class name {name!r} in {q}")
        if decl.layout is not None and p.layout(decl.layout) is None:
            err(unit, decl.line, f"class {q} uses unknown layout {decl.layout!r}")
        for name, n in Counter(f.name for f in decl.fields).items():
            if n > 1:
                err(unit, decl.line, f"duplicate field {name!r} in {q}")
        for name, n in Counter(mm.name for mm in decl.methods).items():
            if n > 1:
                err(unit, decl.line, f"duplicate method {name!r} in {q}")
        if sum(1 for mm in decl.members if isinstance(mm, InitBlock)) > 1:
            err(unit, decl.line, f"more than one init block in {q}")
        allowed = callback_set(info.kind, info.anonymous)
        for mm in decl.methods:
            if mm.is_callback and mm.name not in allowed:
                err(unit, mm.line, f"{mm.name!r} is not a callback of {info.kind.value} {q}")
            if len(set(mm.params)) != len(mm.params):
                err(unit, mm.line, f"duplicate parameter in {q}.{mm.name}")
        if info.anonymous:
            if info.created_by == "registerReceiver" and info.kind is not ClassKind.RECEIVER:
                err(unit, decl.line, "registerReceiver expects an anonymous receiver")
            if info.created_by == "setOnClick" and info.kind is not ClassKind.LISTENER:
                err(unit, decl.line, "setOnClick expects an anonymous listener")
            if info.created_by in ("runOnUi", "submit", "startThread") and info.kind is not ClassKind.PLAIN:
                err(unit, decl.line, f"{info.created_by} expects an anonymous class")

        fenv = class_symbols(index, q)
        for f in decl.fields:
            if f.init is not None:
                _check_expr(f.init, fenv, unit, f.line, err)

        methods = [mm.name for mm in decl.methods] + ([INIT] if decl.init is not None else [])
        for mname in methods:
            for _path, s, env in walk_scoped(index, q, mname):
                line = getattr(s, "line", 0)
                for e in stmt_exprs(s):
                    _check_expr(e, env, unit, line, err)
                if isinstance(s, VarDecl):
                    prev = env.get(s.name)
                    if prev is not None and prev.kind in ("local", "param"):
                        err(unit, line, f"redeclaration of {s.name!r}")
                elif isinstance(s, Assign):
                    if s.name not in env:
                        err(unit, line, f"unresolved variable {s.name!r}")
                elif isinstance(s, Call):
                    owner = index.resolve_call(q, s.target, s.method)
                    if owner is None:
                        err(unit, line, f"unresolved call {s.target}.{s.method}")
                    else:
                        callee = index.classes[owner].decl.method(s.method)
                        if len(callee.params) != len(s.args):
                            err(unit, line, f"wrong number of arguments to {s.target}.{s.method}")
                elif isinstance(s, SetOnClick):
                    if index.resolve_button(q, s.button) is None:
                        err(unit, line, f"unknown button {s.button!r}")
                elif isinstance(s, RegisterReceiver) and not s.action:
                    err(unit, line, "empty receiver action")
    if diags:
        raise AppLangError(diags)


def _check_expr(e, env, unit, line, err):
    for x in iter_expr(e):
        if isinstance(x, Var) and x.name not in env:
            err(unit, line, f"unresolved variable {x.name!r}")
        elif isinstance(x, SourceCall) and x.api not in SOURCE_APIS:
            err(unit, line, f"unknown source API {x.api!r}")
        elif isinstance(x, CryptoCall) and x.api not in CRYPTO_APIS:
            err(unit, line, f"unknown crypto API {x.api!r}")
