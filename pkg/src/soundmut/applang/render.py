"""Canonical pretty-printer for AppLang programs."""

from __future__ import annotations

from soundmut.applang.nodes import (
    Assign,
    AsyncCall,
    Call,
    CharLoop,
    ClassDecl,
    Concat,
    CryptoCall,
    Expr,
    FieldDecl,
    If,
    InitBlock,
    LayoutResource,
    Log,
    Manifest,
    MethodDecl,
    Program,
    RegisterReceiver,
    Return,
    SetOnClick,
    SourceCall,
    Stmt,
    Str,
    Var,
    VarDecl,
)

INDENT = "  "


def quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def render_expr(e: Expr) -> str:
    if isinstance(e, Str):
        return quote(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Concat):
        right = render_expr(e.right)
        if isinstance(e.right, Concat):
            right = f"({right})"
        return f"{render_expr(e.left)} + {right}"
    if isinstance(e, CharLoop):
        return f"charLoop({render_expr(e.operand)})"
    if isinstance(e, SourceCall):
        return f"source.{e.api}()"
    if isinstance(e, CryptoCall):
        return f"crypto.{e.api}({render_expr(e.arg)})"
    raise TypeError(e)


def _block(body, depth: int, out: list[str]) -> None:
    for s in body:
        _stmt(s, depth, out)


def _anon(c: ClassDecl, depth: int, out: list[str]) -> None:
    for m in c.methods:
        _method(m, depth + 1, out)


def _stmt(s: Stmt, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    if isinstance(s, VarDecl):
        out.append(f"{pad}var {s.name} = {render_expr(s.init)};")
    elif isinstance(s, Assign):
        out.append(f"{pad}{s.name} = {render_expr(s.expr)};")
    elif isinstance(s, Call):
        args = ", ".join(render_expr(a) for a in s.args)
        out.append(f"{pad}{s.target}.{s.method}({args});")
    elif isinstance(s, Log):
        out.append(f"{pad}log({quote(s.tag)}, {render_expr(s.expr)});")
    elif isinstance(s, RegisterReceiver):
        out.append(f"{pad}registerReceiver(new {s.receiver.kind.value} {{")
        _anon(s.receiver, depth, out)
        out.append(f"{pad}}}, {quote(s.action)});")
    elif isinstance(s, SetOnClick):
        out.append(f"{pad}setOnClick({s.button}, new {s.listener.kind.value} {{")
        _anon(s.listener, depth, out)
        out.append(f"{pad}}});")
    elif isinstance(s, AsyncCall):
        out.append(f"{pad}{s.api}(new {s.closure.kind.value} {{")
        _anon(s.closure, depth, out)
        out.append(f"{pad}}});")
    elif isinstance(s, If):
        out.append(f"{pad}if ({s.cond}) {{")
        _block(s.then, depth + 1, out)
        if s.orelse is not None:
            out.append(f"{pad}}} else {{")
            _block(s.orelse, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, Return):
        out.append(f"{pad}return;" if s.expr is None else f"{pad}return {render_expr(s.expr)};")
    else:
        raise TypeError(s)


def _method(m: MethodDecl, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    prefix = "callback " if m.is_callback else ""
    out.append(f"{pad}{prefix}{m.name}({', '.join(m.params)}) {{")
    _block(m.body, depth + 1, out)
    out.append(f"{pad}}}")


def _class(c: ClassDecl, depth: int, out: list[str]) -> None:
    pad = INDENT * depth
    uses = f" uses {c.layout}" if c.layout else ""
    out.append(f"{pad}{c.kind.value} {c.name}{uses} {{")
    for m in c.members:
        if isinstance(m, FieldDecl):
            init = f" = {render_expr(m.init)}" if m.init is not None else ""
            out.append(f"{pad}{INDENT}var {m.name}{init};")
        elif isinstance(m, InitBlock):
            out.append(f"{pad}{INDENT}init {{")
            _block(m.body, depth + 2, out)
            out.append(f"{pad}{INDENT}}}")
        elif isinstance(m, MethodDecl):
            _method(m, depth + 1, out)
        else:
            _class(m, depth + 1, out)
    out.append(f"{pad}}}")


def _manifest(m: Manifest, out: list[str]) -> None:
    out.append("manifest {")
    out.append(f"{INDENT}entry {m.entry};")
    for a in m.activities:
        out.append(f"{INDENT}activity {a};")
    for r, action in m.receivers:
        out.append(f"{INDENT}receiver {r} on {quote(action)};")
    out.append("}")


def _layout(lay: LayoutResource, out: list[str]) -> None:
    out.append(f"layout {lay.id} {{")
    for b in lay.buttons:
        binding = f" onClick = {quote(b.on_click)}" if b.on_click is not None else ""
        out.append(f"{INDENT}button {b.id}{binding};")
    out.append("}")


def render_program(p: Program) -> dict[str, str]:
    """Render every unit of ``p``; output is deterministic and re-parseable."""
    result: dict[str, str] = {}
    for unit in p.units:
        chunks: list[list[str]] = []
        if p.manifest.unit == unit:
            chunk: list[str] = []
            _manifest(p.manifest, chunk)
            chunks.append(chunk)
        for lay in p.layouts:
            if lay.unit == unit:
                chunk = []
                _layout(lay, chunk)
                chunks.append(chunk)
        for c in p.classes:
            if c.unit == unit:
                chunk = []
                _class(c, 0, chunk)
                chunks.append(chunk)
        result[unit] = "\n\n".join("\n".join(ch) for ch in chunks) + "\n"
    return result
