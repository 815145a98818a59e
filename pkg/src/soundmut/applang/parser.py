"""Recursive-descent parser for AppLang source units."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

from soundmut.applang.errors import AppLangError, Diagnostic
from soundmut.applang.nodes import (
    ASYNC_APIS,
    CONDITIONS,
    Assign,
    AsyncCall,
    Button,
    Call,
    CharLoop,
    ClassDecl,
    ClassKind,
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

KIND_WORDS = {k.value: k for k in ClassKind}
RESERVED = {
    "manifest", "entry", "layout", "button", "var", "if", "else", "return", "log",
    "source", "crypto", "charLoop", "new", "callback", "this", "init", "uses",
    "registerReceiver", "setOnClick", *ASYNC_APIS, *CONDITIONS, *KIND_WORDS,
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}();,=+.])
    """,
    re.VERBOSE,
)

_UNESCAPE = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # name | string | punct | eof
    text: str
    line: int
    col: int

    @property
    def value(self) -> str:
        if self.kind != "string":
            return self.text
        body = self.text[1:-1]
        return re.sub(r"\\(.)", lambda m: _UNESCAPE.get(m.group(1), m.group(1)), body)


def tokenize(text: str, unit: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise AppLangError(
                [Diagnostic(unit, line, pos - line_start + 1, f"unexpected character {text[pos]!r}")]
            )
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind in ("string", "name", "punct"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, unit: str):
        self.unit = unit
        self.toks = tokenize(text, unit)
        self.i = 0

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None) -> AppLangError:
        t = tok or self.tok
        return AppLangError([Diagnostic(self.unit, t.line, t.col, msg)])

    def at(self, text: str) -> bool:
        return self.tok.kind in ("name", "punct") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self) -> str:
        t = self.tok
        if t.kind != "name" or t.text in RESERVED:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def string(self) -> str:
        t = self.tok
        if t.kind != "string":
            raise self.error(f"expected string literal, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.value

    # -- top level -----------------------------------------------------
    def unit_items(self):
        manifests, layouts, classes = [], [], []
        while self.tok.kind != "eof":
            if self.at("manifest"):
                manifests.append(self.manifest())
            elif self.at("layout"):
                layouts.append(self.layout())
            elif self.tok.text in KIND_WORDS:
                classes.append(self.class_decl())
            else:
                raise self.error(f"expected manifest, layout or class declaration, found {self.tok.text!r}")
        return manifests, layouts, classes

    def manifest(self) -> Manifest:
        line = self.expect("manifest").line
        self.expect("{")
        self.expect("entry")
        entry = self.name()
        self.expect(";")
        activities, receivers = [], []
        while self.at("activity"):
            self.i += 1
            activities.append(self.name())
            self.expect(";")
        while self.at("receiver"):
            self.i += 1
            rname = self.name()
            self.expect("on")
            receivers.append((rname, self.string()))
            self.expect(";")
        self.expect("}")
        return Manifest(entry, tuple(activities), tuple(receivers), self.unit, line)

    def layout(self) -> LayoutResource:
        line = self.expect("layout").line
        lid = self.name()
        self.expect("{")
        buttons = []
        while self.at("button"):
            self.i += 1
            bid = self.name()
            binding = None
            if self.at("onClick"):
                self.i += 1
                self.expect("=")
                binding = self.string()
            self.expect(";")
            buttons.append(Button(bid, binding))
        self.expect("}")
        return LayoutResource(lid, tuple(buttons), self.unit, line)

    def class_decl(self) -> ClassDecl:
        t = self.tok
        kind = KIND_WORDS[t.text]
        self.i += 1
        cname = self.name()
        layout = None
        if self.at("uses"):
            self.i += 1
            layout = self.name()
        self.expect("{")
        members = []
        while not self.at("}"):
            members.append(self.member())
        self.expect("}")
        return ClassDecl(kind, cname, tuple(members), layout, self.unit, t.line)

    def member(self):
        t = self.tok
        if self.at("var"):
            self.i += 1
            fname = self.name()
            init = None
            if self.at("="):
                self.i += 1
                init = self.expr()
            self.expect(";")
            return FieldDecl(fname, init, t.line)
        if self.at("init"):
            self.i += 1
            return InitBlock(self.block(), t.line)
        if t.text in KIND_WORDS:
            return self.class_decl()
        return self.method()

    def method(self) -> MethodDecl:
        line = self.tok.line
        is_cb = False
        if self.at("callback"):
            self.i += 1
            is_cb = True
        mname = self.name()
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.name())
            while self.at(","):
                self.i += 1
                params.append(self.name())
        self.expect(")")
        return MethodDecl(mname, tuple(params), self.block(), is_cb, line)

    def anon_class(self) -> ClassDecl:
        t = self.expect("new")
        if self.tok.text not in KIND_WORDS:
            raise self.error("expected class kind after 'new'")
        kind = KIND_WORDS[self.tok.text]
        self.i += 1
        self.expect("{")
        methods = []
        while not self.at("}"):
            methods.append(self.method())
        self.expect("}")
        return ClassDecl(kind, None, tuple(methods), None, self.unit, t.line)

    # -- statements ----------------------------------------------------
    def block(self) -> tuple[Stmt, ...]:
        self.expect("{")
        body = []
        while not self.at("}"):
            body.append(self.stmt())
        self.expect("}")
        return tuple(body)

    def stmt(self) -> Stmt:
        t = self.tok
        line = t.line
        if self.at("var"):
            self.i += 1
            vname = self.name()
            self.expect("=")
            init = self.expr()
            self.expect(";")
            return VarDecl(vname, init, line)
        if self.at("log"):
            self.i += 1
            self.expect("(")
            tag = self.string()
            self.expect(",")
            e = self.expr()
            self.expect(")")
            self.expect(";")
            return Log(tag, e, line)
        if self.at("registerReceiver"):
            self.i += 1
            self.expect("(")
            anon = self.anon_class()
            self.expect(",")
            action = self.string()
            self.expect(")")
            self.expect(";")
            return RegisterReceiver(anon, action, line)
        if self.at("setOnClick"):
            self.i += 1
            self.expect("(")
            bid = self.name()
            self.expect(",")
            anon = self.anon_class()
            self.expect(")")
            self.expect(";")
            return SetOnClick(bid, anon, line)
        if t.kind == "name" and t.text in ASYNC_APIS:
            self.i += 1
            self.expect("(")
            anon = self.anon_class()
            self.expect(")")
            self.expect(";")
            return AsyncCall(t.text, anon, line)
        if self.at("if"):
            self.i += 1
            self.expect("(")
            if self.tok.text not in CONDITIONS:
                raise self.error("branch condition must be true, false or unknown")
            cond = self.tok.text
            self.i += 1
            self.expect(")")
            then = self.block()
            orelse = None
            if self.at("else"):
                self.i += 1
                orelse = self.block()
            return If(cond, then, orelse, line)
        if self.at("return"):
            self.i += 1
            e = None
            if not self.at(";"):
                e = self.expr()
            self.expect(";")
            return Return(e, line)
        if t.kind == "name" and self.peek().text == "." and (t.text == "this" or t.text not in RESERVED):
            target = t.text
            self.i += 2
            mname = self.name()
            self.expect("(")
            args = []
            if not self.at(")"):
                args.append(self.expr())
                while self.at(","):
                    self.i += 1
                    args.append(self.expr())
            self.expect(")")
            self.expect(";")
            return Call(target, mname, tuple(args), line)
        if t.kind == "name" and self.peek().text == "=":
            vname = self.name()
            self.expect("=")
            e = self.expr()
            self.expect(";")
            return Assign(vname, e, line)
        raise self.error(f"expected statement, found {t.text or 'end of input'!r}")

    # -- expressions ---------------------------------------------------
    def expr(self) -> Expr:
        e = self.primary()
        while self.at("+"):
            self.i += 1
            e = Concat(e, self.primary())
        return e

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "string":
            self.i += 1
            return Str(t.value)
        if self.at("source"):
            self.i += 1
            self.expect(".")
            api = self.tok.text
            if self.tok.kind != "name":
                raise self.error("expected source API name")
            self.i += 1
            self.expect("(")
            self.expect(")")
            return SourceCall(api)
        if self.at("crypto"):
            self.i += 1
            self.expect(".")
            api = self.tok.text
            if self.tok.kind != "name":
                raise self.error("expected crypto API name")
            self.i += 1
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return CryptoCall(api, arg)
        if self.at("charLoop"):
            self.i += 1
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return CharLoop(e)
        if self.at("("):
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        return Var(self.name())


def parse_unit(text: str, unit: str):
    """Parse one text unit into (manifests, layouts, classes) without validation."""
    return _Parser(text, unit).unit_items()


def parse_program(files: Mapping[str, str], validate: bool = True) -> Program:
    """Parse named text units into a validated :class:`Program`.

    Raises :class:`AppLangError` carrying every diagnostic found.
    """
    from soundmut.applang.validate import validate_program

    diags: list[Diagnostic] = []
    manifests, layouts, classes = [], [], []
    for unit in files:
        try:
            ms, ls, cs = parse_unit(files[unit], unit)
        except AppLangError as exc:
            diags.extend(exc.diagnostics)
            continue
        manifests += ms
        layouts += ls
        classes += cs
    if diags:
        raise AppLangError(diags)
    if not manifests:
        raise AppLangError([Diagnostic("", 0, 0, "no manifest")])
    if len(manifests) > 1:
        m = manifests[1]
        raise AppLangError([Diagnostic(m.unit, m.line, 1, "more than one manifest")])
    program = Program(manifests[0], tuple(classes), tuple(layouts), tuple(files))
    if validate:
        validate_program(program)
    return program
