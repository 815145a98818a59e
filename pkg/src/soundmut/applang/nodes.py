"""AST node types for AppLang programs.

All nodes are frozen dataclasses. Source positions (``line``) are excluded
from equality so that structurally identical programs compare equal
regardless of formatting.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Optional, Union


class ClassKind(str, enum.Enum):
    ACTIVITY = "activity"
    FRAGMENT = "fragment"
    RECEIVER = "receiver"
    LISTENER = "listener"
    PLAIN = "class"


ACTIVITY_LIFECYCLE = ("onCreate", "onStart", "onResume", "onPause", "onStop", "onDestroy")
FRAGMENT_LIFECYCLE = ("onCreate", "onCreateView", "onDestroyView")

CALLBACKS: dict[ClassKind, tuple[str, ...]] = {
    ClassKind.ACTIVITY: ACTIVITY_LIFECYCLE,
    ClassKind.FRAGMENT: FRAGMENT_LIFECYCLE,
    ClassKind.RECEIVER: ("onReceive",),
    ClassKind.LISTENER: ("onClick",),
    ClassKind.PLAIN: (),
}
# anonymous plain classes are the closures handed to runOnUi/submit/startThread
CLOSURE_CALLBACKS = ("run",)

ASYNC_APIS = ("runOnUi", "submit", "startThread")
CONDITIONS = ("true", "false", "unknown")

SOURCE_APIS = ("timezone", "imei", "location", "deviceId", "contacts")
CRYPTO_APIS = ("getCipher", "getDigest")
WEAK_CRYPTO_PARAMS = ("AES", "DES", "MD5", "RC4", "AES/ECB/PKCS5Padding")


def callback_set(kind: ClassKind, anonymous: bool) -> tuple[str, ...]:
    if kind is ClassKind.PLAIN and anonymous:
        return CLOSURE_CALLBACKS
    return CALLBACKS[kind]


# --------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Str:
    value: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Concat:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class CharLoop:
    """Rebuilds a string one character at a time (complex-path transformation)."""

    operand: "Expr"


@dataclass(frozen=True)
class SourceCall:
    api: str


@dataclass(frozen=True)
class CryptoCall:
    api: str
    arg: "Expr"


Expr = Union[Str, Var, Concat, CharLoop, SourceCall, CryptoCall]


def iter_expr(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Concat):
        yield from iter_expr(e.left)
        yield from iter_expr(e.right)
    elif isinstance(e, CharLoop):
        yield from iter_expr(e.operand)
    elif isinstance(e, CryptoCall):
        yield from iter_expr(e.arg)


def expr_names(e: Expr) -> set[str]:
    return {x.name for x in iter_expr(e) if isinstance(x, Var)}


# --------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class VarDecl:
    name: str
    init: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assign:
    name: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    target: str  # "this" or a class name
    method: str
    args: tuple[Expr, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Log:
    tag: str
    expr: Expr
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RegisterReceiver:
    receiver: "ClassDecl"
    action: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class SetOnClick:
    button: str
    listener: "ClassDecl"
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class AsyncCall:
    api: str
    closure: "ClassDecl"
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class If:
    cond: str
    then: tuple["Stmt", ...]
    orelse: Optional[tuple["Stmt", ...]] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Return:
    expr: Optional[Expr] = None
    line: int = field(default=0, compare=False)


Stmt = Union[VarDecl, Assign, Call, Log, RegisterReceiver, SetOnClick, AsyncCall, If, Return]


def anon_class_of(s: Stmt) -> Optional["ClassDecl"]:
    if isinstance(s, RegisterReceiver):
        return s.receiver
    if isinstance(s, SetOnClick):
        return s.listener
    if isinstance(s, AsyncCall):
        return s.closure
    return None


def registration_api(s: Stmt) -> Optional[str]:
    if isinstance(s, RegisterReceiver):
        return "registerReceiver"
    if isinstance(s, SetOnClick):
        return "setOnClick"
    if isinstance(s, AsyncCall):
        return s.api
    return None


def walk_stmts(body: tuple[Stmt, ...]) -> Iterator[Stmt]:
    """Pre-order walk over a block, descending into if-arms but not anonymous classes."""
    for s in body:
        yield s
        if isinstance(s, If):
            yield from walk_stmts(s.then)
            if s.orelse is not None:
                yield from walk_stmts(s.orelse)


def stmt_exprs(s: Stmt) -> tuple[Expr, ...]:
    if isinstance(s, (VarDecl,)):
        return (s.init,)
    if isinstance(s, (Assign, Log)):
        return (s.expr,)
    if isinstance(s, Call):
        return s.args
    if isinstance(s, Return) and s.expr is not None:
        return (s.expr,)
    return ()


# --------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class FieldDecl:
    name: str
    init: Optional[Expr] = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class InitBlock:
    body: tuple[Stmt, ...]
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]
    is_callback: bool = False
    line: int = field(default=0, compare=False)

    @property
    def callback_kind(self) -> Optional[str]:
        return self.name if self.is_callback else None


Member = Union[FieldDecl, InitBlock, MethodDecl, "ClassDecl"]


@dataclass(frozen=True)
class ClassDecl:
    kind: ClassKind
    name: Optional[str]  # None for anonymous classes
    members: tuple[Member, ...] = ()
    layout: Optional[str] = None
    unit: str = ""
    line: int = field(default=0, compare=False)

    @property
    def anonymous(self) -> bool:
        return self.name is None

    @property
    def fields(self) -> tuple[FieldDecl, ...]:
        return tuple(m for m in self.members if isinstance(m, FieldDecl))

    @property
    def methods(self) -> tuple[MethodDecl, ...]:
        return tuple(m for m in self.members if isinstance(m, MethodDecl))

    @property
    def nested(self) -> tuple["ClassDecl", ...]:
        return tuple(m for m in self.members if isinstance(m, ClassDecl))

    @property
    def init(self) -> Optional[InitBlock]:
        for m in self.members:
            if isinstance(m, InitBlock):
                return m
        return None

    def method(self, name: str) -> Optional[MethodDecl]:
        for m in self.members:
            if isinstance(m, MethodDecl) and m.name == name:
                return m
        return None


@dataclass(frozen=True)
class Button:
    id: str
    on_click: Optional[str] = None


@dataclass(frozen=True)
class LayoutResource:
    id: str
    buttons: tuple[Button, ...] = ()
    unit: str = ""
    line: int = field(default=0, compare=False)

    def button(self, bid: str) -> Optional[Button]:
        for b in self.buttons:
            if b.id == bid:
                return b
        return None


@dataclass(frozen=True)
class Manifest:
    entry: str
    activities: tuple[str, ...]
    receivers: tuple[tuple[str, str], ...] = ()
    unit: str = ""
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Program:
    manifest: Manifest
    classes: tuple[ClassDecl, ...]
    layouts: tuple[LayoutResource, ...]
    units: tuple[str, ...]

    @cached_property
    def index(self) -> "ProgramIndex":
        from soundmut.applang.index import ProgramIndex

        return ProgramIndex(self)

    def layout(self, lid: str) -> Optional[LayoutResource]:
        for lay in self.layouts:
            if lay.id == lid:
                return lay
        return None

    def top_class(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None
