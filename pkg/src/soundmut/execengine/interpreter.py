"""Concrete interpreter for AppLang with an Android-like event loop.

Values are strings carrying dynamic taint labels. A ``log`` statement
produces an observation only when the logged value actually carries
source data (or a weak-crypto result), so an executed-but-clean sink does
not count as a leak.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from soundmut.applang import INIT, Program
from soundmut.applang.nodes import (
    WEAK_CRYPTO_PARAMS,
    Assign,
    AsyncCall,
    Call,
    CharLoop,
    Concat,
    CryptoCall,
    Expr,
    If,
    Log,
    RegisterReceiver,
    Return,
    SetOnClick,
    SourceCall,
    Str,
    Var,
    VarDecl,
)
from soundmut.execengine import events as ev
from soundmut.execengine.events import Event
from soundmut.execengine.trace import Chain, ExecutionTrace, Fault, Frame, Observation, SourceHit

logger = logging.getLogger(__name__)

SRC = "src"
MISUSE = "misuse"
LEAKING = frozenset({SRC, MISUSE})
MAX_CALL_DEPTH = 32

Chooser = Callable[[str, str, int], bool]


@dataclass(frozen=True)
class Value:
    text: str
    labels: frozenset = frozenset()


EMPTY = Value("")


class RuntimeFault(Exception):
    pass


@dataclass
class EnvState:
    """Everything one run mutates; a fresh instance per program run."""

    stage: dict[str, str] = field(default_factory=dict)  # activity -> resumed|stopped|destroyed
    current: Optional[str] = None
    fields: dict[tuple[str, str], Value] = field(default_factory=dict)
    instances: set[str] = field(default_factory=set)
    receivers: dict[tuple[str, str], Chain] = field(default_factory=dict)  # (anon class, action) -> origin
    listeners: dict[tuple[str, str], tuple[str, Chain]] = field(default_factory=dict)  # (layout, button)
    queue: list[tuple[str, Chain]] = field(default_factory=list)

    def copy(self) -> "EnvState":
        return EnvState(dict(self.stage), self.current, dict(self.fields), set(self.instances),
                        dict(self.receivers), dict(self.listeners), list(self.queue))

    def key(self) -> tuple:
        """Canonical behavioural state (origins are bookkeeping, not behaviour)."""
        return (
            tuple(sorted(self.stage.items())),
            self.current,
            tuple(sorted((k, v.text, tuple(sorted(v.labels))) for k, v in self.fields.items())),
            tuple(sorted(self.instances)),
            tuple(sorted(self.receivers)),
            tuple(sorted((k, v[0]) for k, v in self.listeners.items())),
            tuple(q for q, _ in self.queue),
        )

    def digest(self) -> str:
        return hashlib.sha256(repr(self.key()).encode()).hexdigest()[:16]


class _Return(Exception):
    def __init__(self, value: Value):
        self.value = value


@dataclass
class _Ctx:
    cls: str
    method: str
    chain: Chain
    scopes: list[dict[str, Value]]
    depth: int


class Interpreter:
    """Fires events against an :class:`EnvState`, appending to a trace."""

    def __init__(self, program: Program, env: Optional[EnvState] = None):
        self.program = program
        self.index = program.index
        self.env = env if env is not None else EnvState()
        self._static_receivers: dict[str, list[str]] = {}
        for cls, action in program.manifest.receivers:
            self._static_receivers.setdefault(action, []).append(cls)
        self._trace: Optional[ExecutionTrace] = None
        self._step = 0
        self._chooser: Chooser = lambda c, m, line: False

    # ------------------------------------------------------------------
    # event surface

    def layouts_of(self, activity: str) -> list[tuple[str, str]]:
        """(layout id, using class) pairs visible while ``activity`` is resumed."""
        out = []
        for q in [activity] + self.index.attached_fragments(activity):
            lid = self.index.classes[q].decl.layout
            if lid is not None and all(lid != l for l, _ in out):
                out.append((lid, q))
        return out

    def enabled(self) -> list[Event]:
        env = self.env
        out: list[Event] = []
        for a in self.program.manifest.activities:
            if env.current != a:
                out.append(ev.launch(a))
        if env.current is not None:
            for t in ev.TRANSITIONS:
                out.append(ev.lifecycle(env.current, t))
            for lid, user in self.layouts_of(env.current):
                for b in self.program.layout(lid).buttons:
                    if self._click_target(lid, b.id, user) is not None:
                        out.append(ev.click(lid, b.id))
        actions: list[str] = []
        for _, action in self.program.manifest.receivers:
            if action not in actions:
                actions.append(action)
        for _, action in env.receivers:
            if action not in actions:
                actions.append(action)
        out.extend(ev.broadcast(a) for a in actions)
        if env.queue:
            out.append(ev.drain())
        return out

    def _click_target(self, lid: str, button: str, user: str) -> Optional[tuple[str, str, Chain]]:
        dyn = self.env.listeners.get((lid, button))
        if dyn is not None:
            return dyn[0], "onClick", dyn[1]
        b = self.program.layout(lid).button(button)
        if b is None or b.on_click is None:
            return None
        owner = self.index.resolve_binding(user, b.on_click)
        if owner is None:
            return None
        return owner, b.on_click, ()

    def fire(self, event: Event, trace: ExecutionTrace, chooser: Chooser) -> None:
        """Fire one event; the event is appended to ``trace`` first."""
        trace.events.append(event)
        self._trace = trace
        self._step = len(trace.events)
        made: list[bool] = []

        def choose(c, m, line):
            b = bool(chooser(c, m, line))
            made.append(b)
            return b

        self._chooser = choose
        try:
            self._dispatch(event)
        finally:
            trace.choices.append(tuple(made))
            trace.state_hash = self.env.digest()
            self._trace = None

    def _dispatch(self, e: Event) -> None:
        env = self.env
        if e.kind == ev.LAUNCH:
            a = e.a
            prev = env.current
            if prev is not None and prev != a:
                self._callback(prev, "onPause", ev.LAUNCH)
                self._callback(prev, "onStop", ev.LAUNCH)
                env.stage[prev] = "stopped"
                env.current = None
            if prev == a:
                return
            if env.stage.get(a) == "stopped":
                self._callback(a, "onStart", ev.LAUNCH)
                self._callback(a, "onResume", ev.LAUNCH)
            else:
                self._instantiate(a, (), ev.LAUNCH)
                self._callback(a, "onCreate", ev.LAUNCH)
                for frag in self.index.attached_fragments(a):
                    self._instantiate(frag, (), "attach")
                    self._callback(frag, "onCreate", "attach")
                    self._callback(frag, "onCreateView", "attach")
                self._callback(a, "onStart", ev.LAUNCH)
                self._callback(a, "onResume", ev.LAUNCH)
            env.stage[a] = "resumed"
            env.current = a
        elif e.kind == ev.LIFECYCLE:
            a, t = e.a, e.b
            if env.current != a:
                return
            if t == "pauseResume":
                seq = ["onPause", "onResume"]
            elif t == "stopRestart":
                seq = ["onPause", "onStop", "onStart", "onResume"]
            else:
                seq = ["onPause", "onStop"]
            for m in seq:
                self._callback(a, m, ev.LIFECYCLE)
            if t == "destroy":
                for frag in self.index.attached_fragments(a):
                    self._callback(frag, "onDestroyView", ev.LIFECYCLE)
                self._callback(a, "onDestroy", ev.LIFECYCLE)
                env.stage[a] = "destroyed"
                env.current = None
        elif e.kind == ev.CLICK:
            if env.current is None:
                return
            users = dict(self.layouts_of(env.current))
            if e.a not in users:
                return
            target = self._click_target(e.a, e.b, users[e.a])
            if target is None:
                return
            cls, m, origin = target
            if not self.index.classes[cls].anonymous:
                self._ensure(cls, origin)
            self._invoke(cls, m, [], origin, ev.CLICK, 0)
        elif e.kind == ev.BROADCAST:
            for r in self._static_receivers.get(e.a, []):
                self._instantiate(r, (), ev.BROADCAST)
                self._callback(r, "onReceive", ev.BROADCAST)
            for (anon, action), origin in list(env.receivers.items()):
                if action == e.a:
                    self._invoke(anon, "onReceive", [], origin, ev.BROADCAST, 0)
        elif e.kind == ev.DRAIN:
            batch, env.queue = env.queue, []
            for anon, origin in batch:
                self._invoke(anon, "run", [], origin, "drain", 0)

    # ------------------------------------------------------------------
    # classes and methods

    def _callback(self, cls: str, method: str, via: str) -> None:
        if self.index.callback_kind(cls, method) is not None:
            self._invoke(cls, method, [], (), via, 0)

    def _ensure(self, cls: str, chain: Chain) -> None:
        if cls not in self.env.instances:
            self._instantiate(cls, chain, "init")

    def _instantiate(self, cls: str, chain: Chain, via: str) -> None:
        """Run field initialisers then the init block of ``cls``."""
        info = self.index.classes[cls]
        self.env.instances.add(cls)
        frames = chain + (Frame(cls, INIT, self._step, via),)
        ctx = _Ctx(cls, INIT, frames, [{}], len(chain))
        for f in info.decl.fields:
            self._hit(info.unit, f.line, frames)
            self.env.fields[(cls, f.name)] = self._eval(f.init, ctx) if f.init is not None else EMPTY
        init = info.decl.init
        if init is not None:
            try:
                self._block(init.body, ctx)
            except _Return:
                pass

    def _invoke(self, cls: str, method: str, args: list[Value], chain: Chain, via: str, depth: int) -> Value:
        if depth >= MAX_CALL_DEPTH:
            raise RuntimeFault(f"call depth {MAX_CALL_DEPTH} exceeded calling {cls}.{method}")
        decl = self.index.classes[cls].decl.method(method)
        frames = chain + (Frame(cls, method, self._step, via),)
        ctx = _Ctx(cls, method, frames, [dict(zip(decl.params, args))], depth)
        try:
            self._block(decl.body, ctx)
        except _Return as r:
            return r.value
        return EMPTY

    # ------------------------------------------------------------------
    # statements

    def _block(self, body, ctx: _Ctx) -> None:
        for s in body:
            try:
                self._stmt(s, ctx)
            except RuntimeFault as exc:
                unit = self.index.unit_of(ctx.cls)
                self._trace.faults.append(Fault(self._step, unit, s.line, str(exc)))
                logger.debug("runtime fault at %s:%d: %s", unit, s.line, exc)

    def _hit(self, unit: str, line: int, chain: Chain) -> None:
        key = (unit, line)
        if key not in self._trace.source_hits:
            self._trace.source_hits[key] = SourceHit(unit, line, self._step, chain)

    def _stmt(self, s, ctx: _Ctx) -> None:
        env = self.env
        if isinstance(s, VarDecl):
            self._hit(self.index.unit_of(ctx.cls), s.line, ctx.chain)
            ctx.scopes[-1][s.name] = self._eval(s.init, ctx) if s.init is not None else EMPTY
        elif isinstance(s, Assign):
            self._hit(self.index.unit_of(ctx.cls), s.line, ctx.chain)
            v = self._eval(s.expr, ctx)
            for scope in reversed(ctx.scopes):
                if s.name in scope:
                    scope[s.name] = v
                    return
            owner = self.index.field_owner(ctx.cls, s.name)
            if owner is None:
                raise RuntimeFault(f"assignment to unknown name {s.name!r}")
            self._ensure(owner, ctx.chain)
            env.fields[(owner, s.name)] = v
        elif isinstance(s, Call):
            q = self.index.resolve_call(ctx.cls, s.target, s.method)
            if q is None:
                raise RuntimeFault(f"cannot resolve {s.target}.{s.method}")
            args = [self._eval(a, ctx) for a in s.args]
            if s.target != "this":
                self._ensure(q, ctx.chain)
            self._invoke(q, s.method, args, ctx.chain, "call", ctx.depth + 1)
        elif isinstance(s, Log):
            v = self._eval(s.expr, ctx)
            if v.labels & LEAKING:
                self._trace.observations.append(Observation(s.tag, self._step, ctx.chain))
        elif isinstance(s, RegisterReceiver):
            anon = self.index.anon_name(s.receiver)
            env.receivers.setdefault((anon, s.action), ctx.chain)
        elif isinstance(s, SetOnClick):
            anon = self.index.anon_name(s.listener)
            lid = self.index.resolve_button(ctx.cls, s.button)
            env.listeners[(lid, s.button)] = (anon, ctx.chain)
        elif isinstance(s, AsyncCall):
            env.queue.append((self.index.anon_name(s.closure), ctx.chain))
        elif isinstance(s, If):
            if s.cond == "true":
                taken = True
            elif s.cond == "false":
                taken = False
            else:
                taken = self._chooser(ctx.cls, ctx.method, s.line)
            arm = s.then if taken else s.orelse
            if arm:
                ctx.scopes.append({})
                try:
                    self._block(arm, ctx)
                finally:
                    ctx.scopes.pop()
        elif isinstance(s, Return):
            raise _Return(self._eval(s.expr, ctx) if s.expr is not None else EMPTY)

    def _eval(self, e: Expr, ctx: _Ctx) -> Value:
        if isinstance(e, Str):
            return Value(e.value)
        if isinstance(e, Var):
            for scope in reversed(ctx.scopes):
                if e.name in scope:
                    return scope[e.name]
            owner = self.index.field_owner(ctx.cls, e.name)
            if owner is None:
                raise RuntimeFault(f"unknown name {e.name!r}")
            self._ensure(owner, ctx.chain)
            return self.env.fields.get((owner, e.name), EMPTY)
        if isinstance(e, Concat):
            left, right = self._eval(e.left, ctx), self._eval(e.right, ctx)
            return Value(left.text + right.text, left.labels | right.labels)
        if isinstance(e, CharLoop):
            v = self._eval(e.operand, ctx)
            return Value("".join(ch for ch in v.text), v.labels)
        if isinstance(e, SourceCall):
            return Value(f"<{e.api}>", frozenset({SRC}))
        if isinstance(e, CryptoCall):
            arg = self._eval(e.arg, ctx)
            labels = set(arg.labels)
            if arg.text in WEAK_CRYPTO_PARAMS:
                labels.add(MISUSE)
            return Value(f"{e.api}({arg.text})", frozenset(labels))
        raise RuntimeFault(f"cannot evaluate {type(e).__name__}")

