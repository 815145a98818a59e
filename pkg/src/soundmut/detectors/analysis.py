"""Flow-insensitive taint analysis over the call graph."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from soundmut.applang import INIT, AppLangError, Program, fingerprint, parse_program
from soundmut.applang.nodes import (
    ASYNC_APIS,
    Assign,
    AsyncCall,
    Call,
    CharLoop,
    ClassKind,
    Concat,
    CryptoCall,
    Expr,
    Log,
    RegisterReceiver,
    SetOnClick,
    SourceCall,
    Str,
    Var,
    VarDecl,
    iter_expr,
    stmt_exprs,
    walk_stmts,
)
from soundmut.applang.scopes import Symbol, class_symbols, walk_scoped
from soundmut.detectors.callgraph import CallGraph, Node, build_call_graph, closure
from soundmut.detectors.config import DetectorConfig

logger = logging.getLogger(__name__)

SRC, WEAK, MISUSE = "src", "weak", "misuse"
REPORTABLE = frozenset({SRC, MISUSE})

OK, CRASH, TIMEOUT = "ok", "crash", "timeout"
STATUSES = (OK, CRASH, TIMEOUT)


@dataclass(frozen=True)
class DetectionReport:
    detector: str
    detected: frozenset
    status: str = OK
    fingerprint: str = ""
    message: str = ""

    def to_text(self) -> str:
        lines = [f"detector={self.detector} fingerprint={self.fingerprint} status={self.status}"]
        lines.extend(sorted(self.detected))
        return "\n".join(lines) + "\n"


# compiled expressions: ("str", text) | ("ref", key) | ("cat", a, b) | ("loop", a)
# | ("src", api) | ("crypto", api, a); keys are ("L", cls, method, name) or ("F", owner, name)


def _key(sym: Optional[Symbol], cls: str, method: str, name: str):
    if sym is None:
        return None
    if sym.kind == "field":
        return ("F", sym.owner, name)
    return ("L", cls, method, name)


def _compile(e: Expr, env: Mapping[str, Symbol], cls: str, method: str):
    if isinstance(e, Str):
        return ("str", e.value)
    if isinstance(e, Var):
        return ("ref", _key(env.get(e.name), cls, method, e.name))
    if isinstance(e, Concat):
        return ("cat", _compile(e.left, env, cls, method), _compile(e.right, env, cls, method))
    if isinstance(e, CharLoop):
        return ("loop", _compile(e.operand, env, cls, method))
    if isinstance(e, SourceCall):
        return ("src", e.api)
    if isinstance(e, CryptoCall):
        return ("crypto", e.api, _compile(e.arg, env, cls, method))
    raise TypeError(type(e).__name__)


@dataclass
class _Facts:
    flows: list  # (target key, compiled expr)
    sinks: list  # (tag, compiled expr)


def compile_node(p: Program, node: Node) -> _Facts:
    index = p.index
    cls, method = node
    facts = _Facts([], [])
    if method == INIT:
        env = class_symbols(index, cls)
        for f in index.field_decls(cls):
            if f.init is not None:
                facts.flows.append((("F", cls, f.name), _compile(f.init, env, cls, method)))
    for _path, s, env in walk_scoped(index, cls, method):
        if isinstance(s, VarDecl):
            facts.flows.append((("L", cls, method, s.name), _compile(s.init, env, cls, method)))
        elif isinstance(s, Assign):
            target = _key(env.get(s.name), cls, method, s.name)
            if target is not None:
                facts.flows.append((target, _compile(s.expr, env, cls, method)))
        elif isinstance(s, Call):
            q = index.resolve_call(cls, s.target, s.method)
            if q is None:
                continue
            params = index.classes[q].decl.method(s.method).params
            for name, arg in zip(params, s.args):
                facts.flows.append((("L", q, s.method, name), _compile(arg, env, cls, method)))
        elif isinstance(s, Log):
            facts.sinks.append((s.tag, _compile(s.expr, env, cls, method)))
    return facts


class _Evaluator:
    def __init__(self, config: DetectorConfig):
        self.config = config
        self.store: dict = {}

    def labels(self, c) -> frozenset:
        op = c[0]
        if op == "str":
            return frozenset({WEAK}) if c[1] in self.config.weak_params else frozenset()
        if op == "ref":
            return self.store.get(c[1], frozenset())
        if op == "cat":
            return self.labels(c[1]) | self.labels(c[2])
        if op == "loop":
            return self.labels(c[1])
        if op == "src":
            return frozenset({SRC}) if c[1] in self.config.sources else frozenset()
        if op == "crypto":
            arg = self.labels(c[2])
            out = set(arg - {WEAK})
            if WEAK in arg and c[1] in self.config.crypto_apis:
                out.add(MISUSE)
            return frozenset(out)
        raise ValueError(op)

    def solve(self, facts: Iterable[_Facts]) -> set[str]:
        facts = list(facts)
        flows = [f for fs in facts for f in fs.flows]
        changed = True
        while changed:
            changed = False
            for target, expr in flows:
                new = self.labels(expr)
                old = self.store.get(target, frozenset())
                if not new <= old:
                    self.store[target] = old | new
                    changed = True
        found = set()
        for fs in facts:
            for tag, expr in fs.sinks:
                if self.labels(expr) & REPORTABLE:
                    found.add(tag)
        return found


def program_features(p: Program) -> set[str]:
    feats: set[str] = set()
    index = p.index
    for q, info in index.classes.items():
        if info.kind is ClassKind.FRAGMENT:
            feats.add("fragment")
        bodies = [m.body for m in info.decl.methods]
        if info.decl.init is not None:
            bodies.append(info.decl.init.body)
        exprs = [f.init for f in info.decl.fields if f.init is not None]
        for body in bodies:
            for s in walk_stmts(body):
                if isinstance(s, RegisterReceiver):
                    feats.add("registerReceiver")
                elif isinstance(s, SetOnClick):
                    feats.add("setOnClick")
                elif isinstance(s, AsyncCall):
                    feats.add(s.api)
                exprs.extend(stmt_exprs(s))
        for e in exprs:
            for x in iter_expr(e):
                if isinstance(x, CharLoop):
                    feats.add("charLoop")
                elif isinstance(x, CryptoCall):
                    feats.add("crypto")
    return feats & ({"fragment", "registerReceiver", "setOnClick", "charLoop", "crypto"} | set(ASYNC_APIS))


def analyze(p: Program, config: DetectorConfig, graph: Optional[CallGraph] = None) -> DetectionReport:
    """Sink tags the detector claims leak. Never consults a ledger."""
    fp = fingerprint(p)
    hit = program_features(p) & config.crash_on
    if hit:
        return DetectionReport(config.name, frozenset(), CRASH, fp, f"unsupported construct: {', '.join(sorted(hit))}")
    try:
        g = graph if graph is not None else build_call_graph(p, config)
        compiled = {n: compile_node(p, n) for n in g.nodes}
        if config.fc4:
            detected: set[str] = set()
            for e in g.entries:
                detected |= _Evaluator(config).solve(compiled[n] for n in closure(g, e))
        else:
            detected = _Evaluator(config).solve(compiled[n] for n in g.nodes)
    except (KeyError, AttributeError, TypeError, RecursionError) as exc:  # defensive: malformed AST
        logger.warning("detector %s crashed: %s", config.name, exc)
        return DetectionReport(config.name, frozenset(), CRASH, fp, str(exc))
    return DetectionReport(config.name, frozenset(detected), OK, fp)


def analyze_sources(files: Mapping[str, str], config: DetectorConfig) -> DetectionReport:
    """Analyse source text; a program that fails to parse or validate is a crash."""
    try:
        p = parse_program(files)
    except AppLangError as exc:
        return DetectionReport(config.name, frozenset(), CRASH, "", str(exc))
    return analyze(p, config)
