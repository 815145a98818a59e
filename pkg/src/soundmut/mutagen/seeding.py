"""Seeding mutants into programs.

Every scheme first produces an insertion plan against the original AST;
the plans of all schemes are merged and applied in one rewrite, so
injection points computed up front never shift under one another. The
rewritten program is rendered, re-parsed and re-validated, and ledger
locations are read back from the re-parsed source.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from soundmut.applang import (
    INIT,
    AppLangError,
    Program,
    fingerprint,
    parse_program,
    render_program,
)
from soundmut.applang.nodes import (
    Assign,
    AsyncCall,
    ClassDecl,
    FieldDecl,
    If,
    InitBlock,
    Log,
    MethodDecl,
    RegisterReceiver,
    SetOnClick,
    Stmt,
    Str,
    Var,
    VarDecl,
    walk_stmts,
)
from soundmut.mutagen.ledger import Ledger, Location, MutantRecord, tag_locations
from soundmut.mutagen.mip import InjectionPoint, MethodRef, MutationScheme, SchemeKind, compute_mip
from soundmut.mutagen.operators import SecurityOperator

logger = logging.getLogger(__name__)


class SeedingError(ValueError):
    pass


@dataclass
class _Draft:
    tag: str
    scheme: str
    group: int
    var: str
    point: InjectionPoint
    source_ref: MethodRef
    sink_refs: tuple[MethodRef, ...]


@dataclass
class _Plan:
    """Statements to prepend per method, split so sources precede sinks."""

    sources: dict[MethodRef, list[Stmt]] = field(default_factory=dict)
    sinks: dict[MethodRef, list[Stmt]] = field(default_factory=dict)
    fields: dict[str, list[FieldDecl]] = field(default_factory=dict)
    drafts: list[_Draft] = field(default_factory=list)

    def add_src(self, ref, *stmts):
        self.sources.setdefault(ref, []).extend(stmts)

    def add_sink(self, ref, *stmts):
        self.sinks.setdefault(ref, []).extend(stmts)


@dataclass(frozen=True)
class Dropped:
    scheme: str
    group: int
    point: InjectionPoint
    reason: str


@dataclass
class SeedResult:
    program: Program
    ledger: Ledger
    dropped: list[Dropped]
    next_index: int

    @property
    def records(self) -> tuple[MutantRecord, ...]:
        return self.ledger.records


def declared_names(p: Program) -> set[str]:
    names: set[str] = set()
    index = p.index
    for q, info in index.classes.items():
        names.update(f.name for f in info.decl.fields)
        for m in info.decl.methods:
            names.update(m.params)
        bodies = [m.body for m in info.decl.methods]
        if info.decl.init is not None:
            bodies.append(info.decl.init.body)
        for body in bodies:
            names.update(s.name for s in walk_stmts(body) if isinstance(s, VarDecl))
    return names


def first_free_index(p: Program, op: SecurityOperator) -> int:
    pat = re.compile(rf"^{re.escape(op.tag_prefix)}-(\d+)(?:-\d+)?$")
    used = [int(m.group(1)) for t in tag_locations(p) if (m := pat.match(t))]
    return max(used) + 1 if used else 0


def _plan_scheme(p: Program, scheme: MutationScheme, op: SecurityOperator, start: int,
                 taken: set[str], plan: _Plan, dropped: list[Dropped]) -> int:
    """Add one scheme's mutants to ``plan``; returns the next free mutant index."""
    k = start
    kind = scheme.kind
    pre = op.tag_prefix
    points = compute_mip(p, scheme, op)

    def fresh(point, *names) -> bool:
        clash = [n for n in names if n in taken]
        if clash:
            dropped.append(Dropped(scheme.name, k, point, f"name {clash[0]!r} already declared"))
            logger.warning("dropping %s mutant %d at %s: name %r already declared", scheme.name, k, point.sink, clash[0])
            return False
        taken.update(names)
        return True

    if kind in (SchemeKind.REACHABILITY, SchemeKind.COMPLEX):
        for pt in points:
            var = f"{op.var_prefix}{k}"
            tag = f"{pre}-{k}"
            names = (var,) if kind is SchemeKind.REACHABILITY else (var, f"{op.var_prefix}Path{k}")
            if fresh(pt, *names):
                if pt.kind == "classDecl":
                    plan.fields.setdefault(pt.host, []).append(FieldDecl(var, op.source_expr()))
                    plan.add_src(pt.sink, op.sink_stmt(tag, Var(var)))
                elif kind is SchemeKind.REACHABILITY:
                    plan.add_src(pt.sink, VarDecl(var, op.source_expr()), op.sink_stmt(tag, Var(var)))
                else:
                    path = names[1]
                    plan.add_src(pt.sink, VarDecl(var, op.source_expr()),
                                 VarDecl(path, op.transform(Var(var))), op.sink_stmt(tag, Var(path)))
                plan.drafts.append(_Draft(tag, scheme.name, k, var, pt, pt.source, (pt.sink,)))
            k += 1
        return k

    if kind is SchemeKind.TAINT:
        groups: dict[MethodRef, list[InjectionPoint]] = {}
        for pt in points:
            groups.setdefault(pt.source, []).append(pt)
        for src, pts in groups.items():
            var = f"{op.var_prefix}{k}"
            if fresh(pts[0], var):
                plan.fields.setdefault(pts[0].host, []).append(FieldDecl(var, Str("")))
                plan.add_src(src, Assign(var, op.source_expr()))
                for j, pt in enumerate(pts):
                    tag = f"{pre}-{k}-{j}"
                    plan.add_sink(pt.sink, op.sink_stmt(tag, Var(var)))
                    plan.drafts.append(_Draft(tag, scheme.name, k, var, pt, src, (pt.sink,)))
            k += 1
        return k

    for pt in points:  # scope
        var = f"{op.var_prefix}{k}"
        if fresh(pt, var):
            plan.fields.setdefault(pt.host, []).append(FieldDecl(var, Str("")))
            inner_tag, outer_tag = f"{pre}-{k}-0", f"{pre}-{k}-1"
            plan.add_src(pt.source, Assign(var, op.source_expr()), op.sink_stmt(inner_tag, Var(var)))
            plan.add_sink(pt.sink, op.sink_stmt(outer_tag, Var(var)))
            plan.drafts.append(_Draft(inner_tag, scheme.name, k, var, pt, pt.source, (pt.source,)))
            plan.drafts.append(_Draft(outer_tag, scheme.name, k, var, pt, pt.source, (pt.sink,)))
        k += 1
    return k


# --------------------------------------------------------------------------
# AST rewrite


def _rewrite(p: Program, plans: Sequence[_Plan]) -> Program:
    def prefix(ref: MethodRef) -> list[Stmt]:
        out: list[Stmt] = []
        for pl in plans:
            out += pl.sources.get(ref, [])
            out += pl.sinks.get(ref, [])
        return out

    def new_fields(q: str) -> list[FieldDecl]:
        out: list[FieldDecl] = []
        for pl in plans:
            out += pl.fields.get(q, [])
        return out

    def rw_body(body, q, counter):
        out = []
        for s in body:
            if isinstance(s, (RegisterReceiver, SetOnClick, AsyncCall)):
                counter[0] += 1
                aq = f"{q}${counter[0]}"
                if isinstance(s, RegisterReceiver):
                    s = RegisterReceiver(rw_class(s.receiver, aq), s.action, s.line)
                elif isinstance(s, SetOnClick):
                    s = SetOnClick(s.button, rw_class(s.listener, aq), s.line)
                else:
                    s = AsyncCall(s.api, rw_class(s.closure, aq), s.line)
            elif isinstance(s, If):
                then = tuple(rw_body(s.then, q, counter))
                orelse = tuple(rw_body(s.orelse, q, counter)) if s.orelse is not None else None
                s = If(s.cond, then, orelse, s.line)
            out.append(s)
        return out

    def rw_class(decl: ClassDecl, q: str) -> ClassDecl:
        counter = [0]
        members: list = list(new_fields(q))
        init_pre = prefix((q, INIT))
        has_init = False
        for m in decl.members:
            if isinstance(m, InitBlock):
                has_init = True
                members.append(InitBlock(tuple(init_pre + rw_body(m.body, q, counter)), m.line))
            elif isinstance(m, MethodDecl):
                body = tuple(prefix((q, m.name)) + rw_body(m.body, q, counter))
                members.append(MethodDecl(m.name, m.params, body, m.is_callback, m.line))
            elif isinstance(m, ClassDecl):
                members.append(rw_class(m, f"{q}.{m.name}"))
            else:
                members.append(m)
        if init_pre and not has_init:
            at = 0
            while at < len(members) and isinstance(members[at], FieldDecl):
                at += 1
            members.insert(at, InitBlock(tuple(init_pre)))
        return ClassDecl(decl.kind, decl.name, tuple(members), decl.layout, decl.unit, decl.line)

    classes = tuple(rw_class(c, c.name) for c in p.classes)
    return Program(p.manifest, classes, p.layouts, p.units)


def _reparse(p: Program) -> Program:
    return parse_program(render_program(p))


def _records(mutated: Program, drafts: list[_Draft], op: SecurityOperator) -> list[MutantRecord]:
    tags = tag_locations(mutated)
    index = mutated.index
    src_lines: dict[tuple[str, str], Location] = {}
    for q, info in index.classes.items():
        for f in info.decl.fields:
            src_lines.setdefault((q, f.name), Location(info.unit, f.line, q, INIT))
        names = [m.name for m in info.decl.methods] + ([INIT] if info.decl.init is not None else [])
        for mname in names:
            for s in walk_stmts(index.body_of(q, mname)):
                if isinstance(s, (VarDecl, Assign)) and (s.init if isinstance(s, VarDecl) else s.expr) == op.source_expr():
                    src_lines[(q, s.name)] = Location(info.unit, s.line, q, mname)
    out = []
    for d in drafts:
        sinks = tuple(tags[d.tag])
        source = src_lines[(d.source_ref[0], d.var)]
        out.append(MutantRecord(d.tag, d.scheme, op.id, source, sinks, d.group, d.var, d.point.kind, d.point.android))
    return out


def _seed(p: Program, schemes: Sequence[MutationScheme], op: SecurityOperator, start: Optional[int]) -> SeedResult:
    if not schemes:
        raise SeedingError("at least one mutation scheme is required")
    k = first_free_index(p, op) if start is None else start
    taken = declared_names(p)
    plans: list[_Plan] = []
    dropped: list[Dropped] = []
    for scheme in schemes:
        plan = _Plan()
        k = _plan_scheme(p, scheme, op, k, taken, plan, dropped)
        plans.append(plan)
    try:
        mutated = _reparse(_rewrite(p, plans))
    except AppLangError as exc:
        mutated, plans = _salvage(p, plans, dropped, exc)
    drafts = [d for pl in plans for d in pl.drafts]
    records = _records(mutated, drafts, op)
    ledger = Ledger(tuple(records), fingerprint(mutated))
    return SeedResult(mutated, ledger, dropped, k)


def _salvage(p: Program, plans: list[_Plan], dropped: list[Dropped], exc: AppLangError):
    """Re-apply mutant groups one at a time, keeping only those that still validate."""
    logger.warning("mutated program failed validation (%s); isolating faulty mutants", exc)
    kept: list[_Plan] = []
    for plan in plans:
        groups: dict[int, list[_Draft]] = {}
        for d in plan.drafts:
            groups.setdefault(d.group, []).append(d)
        good = _Plan()
        for g, drafts in groups.items():
            trial = _only(plan, drafts)
            try:
                _reparse(_rewrite(p, kept + [_merge(good, trial)]))
            except AppLangError as e:
                dropped.append(Dropped(drafts[0].scheme, g, drafts[0].point, f"re-validation failed: {e}"))
                logger.warning("dropping %s mutant %d: %s", drafts[0].scheme, g, e)
                continue
            good = _merge(good, trial)
        kept.append(good)
    return _reparse(_rewrite(p, kept)), kept


def _only(plan: _Plan, drafts: list[_Draft]) -> _Plan:
    """Sub-plan holding just the statements belonging to ``drafts``."""
    tags = {d.tag for d in drafts}
    var = drafts[0].var
    stem = var.rstrip("0123456789")
    names = {var, f"{stem}Path{var[len(stem):]}"}
    sub = _Plan()

    def mine(s: Stmt) -> bool:
        if isinstance(s, Log):
            return s.tag in tags
        return getattr(s, "name", None) in names

    for ref, stmts in plan.sources.items():
        picked = [s for s in stmts if mine(s)]
        if picked:
            sub.sources[ref] = picked
    for ref, stmts in plan.sinks.items():
        picked = [s for s in stmts if mine(s)]
        if picked:
            sub.sinks[ref] = picked
    for q, fs in plan.fields.items():
        picked = [f for f in fs if f.name in names]
        if picked:
            sub.fields[q] = picked
    sub.drafts = list(drafts)
    return sub


def _merge(a: _Plan, b: _Plan) -> _Plan:
    out = _Plan()
    for src in (a, b):
        for ref, s in src.sources.items():
            out.sources.setdefault(ref, []).extend(s)
        for ref, s in src.sinks.items():
            out.sinks.setdefault(ref, []).extend(s)
        for q, f in src.fields.items():
            out.fields.setdefault(q, []).extend(f)
        out.drafts.extend(src.drafts)
    return out


def apply_scheme(p: Program, scheme: MutationScheme, op: SecurityOperator, start: Optional[int] = None) -> SeedResult:
    """Seed one mutant per injection point of ``scheme``."""
    return _seed(p, [scheme], op, start)


def seed_all(p: Program, schemes: Sequence[MutationScheme], op: SecurityOperator,
             start: Optional[int] = None) -> SeedResult:
    """Seed every scheme's mutants into a single program copy.

    Schemes are seeded in the given order and each takes a contiguous block
    of mutant indices, so tag namespaces never overlap.
    """
    return _seed(p, schemes, op, start)


def seed_isolated(p: Program, schemes: Sequence[MutationScheme], op: SecurityOperator) -> list[SeedResult]:
    """One program copy per mutant (debugging fallback for interference)."""
    if not schemes:
        raise SeedingError("at least one mutation scheme is required")
    k = first_free_index(p, op)
    taken = declared_names(p)
    dropped: list[Dropped] = []
    results = []
    for scheme in schemes:
        plan = _Plan()
        k = _plan_scheme(p, scheme, op, k, taken, plan, dropped)
        groups: dict[int, list[_Draft]] = {}
        for d in plan.drafts:
            groups.setdefault(d.group, []).append(d)
        for drafts in groups.values():
            sub = _only(plan, drafts)
            mutated = _reparse(_rewrite(p, [sub]))
            records = _records(mutated, sub.drafts, op)
            results.append(SeedResult(mutated, Ledger(tuple(records), fingerprint(mutated)), [], k))
    return results
