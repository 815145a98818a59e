"""Mutant records and the tab-separated ledger file."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from soundmut.applang import INIT, Program
from soundmut.applang.nodes import Assign, FieldDecl, Log, Str, VarDecl, walk_stmts

logger = logging.getLogger(__name__)

HEADER = "# fingerprint="


class LedgerError(ValueError):
    pass


@dataclass(frozen=True)
class Location:
    unit: str
    line: int
    cls: str
    method: str

    def __str__(self) -> str:
        return f"{self.unit}:{self.line}"


@dataclass(frozen=True)
class MutantRecord:
    tag: str
    scheme: str
    operator: str
    source: Location
    sinks: tuple[Location, ...]
    group: int = 0
    var: str = ""
    point_kind: str = ""
    android: tuple[str, ...] = field(default=(), compare=False)

    @property
    def sink(self) -> Location:
        return self.sinks[0]

    @property
    def split(self) -> bool:
        """Source and sink live in different methods."""
        return any((s.cls, s.method) != (self.source.cls, self.source.method) for s in self.sinks)


@dataclass(frozen=True)
class Ledger:
    records: tuple[MutantRecord, ...]
    fingerprint: str

    def __post_init__(self):
        tags = [r.tag for r in self.records]
        if len(tags) != len(set(tags)):
            raise LedgerError("duplicate tags in ledger")

    @property
    def tags(self) -> list[str]:
        return [r.tag for r in self.records]

    def get(self, tag: str) -> Optional[MutantRecord]:
        return self.by_tag.get(tag)

    @property
    def by_tag(self) -> dict[str, MutantRecord]:
        return {r.tag: r for r in self.records}

    def siblings(self, tag: str) -> list[MutantRecord]:
        """Records sharing the source (same injected variable) as ``tag``."""
        rec = self.by_tag[tag]
        return [r for r in self.records if r.var == rec.var and r.scheme == rec.scheme]

    def restrict(self, tags: Iterable[str]) -> "Ledger":
        keep = set(tags)
        return Ledger(tuple(r for r in self.records if r.tag in keep), self.fingerprint)

    def to_tsv(self) -> str:
        lines = [f"{HEADER}{self.fingerprint}"]
        for r in self.records:
            sinks = ",".join(str(s) for s in r.sinks)
            lines.append(f"{r.tag}\t{r.scheme}\t{r.operator}\t{r.source}\t{sinks}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str, program: Program) -> "Ledger":
        """Parse a ledger file, resolving line locations against ``program``."""
        lines = text.splitlines()
        if not lines or not lines[0].startswith(HEADER):
            raise LedgerError("ledger file lacks a fingerprint header")
        fp = lines[0][len(HEADER):].strip()
        where = line_owners(program)
        tags = tag_locations(program)
        records = []
        for n, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise LedgerError(f"ledger line {n}: expected 5 columns")
            tag, scheme, op, src, sinks = cols
            source = _resolve(src, where, n)
            sink_locs = tuple(_resolve(s, where, n) for s in sinks.split(","))
            group, var = _group_of(tag), ""
            if tag in tags:
                var = _var_near(program, source)
            records.append(MutantRecord(tag, scheme, op, source, sink_locs, group, var))
        return cls(tuple(records), fp)


def _group_of(tag: str) -> int:
    parts = tag.split("-")
    return int(parts[1]) if len(parts) > 1 and parts[1].isdigit() else 0


def _resolve(text: str, where: dict, n: int) -> Location:
    unit, _, line = text.rpartition(":")
    try:
        key = (unit, int(line))
    except ValueError:
        raise LedgerError(f"ledger line {n}: bad location {text!r}") from None
    if key not in where:
        raise LedgerError(f"ledger line {n}: no statement at {text}")
    cls, method = where[key]
    return Location(unit, key[1], cls, method)


def _var_near(program: Program, loc: Location) -> str:
    index = program.index
    for s in walk_stmts(index.body_of(loc.cls, loc.method)):
        if s.line == loc.line and isinstance(s, (Assign, VarDecl)):
            return s.name
    for f in index.field_decls(loc.cls):
        if f.line == loc.line:
            return f.name
    return ""


def line_owners(program: Program) -> dict[tuple[str, int], tuple[str, str]]:
    """Map (unit, line) of every statement and field to its (class, method)."""
    index = program.index
    out: dict[tuple[str, int], tuple[str, str]] = {}
    for q, info in index.classes.items():
        unit = info.unit
        for m in info.decl.members:
            if isinstance(m, FieldDecl):
                out.setdefault((unit, m.line), (q, INIT))
        names = [m.name for m in info.decl.methods] + ([INIT] if info.decl.init is not None else [])
        for mname in names:
            for s in walk_stmts(index.body_of(q, mname)):
                out.setdefault((unit, s.line), (q, mname))
    return out


def tag_locations(program: Program) -> dict[str, list[Location]]:
    index = program.index
    out: dict[str, list[Location]] = {}
    for q, info in index.classes.items():
        names = [m.name for m in info.decl.methods] + ([INIT] if info.decl.init is not None else [])
        for mname in names:
            for s in walk_stmts(index.body_of(q, mname)):
                if isinstance(s, Log):
                    out.setdefault(s.tag, []).append(Location(info.unit, s.line, q, mname))
    return out


def relocate(program: Program, records: Iterable[MutantRecord]) -> list[MutantRecord]:
    """Re-derive record locations after ``program`` was rewritten.

    A source is the first non-empty definition of the mutant variable; sinks
    are the logs carrying the tag.
    """
    index = program.index
    tags = tag_locations(program)
    sources: dict[str, Location] = {}
    for q, info in index.classes.items():
        for f in info.decl.fields:
            if f.init is not None and f.init != Str(""):
                sources.setdefault(f.name, Location(info.unit, f.line, q, INIT))
        names = [m.name for m in info.decl.methods] + ([INIT] if info.decl.init is not None else [])
        for mname in names:
            for s in walk_stmts(index.body_of(q, mname)):
                if isinstance(s, (VarDecl, Assign)):
                    expr = s.init if isinstance(s, VarDecl) else s.expr
                    if expr != Str(""):
                        sources.setdefault(s.name, Location(info.unit, s.line, q, mname))
    out = []
    for r in records:
        if r.tag not in tags or r.var not in sources:
            raise LedgerError(f"mutant {r.tag} no longer occurs in the program")
        out.append(MutantRecord(r.tag, r.scheme, r.operator, sources[r.var], tuple(tags[r.tag]),
                                r.group, r.var, r.point_kind, r.android))
    return out
