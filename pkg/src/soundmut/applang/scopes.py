"""Lexical scope resolution.

Visibility rules: a method sees its parameters, block-scoped locals
declared earlier on the path to the statement, the fields of its own class
and the fields of every lexically enclosing class. Anonymous classes hold no
fields and do not capture the locals of the method that creates them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

from soundmut.applang.index import INIT, ProgramIndex
from soundmut.applang.nodes import If, Program, Stmt, VarDecl

# path through a method body: (i,) is body[i]; nested if-arms append (arm, j)
# with arm 0 for the then-block and 1 for the else-block.
StmtPath = tuple[int, ...]


@dataclass(frozen=True)
class Position:
    cls: str
    method: str
    path: StmtPath


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str  # local | param | field
    provenance: str  # method | class | enclosing
    owner: str  # declaring class for fields, the method's class otherwise


def class_symbols(index: ProgramIndex, cls: str) -> dict[str, Symbol]:
    env: dict[str, Symbol] = {}
    for q in index.ancestors(cls):
        prov = "class" if q == cls else "enclosing"
        for f in index.field_decls(q):
            env.setdefault(f.name, Symbol(f.name, "field", prov, q))
    return env


def walk_scoped(
    index: ProgramIndex, cls: str, method: str
) -> Iterator[tuple[StmtPath, Stmt, Mapping[str, Symbol]]]:
    """Yield every statement of a method body with the symbols visible before it."""
    env = class_symbols(index, cls)
    if method != INIT:
        decl = index.classes[cls].decl.method(method)
        for p in decl.params:
            env[p] = Symbol(p, "param", "method", cls)
    yield from _walk_block(index.body_of(cls, method), (), env, cls)


def _walk_block(body, prefix, env, cls):
    env = dict(env)
    for i, s in enumerate(body):
        path = prefix + (i,)
        yield path, s, env
        if isinstance(s, If):
            yield from _walk_block(s.then, path + (0,), env, cls)
            if s.orelse is not None:
                yield from _walk_block(s.orelse, path + (1,), env, cls)
        if isinstance(s, VarDecl):
            env = dict(env)
            env[s.name] = Symbol(s.name, "local", "method", cls)


def stmt_at(index: ProgramIndex, pos: Position) -> Stmt:
    body = index.body_of(pos.cls, pos.method)
    path = pos.path
    s = body[path[0]]
    rest = path[1:]
    while rest:
        arm, j = rest[0], rest[1]
        s = (s.then if arm == 0 else s.orelse)[j]
        rest = rest[2:]
    return s


class ScopeTable:
    """Visible symbols before every statement position of a program."""

    def __init__(self, program: Program):
        self.program = program
        index = program.index
        self._table: dict[Position, Mapping[str, Symbol]] = {}
        self._class_level: dict[str, Mapping[str, Symbol]] = {}
        for cls in index.classes:
            self._class_level[cls] = class_symbols(index, cls)
            methods = [m.name for m in index.classes[cls].decl.methods]
            if index.classes[cls].decl.init is not None:
                methods.append(INIT)
            for mname in methods:
                for path, _stmt, env in walk_scoped(index, cls, mname):
                    self._table[Position(cls, mname, path)] = env

    def positions(self) -> list[Position]:
        return list(self._table)

    def visible(self, pos: Position) -> Mapping[str, Symbol]:
        return self._table[pos]

    def lookup(self, pos: Position, name: str) -> Optional[Symbol]:
        return self._table[pos].get(name)

    def class_visible(self, cls: str) -> Mapping[str, Symbol]:
        """Symbols visible at class-declaration level (fields only)."""
        return self._class_level[cls]


def resolve_scopes(program: Program) -> ScopeTable:
    return ScopeTable(program)
