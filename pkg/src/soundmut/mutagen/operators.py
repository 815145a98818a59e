"""Security operators: declarative descriptions of the behaviour to inject."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Callable

from soundmut.applang.nodes import (
    CRYPTO_APIS,
    SOURCE_APIS,
    CharLoop,
    CryptoCall,
    Expr,
    Log,
    SourceCall,
    Str,
    Var,
    VarDecl,
)


class OperatorError(ValueError):
    pass


class Goal(str, enum.Enum):
    DATA_LEAK = "dataLeak"
    CRYPTO_MISUSE = "cryptoMisuse"


# string-in/string-out rewrites used to lengthen the source->sink path
PATH_RULES: dict[str, Callable[[Expr], Expr]] = {
    "charLoop": CharLoop,
}


@dataclass(frozen=True)
class SecurityOperator:
    id: str
    goal: Goal
    source: str  # "source.<api>" for leaks, the literal parameter value for crypto misuse
    sink: str  # "log" for leaks, "crypto.<api>" for crypto misuse
    path: tuple[str, ...] = ("charLoop",)

    @property
    def tag_prefix(self) -> str:
        return "leak" if self.goal is Goal.DATA_LEAK else "misuse"

    @property
    def var_prefix(self) -> str:
        return "dataLeak" if self.goal is Goal.DATA_LEAK else "cryptoParam"

    def source_expr(self) -> Expr:
        if self.goal is Goal.DATA_LEAK:
            return SourceCall(self.source.split(".", 1)[1])
        return Str(self.source)

    def sink_stmt(self, tag: str, value: Expr) -> Log:
        if self.goal is Goal.DATA_LEAK:
            return Log(tag, value)
        return Log(tag, CryptoCall(self.sink.split(".", 1)[1], value))

    def transform(self, e: Expr) -> Expr:
        for rule in self.path:
            e = PATH_RULES[rule](e)
        return e

    def describe(self) -> str:
        path = ",".join(self.path)
        src = self.source if self.goal is Goal.DATA_LEAK else f'"{self.source}"'
        return f"id={self.id}; goal={self.goal.value}; source={src}; sink={self.sink}; path={path}"


DEFAULT_LEAK = SecurityOperator("leak-timezone", Goal.DATA_LEAK, "source.timezone", "log")
DEFAULT_CRYPTO = SecurityOperator("crypto-aes", Goal.CRYPTO_MISUSE, "AES", "crypto.getCipher")

_FIELD_RE = re.compile(r"\s*([A-Za-z]+)\s*=\s*(.*?)\s*$")


def load_operator(spec: str) -> SecurityOperator:
    """Parse one ``goal=...; source=...; sink=...; path=...`` line."""
    fields: dict[str, str] = {}
    for part in spec.split(";"):
        if not part.strip():
            continue
        m = _FIELD_RE.match(part)
        if m is None:
            raise OperatorError(f"malformed operator field {part.strip()!r}")
        fields[m.group(1)] = m.group(2)
    for key in ("goal", "source", "sink"):
        if key not in fields:
            raise OperatorError(f"operator spec is missing {key!r}")
    try:
        goal = Goal(fields["goal"])
    except ValueError:
        raise OperatorError(f"unknown goal {fields['goal']!r}") from None
    source, sink = fields["source"], fields["sink"]
    path = tuple(r for r in fields.get("path", "charLoop").split(",") if r.strip())
    path = tuple(r.strip() for r in path)
    for rule in path:
        if rule not in PATH_RULES:
            raise OperatorError(f"unknown path rule {rule!r}")
    if goal is Goal.DATA_LEAK:
        if not source.startswith("source.") or source.split(".", 1)[1] not in SOURCE_APIS:
            raise OperatorError(f"unknown source API {source!r} for goal dataLeak")
        if sink != "log":
            raise OperatorError(f"unknown sink API {sink!r} for goal dataLeak")
        op_id = fields.get("id", f"leak-{source.split('.', 1)[1]}")
    else:
        if not (len(source) >= 2 and source[0] == source[-1] == '"'):
            raise OperatorError("cryptoMisuse source must be a string literal parameter")
        source = source[1:-1]
        if not sink.startswith("crypto.") or sink.split(".", 1)[1] not in CRYPTO_APIS:
            raise OperatorError(f"unknown sink API {sink!r} for goal cryptoMisuse")
        op_id = fields.get("id", f"crypto-{source.lower().replace('/', '-')}")
    return SecurityOperator(op_id, goal, source, sink, path)


def load_operators(text: str) -> list[SecurityOperator]:
    ops = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            ops.append(load_operator(line))
    if not ops:
        raise OperatorError("operator file defines no operator")
    return ops


def injected_body(op: SecurityOperator, k: int) -> tuple[VarDecl, Log]:
    """The plain source-then-sink statements for mutant ``k`` (reachability placement)."""
    var = f"{op.var_prefix}{k}"
    return (VarDecl(var, op.source_expr()), op.sink_stmt(f"{op.tag_prefix}-{k}", Var(var)))
