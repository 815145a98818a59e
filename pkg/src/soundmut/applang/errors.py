from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    unit: str
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        if not self.unit:
            return self.message
        return f"{self.unit}:{self.line}:{self.col}: {self.message}"


class AppLangError(Exception):
    """Raised when source text fails to parse or validate."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))
