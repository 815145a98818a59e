"""AppLang: a small Android-like app-model language."""

import hashlib
import os
from pathlib import Path

from soundmut.applang.errors import AppLangError, Diagnostic
from soundmut.applang.index import INIT, ProgramIndex
from soundmut.applang.inventory import CallbackEntry, callback_inventory
from soundmut.applang.nodes import *  # noqa: F401,F403
from soundmut.applang.nodes import ClassKind, Program
from soundmut.applang.parser import parse_program
from soundmut.applang.render import render_program
from soundmut.applang.scopes import Position, ScopeTable, Symbol, resolve_scopes
from soundmut.applang.validate import validate_program


def fingerprint(p: Program) -> str:
    """Hex content hash of the rendered program."""
    h = hashlib.sha256()
    for unit, text in sorted(render_program(p).items()):
        h.update(unit.encode())
        h.update(b"\0")
        h.update(text.encode())
        h.update(b"\0")
    return h.hexdigest()


def load_program(path: "str | os.PathLike[str]") -> Program:
    """Parse every ``.al`` file in a directory (or a single file) as one program."""
    path = Path(path)
    files = [path] if path.is_file() else sorted(path.glob("*.al"))
    return parse_program({f.name: f.read_text(encoding="utf-8") for f in files})


def write_program(p: Program, outdir: "str | os.PathLike[str]") -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for unit, text in render_program(p).items():
        (outdir / unit).write_text(text, encoding="utf-8")


__all__ = [
    "AppLangError", "CallbackEntry", "ClassKind", "Diagnostic", "INIT", "Position",
    "Program", "ProgramIndex", "ScopeTable", "Symbol", "callback_inventory",
    "fingerprint", "load_program", "parse_program", "render_program",
    "resolve_scopes", "validate_program", "write_program",
]
