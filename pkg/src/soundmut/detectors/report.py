"""Reading and writing detector reports (including third-party tool output)."""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Iterable, Optional, Union

from soundmut.detectors.analysis import STATUSES, DetectionReport

logger = logging.getLogger(__name__)

_HEADER = re.compile(r"^detector=(\S+)\s+fingerprint=(\S*)\s+status=(\S+)\s*$")


class ReportError(ValueError):
    pass


def parse_report(text: str, program_fingerprint: Optional[str] = None,
                 known_tags: Optional[Iterable[str]] = None) -> DetectionReport:
    lines = text.splitlines()
    if not lines:
        raise ReportError("empty report file (missing header)")
    m = _HEADER.match(lines[0].strip())
    if m is None:
        raise ReportError("report header must read 'detector=<name> fingerprint=<hex> status=<ok|crash|timeout>'")
    name, fp, status = m.groups()
    if status not in STATUSES:
        raise ReportError(f"unknown report status {status!r}")
    if program_fingerprint is not None and fp != program_fingerprint:
        raise ReportError(f"report fingerprint {fp[:12]} does not match program {program_fingerprint[:12]}")
    tags = {ln.strip() for ln in lines[1:] if ln.strip() and not ln.lstrip().startswith("#")}
    if known_tags is not None:
        unknown = sorted(tags - set(known_tags))
        for t in unknown:
            logger.warning("report %s names unknown tag %r (kept)", name, t)
    return DetectionReport(name, frozenset(tags), status, fp)


def load_external_report(path: Union[str, Path], program_fingerprint: Optional[str] = None,
                         known_tags: Optional[Iterable[str]] = None) -> DetectionReport:
    return parse_report(Path(path).read_text(encoding="utf-8"), program_fingerprint, known_tags)


def write_report(report: DetectionReport, path: Union[str, Path]) -> None:
    Path(path).write_text(report.to_text(), encoding="utf-8")
