"""Undetected executable mutants and their triage."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from soundmut.applang import Program
from soundmut.detectors.analysis import OK, DetectionReport
from soundmut.execengine.explore import FilterResult, Witness
from soundmut.execengine.trace import Chain
from soundmut.mutagen.ledger import Ledger, MutantRecord


class ReportStatusError(ValueError):
    """Crashed or timed-out reports carry no detection claims to diff against."""


class FingerprintError(ValueError):
    pass


@dataclass(frozen=True)
class UndetectedMutant:
    record: MutantRecord
    witness: Witness

    @property
    def tag(self) -> str:
        return self.record.tag

    @property
    def group(self) -> tuple[str, str]:
        return (self.record.sink.cls, self.record.sink.method)


@dataclass
class UndetectedSet:
    detector: str
    mutants: list[UndetectedMutant] = field(default_factory=list)

    @property
    def tags(self) -> list[str]:
        return [m.tag for m in self.mutants]

    def groups(self) -> dict[tuple[str, str], list[UndetectedMutant]]:
        out: dict[tuple[str, str], list[UndetectedMutant]] = {}
        for m in self.mutants:
            out.setdefault(m.group, []).append(m)
        return out

    def __len__(self) -> int:
        return len(self.mutants)


def diff_undetected(ledger: Ledger, filtered: FilterResult, report: DetectionReport) -> UndetectedSet:
    """Executable mutants the detector does not claim, in ledger order."""
    if report.status != OK:
        raise ReportStatusError(
            f"report of {report.detector} has status {report.status}; use the propagation matrix for crashed tools")
    if report.fingerprint and report.fingerprint != ledger.fingerprint:
        raise FingerprintError(f"report {report.detector} was produced for a different program")
    out = UndetectedSet(report.detector)
    for r in ledger.records:
        if r.tag in filtered.executable and r.tag not in report.detected:
            out.mutants.append(UndetectedMutant(r, filtered.witnesses[r.tag]))
    return out


def source_chain(m: UndetectedMutant) -> Chain:
    hit = m.witness.trace.source_hits.get((m.record.source.unit, m.record.source.line))
    return hit.chain if hit is not None else ()


def format_chain(chain: Chain) -> str:
    return " > ".join(str(f) for f in chain)


@dataclass(frozen=True)
class TriageRow:
    tag: str
    cls: str
    method: str
    scheme: str
    chain: str
    source: str
    sink: str
    source_chain: str
    flaw_class: str = ""
    signature: str = ""


@dataclass
class TriageReport:
    detector: str
    groups: list[tuple[tuple[str, str], list[TriageRow]]]

    @property
    def rows(self) -> list[TriageRow]:
        return [r for _, rows in self.groups for r in rows]

    def to_tsv(self) -> str:
        head = "tag\tclass\tmethod\tscheme\twitness_chain\tsource\tsink\tsource_chain\tflaw_class\tsignature"
        lines = [head]
        for r in self.rows:
            lines.append("\t".join([r.tag, r.cls, r.method, r.scheme, r.chain, r.source, r.sink,
                                    r.source_chain, r.flaw_class, r.signature]))
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        if not self.groups:
            return f"detector {self.detector}: no undetected executable mutants\n"
        out = [f"detector {self.detector}: {len(self.rows)} undetected executable mutant(s) in {len(self.groups)} method(s)"]
        for (cls, method), rows in self.groups:
            out.append(f"\n{cls}.{method}  [{len(rows)}]")
            for r in rows:
                label = f"  {r.flaw_class} {r.signature}" if r.flaw_class else ""
                out.append(f"  {r.tag} ({r.scheme}) source {r.source} sink {r.sink}{label}")
                out.append(f"    sink chain:   {r.chain}")
                if r.source_chain and r.source_chain != r.chain:
                    out.append(f"    source chain: {r.source_chain}")
        return "\n".join(out) + "\n"


def triage(u: UndetectedSet, p: Program, classify: Optional[Callable] = None) -> TriageReport:
    """Group undetected mutants by sink method, largest groups first.

    ``classify`` maps an :class:`UndetectedMutant` to ``(flaw class, signature)``
    or ``None``; it is supplied for reference detectors whose gaps are known.
    """
    order = {q: i for i, q in enumerate(p.index.classes)}
    grouped = u.groups()
    keys = sorted(grouped, key=lambda k: (-len(grouped[k]), order.get(k[0], len(order)), k[1]))
    groups = []
    for k in keys:
        rows = []
        for m in grouped[k]:
            label = classify(m) if classify is not None else None
            fc, sig = label if label is not None else ("", "")
            rows.append(TriageRow(m.tag, k[0], k[1], m.record.scheme, format_chain(m.witness.observation.chain),
                                  str(m.record.source), ",".join(str(s) for s in m.record.sinks),
                                  format_chain(source_chain(m)), fc, sig))
        groups.append((k, rows))
    return TriageReport(u.detector, groups)
