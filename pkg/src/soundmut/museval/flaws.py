"""Flaw confirmation, collection and the propagation matrix."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from soundmut.applang import Program
from soundmut.detectors.analysis import CRASH, OK, DetectionReport, analyze
from soundmut.detectors.config import DetectorConfig
from soundmut.execengine.explore import ExplorationStrategy, FilterResult, SYSTEMATIC, filter_executable
from soundmut.mutagen.ledger import Ledger
from soundmut.museval.attribution import attribute
from soundmut.museval.diff import UndetectedSet
from soundmut.museval.synthesis import MinimalExample, SynthesisError, synthesize_minimal_example

logger = logging.getLogger(__name__)

CANDIDATE, CONFIRMED = "candidate", "confirmed"
PRESENT, ABSENT = "present", "absent"


class PreconditionError(ValueError):
    pass


@dataclass
class FlawRecord:
    flaw_id: str
    flaw_class: str
    signature: str
    tag: str  # representative mutant, the one the minimal example reproduces
    minimal_example: Optional[MinimalExample]
    detectors_affected: list[str] = field(default_factory=list)
    status: str = CANDIDATE
    schemes: tuple[str, ...] = ()  # schemes whose mutants surfaced the flaw
    tags: tuple[str, ...] = ()  # every undetected mutant sharing the signature
    program: str = ""  # corpus program the representative mutant lives in

    @property
    def fingerprint(self) -> str:
        return self.minimal_example.ledger.fingerprint if self.minimal_example is not None else "-"

    def row(self) -> list[str]:
        return [self.flaw_id, self.flaw_class, self.signature, self.program or "-", self.tag, self.status,
                ",".join(self.schemes), ",".join(self.detectors_affected), str(len(self.tags)), self.fingerprint]


FLAW_TSV_HEADER = "flaw\tclass\tsignature\tprogram\ttag\tstatus\tschemes\tdetectors\tmutants\tfingerprint"


def flaws_to_tsv(flaws: Sequence[FlawRecord]) -> str:
    lines = [FLAW_TSV_HEADER] + ["\t".join(f.row()) for f in flaws]
    return "\n".join(lines) + "\n"


def flaws_from_tsv(text: str, examples: Mapping[str, MinimalExample]) -> list[FlawRecord]:
    """Inverse of :func:`flaws_to_tsv`; ``examples`` maps flaw id to its minimal example.

    The per-mutant tag list is not serialised, so ``tags`` comes back empty.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != FLAW_TSV_HEADER:
        raise ValueError("flaw table lacks its header row")
    out = []
    for n, ln in enumerate(lines[1:], start=2):
        cols = ln.split("\t")
        if len(cols) != 10:
            raise ValueError(f"flaw table row {n}: expected 10 columns, got {len(cols)}")
        fid, fc, sig, prog, tag, status, schemes, dets, _count, fp = cols
        ex = examples.get(fid)
        if fp == "-":
            ex = None
        elif ex is None or ex.ledger.fingerprint != fp:
            raise ValueError(f"flaw {fid}: minimal example missing or fingerprint mismatch")
        out.append(FlawRecord(fid, fc, sig, tag, ex, [d for d in dets.split(",") if d], status,
                              tuple(x for x in schemes.split(",") if x), (), "" if prog == "-" else prog))
    return out


def _detect(example: MinimalExample, detector: Union[DetectorConfig, DetectionReport]) -> DetectionReport:
    if isinstance(detector, DetectorConfig):
        return analyze(example.program, detector)
    return detector


def confirm_flaw(example: MinimalExample, detector: Union[DetectorConfig, DetectionReport], proposed_class: str,
                 signature: str = "", flaw_id: str = "", strategy: ExplorationStrategy = SYSTEMATIC) -> FlawRecord:
    """Re-run the filter and the detector on the skeleton.

    Confirmed iff the mutant still executes and the detector still misses it.
    """
    filtered = filter_executable(example.program, example.ledger, strategy)
    if example.tag not in filtered.executable:
        raise PreconditionError(f"mutant {example.tag} is not executable in its minimal example")
    report = _detect(example, detector)
    name = report.detector
    rec = FlawRecord(flaw_id or f"{proposed_class}:{signature}", proposed_class, signature, example.tag, example, [name])
    if report.status != OK:
        rec.status = CRASH
    elif report.fingerprint and report.fingerprint != example.ledger.fingerprint:
        raise PreconditionError("external report was not produced for this minimal example")
    elif example.tag in report.detected:
        rec.status = CANDIDATE
    else:
        rec.status = CONFIRMED
    return rec


def collect_flaws(p: Program, ledger: Ledger, filtered: FilterResult, undetected: Mapping[str, UndetectedSet],
                  configs: Mapping[str, DetectorConfig], strategy: ExplorationStrategy = SYSTEMATIC,
                  existing: Optional[list[FlawRecord]] = None) -> list[FlawRecord]:
    """Group undetected mutants into flaws per (class, signature) and confirm each.

    ``undetected`` maps detector name to its undetected set; only detectors
    with a known config are attributed automatically.
    """
    flaws: dict[tuple[str, str], FlawRecord] = {(f.flaw_class, f.signature): f for f in existing or []}
    for name, u in undetected.items():
        config = configs.get(name)
        if config is None:
            continue
        buckets: dict[tuple[str, str], list] = {}
        for m in u.mutants:
            label = attribute(p, config, m)
            if label is None:
                logger.info("%s: mutant %s matches no known gap of the detector", name, m.tag)
                continue
            buckets.setdefault(label, []).append(m)
        for (fc, sig), ms in buckets.items():
            key = (fc, sig)
            schemes = tuple(sorted({m.record.scheme for m in ms}))
            tags = tuple(m.tag for m in ms)
            if key in flaws:
                f = flaws[key]
                if name not in f.detectors_affected:
                    f.detectors_affected.append(name)
                f.schemes = tuple(sorted(set(f.schemes) | set(schemes)))
                f.tags = tuple(dict.fromkeys(f.tags + tags))
                continue
            example = None
            status = CANDIDATE
            for m in ms:
                try:
                    example = synthesize_minimal_example(m.tag, p, ledger, filtered.witnesses)
                except SynthesisError as exc:
                    logger.warning("manual synthesis needed for %s: %s", m.tag, exc)
                    continue
                rec = confirm_flaw(example, config, fc, sig, strategy=strategy)
                status = rec.status
                if status == CONFIRMED:
                    break
            flaws[key] = FlawRecord("", fc, sig, example.tag if example else ms[0].tag, example,
                                    [name], status, schemes, tags)
    out = sorted(flaws.values(), key=lambda f: (f.flaw_class, f.signature))
    for i, f in enumerate(out, start=1):
        f.flaw_id = f"F{i}"
    return out


@dataclass
class PropagationMatrix:
    flaws: list[FlawRecord]
    detectors: list[str]
    cells: dict[tuple[str, str], str]

    def column(self, detector: str) -> list[str]:
        return [self.cells[(f.flaw_id, detector)] for f in self.flaws]

    def row(self, flaw_id: str) -> list[str]:
        return [self.cells[(flaw_id, d)] for d in self.detectors]

    def to_tsv(self) -> str:
        lines = ["\t".join(["flaw", "class", "signature"] + self.detectors)]
        for f in self.flaws:
            lines.append("\t".join([f.flaw_id, f.flaw_class, f.signature] + self.row(f.flaw_id)))
        return "\n".join(lines) + "\n"


def matrix_cell(example: Optional[MinimalExample], detector: Union[DetectorConfig, DetectionReport, None]) -> str:
    """present: the flaw reproduces (tag missed); absent: detected; crash: no usable result."""
    if example is None or detector is None:
        return CRASH
    report = _detect(example, detector)
    if report.status != OK:
        return CRASH
    if report.fingerprint and report.fingerprint != example.ledger.fingerprint:
        return CRASH
    return ABSENT if example.tag in report.detected else PRESENT


def propagation_matrix(flaws: Sequence[FlawRecord],
                       detectors: Sequence[Union[DetectorConfig, Sequence[DetectionReport]]],
                       names: Optional[Sequence[str]] = None) -> PropagationMatrix:
    """Analyse every flaw's minimal example with every detector.

    A detector is either a config (re-run here) or a collection of external
    reports, matched to minimal examples by program fingerprint; a flaw with
    no matching report counts as untestable (crash).
    """
    cols: list[str] = []
    cells: dict[tuple[str, str], str] = {}
    for i, det in enumerate(detectors):
        if isinstance(det, DetectorConfig):
            name = det.name
        else:
            det = list(det)
            name = det[0].detector if det else f"external{i}"
        if names is not None:
            name = names[i]
        cols.append(name)
        for f in flaws:
            ex = f.minimal_example
            if isinstance(det, DetectorConfig):
                cells[(f.flaw_id, name)] = matrix_cell(ex, det)
            else:
                match = None
                if ex is not None:
                    match = next((r for r in det if r.fingerprint == ex.ledger.fingerprint), None)
                cells[(f.flaw_id, name)] = matrix_cell(ex, match)
    return PropagationMatrix(list(flaws), cols, cells)
