"""Soundness evaluation: diffing, triage, minimal examples, flaws and propagation."""

from soundmut.museval.attribution import FLAW_CLASSES, PRIORITY, attribute, structural_match
from soundmut.museval.diff import (
    FingerprintError,
    ReportStatusError,
    TriageReport,
    TriageRow,
    UndetectedMutant,
    UndetectedSet,
    diff_undetected,
    format_chain,
    source_chain,
    triage,
)
from soundmut.museval.flaws import (
    ABSENT,
    CANDIDATE,
    CONFIRMED,
    PRESENT,
    FlawRecord,
    PreconditionError,
    PropagationMatrix,
    collect_flaws,
    confirm_flaw,
    flaws_from_tsv,
    flaws_to_tsv,
    matrix_cell,
    propagation_matrix,
)
from soundmut.museval.synthesis import MinimalExample, SynthesisError, synthesize_minimal_example, try_synthesize

__all__ = [
    "ABSENT", "CANDIDATE", "CONFIRMED", "FLAW_CLASSES", "FingerprintError", "FlawRecord",
    "MinimalExample", "PRESENT", "PRIORITY", "PreconditionError", "PropagationMatrix",
    "ReportStatusError", "SynthesisError", "TriageReport", "TriageRow", "UndetectedMutant",
    "UndetectedSet", "attribute", "collect_flaws", "confirm_flaw", "diff_undetected",
    "flaws_from_tsv", "flaws_to_tsv", "format_chain", "matrix_cell", "propagation_matrix", "source_chain",
    "structural_match", "synthesize_minimal_example", "triage", "try_synthesize",
]
