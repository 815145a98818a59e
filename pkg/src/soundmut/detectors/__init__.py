"""Reference taint detectors with configurable soundness gaps."""

from soundmut.detectors.analysis import (
    CRASH,
    OK,
    TIMEOUT,
    DetectionReport,
    analyze,
    analyze_sources,
    program_features,
)
from soundmut.detectors.callgraph import CallGraph, Edge, build_call_graph, callback_tokens, closure
from soundmut.detectors.config import (
    BASELINE,
    FULL_CALLBACKS,
    TOGGLES,
    ConfigError,
    DetectorConfig,
    combine,
    load_config,
    parse_config,
    reference_configs,
)
from soundmut.detectors.report import ReportError, load_external_report, parse_report, write_report

__all__ = [
    "BASELINE", "CRASH", "CallGraph", "ConfigError", "DetectionReport", "DetectorConfig",
    "Edge", "FULL_CALLBACKS", "OK", "ReportError", "TIMEOUT", "TOGGLES", "analyze",
    "analyze_sources", "build_call_graph", "callback_tokens", "closure", "combine",
    "load_config", "load_external_report", "parse_config", "parse_report",
    "program_features", "reference_configs", "write_report",
]
