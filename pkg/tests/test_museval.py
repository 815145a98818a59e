"""Diffing, triage, minimal examples, flaw confirmation and the propagation matrix."""

from __future__ import annotations

from dataclasses import replace

import pytest
from conftest import program, seed_fixture

from soundmut.applang import ClassKind, render_program
from soundmut.detectors import BASELINE, CRASH, DetectionReport, analyze, combine, reference_configs
from soundmut.execengine import filter_executable
from soundmut.mutagen import DEFAULT_LEAK, parse_schemes, seed_all
from soundmut.museval import (
    ABSENT,
    CANDIDATE,
    CONFIRMED,
    PRESENT,
    FingerprintError,
    MinimalExample,
    PreconditionError,
    ReportStatusError,
    SynthesisError,
    attribute,
    collect_flaws,
    confirm_flaw,
    diff_undetected,
    flaws_from_tsv,
    flaws_to_tsv,
    matrix_cell,
    propagation_matrix,
    synthesize_minimal_example,
    triage,
)

REFS = reference_configs()


def _seed(text: str, schemes: str):
    s = seed_all(program(text), parse_schemes(schemes), DEFAULT_LEAK)
    return s, filter_executable(s.program, s.ledger)


def _methods(p):
    return {(c, m.name) for c, info in p.index.classes.items() for m in info.decl.methods}


# ----------------------------------------------------------------------
# diff


def test_empty_report_leaves_every_executable_mutant_undetected(corpus):
    for s in corpus.values():
        empty = DetectionReport("none", frozenset(), fingerprint=s.ledger.fingerprint)
        assert set(diff_undetected(s.ledger, s.filtered, empty).tags) == s.filtered.executable


def test_diff_rejects_crashed_and_foreign_reports(corpus):
    s = corpus["lifecycle_basic"]
    with pytest.raises(ReportStatusError):
        diff_undetected(s.ledger, s.filtered, DetectionReport("t", frozenset(), CRASH, s.ledger.fingerprint))
    with pytest.raises(FingerprintError):
        diff_undetected(s.ledger, s.filtered, corpus["dead_code"].reports["baseline"])


def test_funnel_shrinks(corpus):
    for s in corpus.values():
        for r in s.reports.values():
            u = diff_undetected(s.ledger, s.filtered, r)
            assert len(s.ledger.tags) >= len(s.filtered.executable) >= len(u)
            assert set(u.tags) <= s.filtered.executable and not set(u.tags) & r.detected


# ----------------------------------------------------------------------
# triage

FRAGMENT_APP = """
manifest { entry Main; activity Main; }
activity Main {
  fragment Pane {
    callback onCreateView() { }
  }
}
"""


def test_triage_groups_by_sink_method_largest_first():
    s, f = _seed(FRAGMENT_APP, "reach,complex")
    u = diff_undetected(s.ledger, f, analyze(s.program, REFS["fc5"]))
    t = triage(u, s.program)
    (first, rows), *rest = t.groups
    assert first == ("Main.Pane", "onCreateView") and len(rows) == 2
    assert all(len(r) < 2 for _, r in rest)
    assert "Main.Pane.onCreateView  [2]" in t.to_text()


def test_triage_chain_shows_both_broadcasts():
    s = seed_fixture("nested_receiver", "reach")
    u = diff_undetected(s.ledger, s.filtered, s.reports["fc3"])
    assert len(u) == 1
    row = triage(u, s.program).rows[0]
    assert row.chain.count("(broadcast)") == 2


def test_triage_labels_and_tsv(corpus):
    s = corpus["async_tasks"]
    u = diff_undetected(s.ledger, s.filtered, s.reports["fc2"])
    t = triage(u, s.program, lambda m: attribute(s.program, REFS["fc2"], m))
    assert t.rows and all(r.flaw_class == "FC2" for r in t.rows)
    lines = t.to_tsv().splitlines()
    assert len(lines) == len(u) + 1 and all(len(ln.split("\t")) == 10 for ln in lines)


def test_empty_triage_text(corpus):
    s = corpus["lifecycle_basic"]
    t = triage(diff_undetected(s.ledger, s.filtered, s.reports["baseline"]), s.program)
    assert t.groups == [] and "no undetected" in t.to_text()


# ----------------------------------------------------------------------
# minimal examples


def test_reach_skeleton_in_on_create():
    s, f = _seed("manifest { entry M; activity M; activity N; } activity M { callback onCreate() { } "
                 "callback onStart() { this.x(); } x() { } } activity N { callback onCreate() { } }", "reach")
    tag = next(r.tag for r in s.ledger.records if (r.sink.cls, r.sink.method) == ("M", "onCreate"))
    ex = synthesize_minimal_example(tag, s.program, s.ledger, f.witnesses)
    assert list(ex.program.index.classes) == ["M"]
    assert _methods(ex.program) == {("M", "onCreate")}
    assert ex.tags == [tag]
    assert tag in filter_executable(ex.program, ex.ledger).executable


def test_scope_skeleton_keeps_nesting_and_both_sinks():
    s = seed_fixture("scope_nesting", "scope")
    for tag in s.filtered.executable:
        ex = synthesize_minimal_example(tag, s.program, s.ledger, s.filtered.witnesses)
        sib = s.ledger.siblings(tag)
        assert len(ex.tags) == len(sib) >= 2
        for r in ex.ledger.records:
            assert r.sink.cls in ex.program.index.classes
        # nested classes survive under their parents
        for q in {r.sink.cls for r in sib}:
            assert q in ex.program.index.classes


def test_taint_skeleton_keeps_both_callbacks():
    s, f = _seed("manifest { entry M; activity M; } activity M { callback onCreate() { } "
                 "callback onStart() { } callback onResume() { } }", "taint")
    rec = next(r for r in s.ledger.records if (r.source.method, r.sink.method) == ("onStart", "onResume"))
    ex = synthesize_minimal_example(rec.tag, s.program, s.ledger, f.witnesses)
    assert {"onStart", "onResume"} <= {m for _, m in _methods(ex.program)}
    assert rec.tag in filter_executable(ex.program, ex.ledger).executable


def test_skeleton_renders_and_has_stable_fingerprint(corpus):
    s = corpus["fragment_host"]
    tag = sorted(s.filtered.executable)[0]
    a = synthesize_minimal_example(tag, s.program, s.ledger, s.filtered.witnesses)
    b = synthesize_minimal_example(tag, s.program, s.ledger, s.filtered.witnesses)
    assert render_program(a.program) == render_program(b.program)
    assert a.ledger.fingerprint == b.ledger.fingerprint


def test_synthesis_errors(corpus):
    s = corpus["dead_code"]
    with pytest.raises(SynthesisError):
        synthesize_minimal_example("leak-999", s.program, s.ledger, s.filtered.witnesses)
    dead = sorted(s.filtered.nonexecutable)[0]
    with pytest.raises(SynthesisError):
        synthesize_minimal_example(dead, s.program, s.ledger, s.filtered.witnesses)


# ----------------------------------------------------------------------
# confirmation


def test_fragment_skeleton_confirmed_under_fc5():
    s, f = _seed(FRAGMENT_APP, "reach")
    tag = next(r.tag for r in s.ledger.records if r.sink.method == "onCreateView")
    ex = synthesize_minimal_example(tag, s.program, s.ledger, f.witnesses)
    assert any(i.kind is ClassKind.FRAGMENT for i in ex.program.index.classes.values())
    assert confirm_flaw(ex, REFS["fc5"], "FC5").status == CONFIRMED
    assert confirm_flaw(ex, BASELINE, "FC5").status == CANDIDATE


def test_every_skeleton_stays_executable_and_baseline_never_confirms(corpus):
    # covers class-level mutants reached through a constructing static call
    for s in corpus.values():
        for tag in sorted(s.filtered.executable):
            ex = synthesize_minimal_example(tag, s.program, s.ledger, s.filtered.witnesses)
            assert confirm_flaw(ex, BASELINE, "FC1").status == CANDIDATE


def test_non_executable_example_is_a_precondition_error(corpus):
    s = corpus["dead_code"]
    dead = sorted(s.filtered.nonexecutable)[0]
    with pytest.raises(PreconditionError):
        confirm_flaw(MinimalExample(dead, s.program, s.ledger), REFS["fc1"], "FC1")


def test_crashing_detector_gives_crash_status(corpus):
    s = corpus["fragment_host"]
    frag = {q for q, i in s.program.index.classes.items() if i.kind is ClassKind.FRAGMENT}
    tag = sorted(t for t in s.filtered.executable if s.ledger.get(t).sink.cls in frag)[0]
    ex = synthesize_minimal_example(tag, s.program, s.ledger, s.filtered.witnesses)
    fragile = replace(BASELINE, name="fragile", crash_on=frozenset({"fragment"}))
    assert confirm_flaw(ex, fragile, "FC5").status == CRASH


# ----------------------------------------------------------------------
# flaws and matrix


@pytest.fixture(scope="module")
def flaws(corpus):
    out = []
    for s in corpus.values():
        undetected = {n: diff_undetected(s.ledger, s.filtered, r) for n, r in s.reports.items()}
        out = collect_flaws(s.program, s.ledger, s.filtered, undetected, REFS, existing=out)
    return out


def test_flaws_are_unique_per_signature(flaws):
    keys = [(f.flaw_class, f.signature) for f in flaws]
    assert len(keys) == len(set(keys)) and flaws
    assert [f.flaw_id for f in flaws] == [f"F{i}" for i in range(1, len(flaws) + 1)]
    assert {f.flaw_class for f in flaws} == {"FC1", "FC2", "FC3", "FC4", "FC5"}


def test_confirmed_flaws_replay(flaws):
    for f in flaws:
        if f.status != CONFIRMED:
            continue
        ex = f.minimal_example
        assert f.tag in filter_executable(ex.program, ex.ledger).executable
        config = REFS[f.detectors_affected[0]]
        assert f.tag not in analyze(ex.program, config).detected


def test_flaw_table_round_trip(flaws):
    text = flaws_to_tsv(flaws)
    examples = {f.flaw_id: f.minimal_example for f in flaws if f.minimal_example is not None}
    back = flaws_from_tsv(text, examples)
    assert flaws_to_tsv(back).splitlines()[0] == text.splitlines()[0]
    assert [(b.flaw_id, b.signature, b.status) for b in back] == [(f.flaw_id, f.signature, f.status) for f in flaws]
    first = next(f for f in flaws if f.minimal_example is not None)
    with pytest.raises(ValueError):
        flaws_from_tsv(text, {k: v for k, v in examples.items() if k != first.flaw_id})


def test_matrix_laws(flaws):
    twin = replace(REFS["fc2"], name="fc2-copy")
    both = combine("fc1+fc4", REFS["fc1"], REFS["fc4"])
    m = propagation_matrix(flaws, [BASELINE, REFS["fc1"], both, REFS["fc2"], twin])
    assert m.column("fc2") == m.column("fc2-copy")
    assert set(m.column("baseline")) == {ABSENT}
    for f in flaws:
        if m.cells[(f.flaw_id, "fc1")] == PRESENT:
            assert m.cells[(f.flaw_id, "fc1+fc4")] == PRESENT
    assert len(m.to_tsv().splitlines()) == len(flaws) + 1


def test_matrix_with_external_reports(flaws):
    f = next(f for f in flaws if f.minimal_example is not None)
    ex = f.minimal_example
    hit = DetectionReport("tool", frozenset({f.tag}), fingerprint=ex.ledger.fingerprint)
    m = propagation_matrix(flaws, [[hit]])
    assert m.detectors == ["tool"]
    assert m.cells[(f.flaw_id, "tool")] == ABSENT
    assert all(m.cells[(g.flaw_id, "tool")] == CRASH for g in flaws if g is not f)
    assert matrix_cell(ex, DetectionReport("tool", frozenset(), fingerprint=ex.ledger.fingerprint)) == PRESENT
    assert matrix_cell(None, BASELINE) == CRASH
