"""Reference detectors: configs, call graphs, taint results and report files."""

from __future__ import annotations

import itertools
import random
from dataclasses import replace

import pytest
from conftest import program
from hypothesis import given
from hypothesis import strategies as st

from soundmut.applang import INIT, parse_program
from soundmut.corpus import SyntheticSpec, fixture_names, generate_program
from soundmut.detectors import (
    BASELINE,
    CRASH,
    OK,
    TOGGLES,
    ConfigError,
    DetectionReport,
    ReportError,
    analyze,
    analyze_sources,
    build_call_graph,
    combine,
    load_external_report,
    parse_config,
    parse_report,
    reference_configs,
    write_report,
)
from soundmut.execengine import filter_executable
from soundmut.mutagen import DEFAULT_LEAK, parse_schemes, seed_all
from soundmut.museval import attribute, diff_undetected

REFS = reference_configs()


def _seed(text: str, schemes: str = "reach"):
    s = seed_all(program(text), parse_schemes(schemes), DEFAULT_LEAK)
    return s, filter_executable(s.program, s.ledger)


def _tags_in(s, cls, method):
    return {r.tag for r in s.ledger.records if (r.sink.cls, r.sink.method) == (cls, method)}


# ----------------------------------------------------------------------
# configs


def test_config_text_round_trip():
    for c in list(REFS.values()) + [combine("both", REFS["fc1"], REFS["fc4"])]:
        back = parse_config(c.to_text())
        assert back == c


def test_config_parsing_details():
    c = parse_config("# comment\nfc2 = yes\ndrop_callbacks = onReceive, submit\ncrash_on=fragment\n", "mine")
    assert c.name == "mine" and c.toggles == ("fc2",)
    assert "onReceive" not in c.callback_list and "submit" not in c.callback_list
    assert c.crash_on == {"fragment"}
    # without fc1 the callback list is not consulted
    assert c.admits("onReceive")


@pytest.mark.parametrize("text", [
    "fc1",
    "fc9=true",
    "fc1=maybe",
    "callbacks=onTeleport",
    "crash_on=everything",
    "sources=source.moon",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_combine_unions_gaps():
    c = combine("x", REFS["fc1"], REFS["fc4"])
    assert c.toggles == ("fc1", "fc4")
    assert c.callback_list == REFS["fc1"].callback_list
    assert combine("b").behaviour() == BASELINE.behaviour()


# ----------------------------------------------------------------------
# call graph


def test_nested_receiver_graph(fixtures):
    p = fixtures["nested_receiver"]
    assert ("Main$1$1", "onReceive") in build_call_graph(p, BASELINE).nodes
    assert ("Main$1$1", "onReceive") not in build_call_graph(p, REFS["fc3"]).nodes
    assert ("Main$1", "onReceive") in build_call_graph(p, REFS["fc3"]).nodes


def test_unreferenced_plain_class_is_never_in_the_graph(fixtures):
    p = fixtures["dead_code"]
    for c in REFS.values():
        g = build_call_graph(p, c)
        assert not any(cls == "Unused" for cls, _ in g.nodes)


def test_unregistered_receiver_is_not_an_entry(fixtures):
    g = build_call_graph(fixtures["static_receivers"], BASELINE)
    assert ("Boot", "onReceive") in g.entries and ("Orphan", "onReceive") not in g.nodes


def test_fc5_drops_fragment_lifecycle(fixtures):
    p = fixtures["fragment_host"]
    base = build_call_graph(p, BASELINE).nodes
    gap = build_call_graph(p, REFS["fc5"]).nodes
    frag = [n for n in base if n[0] == "Host$Details" or n[0].endswith("Details")]
    assert frag
    assert not any(n in gap for n in frag if n[1] in ("onCreateView", INIT))


def test_graph_nodes_are_reachable_from_entries(corpus):
    for s in corpus.values():
        for c in REFS.values():
            g = build_call_graph(s.program, c)
            seen = set(g.entries)
            work = list(g.entries)
            while work:
                n = work.pop()
                for m in g.succ(n):
                    if m not in seen:
                        seen.add(m)
                        work.append(m)
            assert set(g.nodes) == seen


# ----------------------------------------------------------------------
# analysis


RECEIVER_APP = """
manifest { entry Main; activity Main; receiver R on "GO"; }
activity Main {
  callback onCreate() { Helper.work(); }
}
receiver R {
  callback onReceive() { Other.work(); }
}
class Helper { work() { } }
class Other { work() { } }
"""


def test_fc1_without_on_receive_loses_exactly_receiver_tags():
    s, _ = _seed(RECEIVER_APP)
    base = analyze(s.program, BASELINE).detected
    fc1 = analyze(s.program, REFS["fc1"]).detected
    # Other (constructor included) is only reachable through onReceive
    only_via_receiver = _tags_in(s, "R", "onReceive") | _tags_in(s, "Other", "work") | _tags_in(s, "Other", INIT)
    assert base - fc1 == only_via_receiver
    assert fc1 <= base


def test_fc4_misses_cross_callback_flow():
    text = ("manifest { entry M; activity M; } activity M { var z = \"\"; "
            "callback onStart() { } callback onResume() { } }")
    s, f = _seed(text, "taint")
    split = {r.tag for r in s.ledger.records if r.split}
    assert split and split <= f.executable
    assert split <= analyze(s.program, BASELINE).detected
    assert not split & analyze(s.program, REFS["fc4"]).detected


def test_fc2_misses_async_closure(fixtures):
    s = seed_all(fixtures["async_tasks"], parse_schemes("reach"), DEFAULT_LEAK)
    closure_tags = {r.tag for r in s.ledger.records
                    if s.program.index.classes[r.sink.cls].created_by in ("submit", "runOnUi", "startThread")}
    assert closure_tags <= analyze(s.program, BASELINE).detected
    assert not closure_tags & analyze(s.program, REFS["fc2"]).detected


def test_program_without_mutants_has_no_detections():
    p = program("manifest { entry M; activity M; } activity M { callback onCreate() { var a = \"x\"; } }")
    for c in REFS.values():
        r = analyze(p, c)
        assert r.status == OK and r.detected == frozenset()


def test_weak_label_is_not_reported():
    p = program('manifest { entry M; activity M; } activity M { callback onCreate() { '
                'var a = "x"; log("plain", a); var s = source.timezone(); log("hot", s); } }')
    assert analyze(p, BASELINE).detected == {"hot"}


def test_crash_on_models_tool_failure(fixtures):
    c = replace(BASELINE, name="fragile", crash_on=frozenset({"fragment"}))
    assert analyze(fixtures["fragment_host"], c).status == CRASH
    assert analyze(fixtures["lifecycle_basic"], c).status == OK
    assert analyze_sources({"a.al": "activity {"}, BASELINE).status == CRASH


@pytest.mark.parametrize("name", fixture_names())
def test_baseline_is_sound_on_fixtures(corpus, name):
    s = corpus[name]
    assert set(s.filtered.executable) <= s.reports["baseline"].detected


@given(st.integers(0, 10_000))
def test_baseline_is_sound_on_generated_programs(seed):
    rng = random.Random(seed)
    p = parse_program(generate_program(rng, "g", SyntheticSpec()))
    s = seed_all(p, parse_schemes("reach,taint,scope"), DEFAULT_LEAK)
    f = filter_executable(s.program, s.ledger)
    assert set(f.executable) <= analyze(s.program, BASELINE).detected


_SUBSETS = [frozenset(c) for n in range(len(TOGGLES) + 1) for c in itertools.combinations(TOGGLES, n)]


def _with(toggles):
    c = replace(BASELINE, name="t", **{t: True for t in toggles})
    if "fc1" in toggles:
        c = replace(c, callback_list=REFS["fc1"].callback_list)
    return c


@given(st.sampled_from(_SUBSETS), st.sampled_from(_SUBSETS), st.sampled_from(fixture_names()))
def test_more_gaps_never_detect_more(corpus, a, b, name):
    small, big = a, a | b
    p = corpus[name].program
    assert analyze(p, _with(big)).detected <= analyze(p, _with(small)).detected


@pytest.mark.parametrize("toggle", TOGGLES)
def test_every_miss_is_explained_by_the_enabled_gap(corpus, toggle):
    config = REFS[toggle]
    for s in corpus.values():
        u = diff_undetected(s.ledger, s.filtered, s.reports[toggle])
        for m in u.mutants:
            label = attribute(s.program, config, m)
            assert label is not None and label[0] == toggle.upper(), (s.name, m.tag)


def test_analysis_is_deterministic(corpus):
    for s in corpus.values():
        for n, c in REFS.items():
            assert analyze(s.program, c) == s.reports[n]


# ----------------------------------------------------------------------
# report files


def test_report_file_round_trip(tmp_path, corpus):
    s = corpus["dynamic_click"]
    path = tmp_path / "r.txt"
    write_report(s.reports["fc3"], path)
    assert load_external_report(path, s.ledger.fingerprint) == s.reports["fc3"]


def test_report_listing_one_tag():
    r = parse_report("detector=tool fingerprint=abc status=ok\nleak-0\n", "abc")
    assert r == DetectionReport("tool", frozenset({"leak-0"}), OK, "abc")


def test_empty_ok_report_and_crash_report():
    assert parse_report("detector=tool fingerprint=abc status=ok\n").detected == frozenset()
    assert parse_report("detector=tool fingerprint=abc status=crash\n").status == CRASH


@pytest.mark.parametrize("text, fp", [
    ("", None),
    ("leak-0\n", None),
    ("detector=tool fingerprint=abc status=exploded\n", None),
    ("detector=tool fingerprint=abc status=ok\n", "def"),
])
def test_report_errors(text, fp):
    with pytest.raises(ReportError):
        parse_report(text, fp)


def test_unknown_tags_in_reports_are_kept(caplog):
    r = parse_report("detector=t fingerprint= status=ok\nleak-9\n", known_tags=["leak-0"])
    assert r.detected == {"leak-9"} and "unknown tag" in caplog.text
