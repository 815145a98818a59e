"""Operators, injection profiles, seeding and the ledger."""

from __future__ import annotations

import random
import re
from collections import Counter

import pytest
from conftest import program
from hypothesis import given
from hypothesis import strategies as st

from soundmut.applang import ClassKind, fingerprint, parse_program, render_program
from soundmut.applang.nodes import CharLoop, CryptoCall, FieldDecl, Log, SourceCall, Str, Var, VarDecl
from soundmut.corpus import COUNTING_FIXTURE, fixture_names, generate_program, load_fixture
from soundmut.execengine import Interpreter, events
from soundmut.execengine.trace import ExecutionTrace
from soundmut.mutagen import (
    DEFAULT_CRYPTO,
    DEFAULT_LEAK,
    Goal,
    Ledger,
    LedgerError,
    MutationScheme,
    OperatorError,
    SchemeKind,
    SeedingError,
    apply_scheme,
    compute_mip,
    load_operator,
    load_operators,
    parse_schemes,
    seed_all,
    seed_isolated,
)
from soundmut.mutagen.operators import injected_body

REACH = MutationScheme(SchemeKind.REACHABILITY)
COMPLEX = MutationScheme(SchemeKind.COMPLEX)
TAINT = MutationScheme(SchemeKind.TAINT)
SCOPE = MutationScheme(SchemeKind.SCOPE)


# ----------------------------------------------------------------------
# brute-force AST enumeration (walks raw declarations, not the index)


def _all_decls(p):
    """(decl, enclosing chain) for every class, anonymous ones included."""
    out = []

    def anon_in(body):
        for s in body:
            for attr in ("receiver", "listener", "closure"):
                a = getattr(s, attr, None)
                if a is not None:
                    yield a
            for arm in ("then", "orelse"):
                sub = getattr(s, arm, None)
                if sub:
                    yield from anon_in(sub)

    def visit(d, chain):
        out.append((d, chain))
        for m in d.members:
            if hasattr(m, "members"):
                visit(m, chain + [d])
            elif hasattr(m, "body"):
                for a in anon_in(m.body):
                    visit(a, chain + [d])

    for c in p.classes:
        visit(c, [])
    return out


def brute_reach_count(p) -> int:
    decls = _all_decls(p)
    return sum(len(d.methods) for d, _ in decls) + sum(1 for d, _ in decls if d.name is not None)


def brute_taint_counts(p) -> tuple[int, int]:
    """(sources, sinks) summed over classes: every callback pairs with every callback."""
    lifecycle = {
        ClassKind.ACTIVITY: {"onCreate", "onStart", "onResume", "onPause", "onStop", "onDestroy"},
        ClassKind.FRAGMENT: {"onCreate", "onCreateView", "onDestroyView"},
        ClassKind.RECEIVER: {"onReceive"},
        ClassKind.LISTENER: {"onClick"},
    }
    sources = sinks = 0
    bound_by_decl: dict[int, set] = {}
    for d, chain in _all_decls(p):
        if d.layout is not None:
            for b in p.layout(d.layout).buttons:
                if b.on_click is None:
                    continue
                for owner in reversed(chain + [d]):
                    if owner.method(b.on_click) is not None:
                        bound_by_decl.setdefault(id(owner), set()).add(b.on_click)
                        break
    for d, _ in _all_decls(p):
        allowed = {"run"} if d.kind is ClassKind.PLAIN and d.name is None else lifecycle.get(d.kind, set())
        cbs = {m.name for m in d.methods if m.is_callback and m.name in allowed} | bound_by_decl.get(id(d), set())
        sources += len(cbs)
        sinks += len(cbs) ** 2
    return sources, sinks


def brute_scope_pairs(p, depth: int = 2) -> int:
    total = 0

    def inner_methods(d, level):
        if level >= depth:
            return 0
        return sum(len(n.methods) + inner_methods(n, level + 1) for n in d.nested)

    for d, _ in _all_decls(p):
        if d.name is not None:
            total += len(d.methods) * inner_methods(d, 0)
    return total


# ----------------------------------------------------------------------
# operators


def test_leak_operator_injected_body():
    decl, log = injected_body(DEFAULT_LEAK, 7)
    assert decl == VarDecl("dataLeak7", SourceCall("timezone"))
    assert log == Log("leak-7", Var("dataLeak7"))


def test_crypto_operator_uses_literal_as_source_and_call_as_sink():
    op = load_operator('goal=cryptoMisuse; source="AES"; sink=crypto.getCipher; path=charLoop')
    assert op.goal is Goal.CRYPTO_MISUSE and op.source == "AES" and op.tag_prefix == "misuse"
    decl, log = injected_body(op, 0)
    assert decl == VarDecl("cryptoParam0", Str("AES"))
    assert log == Log("misuse-0", CryptoCall("getCipher", Var("cryptoParam0")))


def test_operator_line_round_trips():
    line = DEFAULT_LEAK.describe()
    assert load_operator(line) == DEFAULT_LEAK
    assert load_operator(DEFAULT_CRYPTO.describe()) == DEFAULT_CRYPTO


@pytest.mark.parametrize("spec, msg", [
    ("goal=dataLeak; source=source.gps; sink=log", "unknown source API"),
    ("goal=dataLeak; source=source.timezone; sink=print", "unknown sink API"),
    ("goal=steal; source=source.timezone; sink=log", "unknown goal"),
    ("goal=dataLeak; sink=log", "missing 'source'"),
    ("goal=dataLeak; source=source.timezone; sink=log; path=rot13", "unknown path rule"),
    ('goal=cryptoMisuse; source=AES; sink=crypto.getCipher', "string literal"),
    ('goal=cryptoMisuse; source="AES"; sink=crypto.hash', "unknown sink API"),
    ("nonsense", "malformed"),
])
def test_operator_validation(spec, msg):
    with pytest.raises(OperatorError, match=msg):
        load_operator(spec)


def test_empty_operator_file_is_an_error():
    with pytest.raises(OperatorError):
        load_operators("# nothing here\n")


def test_unknown_scheme_name_is_an_error():
    with pytest.raises(ValueError):
        parse_schemes("reach,teleport")


def test_empty_scheme_list_is_an_error():
    with pytest.raises(SeedingError):
        seed_all(load_fixture("lifecycle_basic"), [], DEFAULT_LEAK)


# ----------------------------------------------------------------------
# injection profiles and counting laws


def test_reach_mip_on_empty_program():
    p = program("manifest { entry M; activity M; } activity M { callback onCreate() { } callback onStart() { } }")
    points = compute_mip(p, REACH)
    assert len(points) == 1 + 2
    assert Counter(pt.kind for pt in points) == {"classDecl": 1, "methodEntry": 2}


def test_reach_mip_four_methods_two_classes():
    p = program("manifest { entry M; activity M; } activity M { callback onCreate() { } f() { } } "
                "class U { g() { } h() { } }")
    assert len(compute_mip(p, REACH)) == 6 == brute_reach_count(p)


@pytest.mark.parametrize("name", fixture_names())
def test_reach_mip_equals_methods_plus_named_classes(fixtures, name):
    p = fixtures[name]
    assert len(compute_mip(p, REACH)) == brute_reach_count(p)
    res = apply_scheme(p, REACH, DEFAULT_LEAK)
    assert len(res.ledger.records) + len(res.dropped) == brute_reach_count(p)


@pytest.mark.parametrize("name", fixture_names())
def test_taint_fan_out_matches_brute_force(fixtures, name):
    p = fixtures[name]
    res = apply_scheme(p, TAINT, DEFAULT_LEAK)
    sources, sinks = brute_taint_counts(p)
    assert len(res.ledger.records) == sinks
    assert len({r.group for r in res.ledger.records}) == sources


def test_taint_three_callbacks_three_sources_nine_sinks():
    name, cls = COUNTING_FIXTURE
    p = load_fixture(name)
    res = apply_scheme(p, TAINT, DEFAULT_LEAK)
    recs = [r for r in res.ledger.records if r.source.cls == cls]
    assert len({(r.source.unit, r.source.line) for r in recs}) == 3
    assert sum(len(r.sinks) for r in recs) == 9
    methods = {r.source.method for r in recs}
    assert methods == {"onCreate", "onStart", "onResume"}


def test_cross_pairing_skips_self_pairs():
    p = load_fixture(COUNTING_FIXTURE[0])
    points = compute_mip(p, MutationScheme(SchemeKind.TAINT, taint_pairing="cross"))
    assert len([pt for pt in points if pt.source[0] == COUNTING_FIXTURE[1]]) == 6


@pytest.mark.parametrize("name", fixture_names())
def test_scope_pairs_match_brute_force(fixtures, name):
    p = fixtures[name]
    assert len(compute_mip(p, SCOPE)) == brute_scope_pairs(p)
    res = apply_scheme(p, SCOPE, DEFAULT_LEAK)
    assert len(res.ledger.records) == 2 * brute_scope_pairs(p)


def test_scope_on_nested_classes_tags_inner_then_outer():
    p = load_fixture("scope_nesting")
    res = apply_scheme(p, SCOPE, DEFAULT_LEAK)
    inner, outer = res.ledger.get("leak-0-0"), res.ledger.get("leak-0-1")
    assert inner.sink.cls == "Parent.Child" and outer.sink.cls == "Parent"
    assert inner.var == outer.var
    field_hosts = [q for q, info in res.program.index.classes.items()
                   if any(f.name == inner.var for f in info.decl.fields)]
    assert field_hosts == ["Parent"]


def test_complex_path_preserves_the_leaked_value():
    p = program('manifest { entry M; activity M; } activity M { var plain = source.timezone(); '
                'var rebuilt = charLoop(source.timezone()); }')
    it = Interpreter(p)
    it.fire(events.launch("M"), ExecutionTrace(), lambda *a: False)
    a, b = it.env.fields[("M", "plain")], it.env.fields[("M", "rebuilt")]
    assert a.text == b.text and a.labels == b.labels


def test_complex_block_rebuilds_before_sinking(fixtures):
    res = apply_scheme(fixtures["lifecycle_basic"], COMPLEX, DEFAULT_LEAK)
    body = res.program.index.body_of("Main", "onStart")
    assert isinstance(body[1], VarDecl) and isinstance(body[1].init, CharLoop)
    assert isinstance(body[2], Log)


def test_reach_class_decl_point_uses_a_field(fixtures):
    res = apply_scheme(fixtures["dead_code"], REACH, DEFAULT_LEAK)
    rec = next(r for r in res.ledger.records if r.point_kind == "classDecl" and r.source.cls == "Unused")
    fields = res.program.index.classes["Unused"].decl.fields
    assert any(isinstance(f, FieldDecl) and f.name == rec.var for f in fields)


# ----------------------------------------------------------------------
# seeding invariants


def _check_ledger(res):
    tags = res.ledger.tags
    assert len(tags) == len(set(tags))
    text = "\n".join(render_program(res.program).values())
    counts = Counter(re.findall(r'log\("((?:leak|misuse)-[0-9-]+)"', text))
    for r in res.ledger.records:
        assert counts[r.tag] == len(r.sinks)
    assert res.ledger.fingerprint == fingerprint(res.program)
    again = parse_program(render_program(res.program))
    assert again == res.program


@pytest.mark.parametrize("name", fixture_names())
def test_seed_all_ledger_is_sum_of_scheme_runs(fixtures, name):
    p = fixtures[name]
    schemes = parse_schemes("reach,complex,taint,scope")
    res = seed_all(p, schemes, DEFAULT_LEAK)
    singles = [apply_scheme(p, s, DEFAULT_LEAK) for s in schemes]
    assert len(res.ledger.records) == sum(len(s.ledger.records) + len(s.dropped) for s in singles) - len(res.dropped)
    _check_ledger(res)


def test_seeding_is_deterministic(fixtures):
    schemes = parse_schemes("reach,complex,taint,scope")
    for p in fixtures.values():
        a = seed_all(p, schemes, DEFAULT_LEAK)
        b = seed_all(p, schemes, DEFAULT_LEAK)
        assert render_program(a.program) == render_program(b.program)
        assert a.ledger.to_tsv() == b.ledger.to_tsv()


@given(st.integers(min_value=0, max_value=5000), st.sampled_from(["reach", "complex", "taint", "scope",
                                                                     "reach,taint", "reach,complex,taint,scope"]))
def test_seeding_properties_on_generated_programs(seed, schemes):
    p = parse_program(generate_program(random.Random(seed), "g"))
    res = seed_all(p, parse_schemes(schemes), DEFAULT_LEAK)
    _check_ledger(res)
    assert not res.dropped
    if schemes == "reach":
        assert len(res.ledger.records) == brute_reach_count(p)


def test_ledger_tsv_round_trip(corpus):
    for s in corpus.values():
        text = s.ledger.to_tsv()
        back = Ledger.from_tsv(text, s.program)
        assert back.to_tsv() == text
        assert back.fingerprint == s.ledger.fingerprint
        assert [r.sinks for r in back.records] == [r.sinks for r in s.ledger.records]


def test_ledger_without_header_is_rejected(corpus):
    s = corpus["lifecycle_basic"]
    with pytest.raises(LedgerError):
        Ledger.from_tsv("\n".join(s.ledger.to_tsv().splitlines()[1:]), s.program)


def test_ledger_tsv_columns(corpus):
    line = corpus["lifecycle_basic"].ledger.to_tsv().splitlines()[1]
    tag, scheme, op, src, sinks = line.split("\t")
    assert re.fullmatch(r"leak-\d+(-\d+)?", tag) and scheme in ("reach", "complex", "taint", "scope")
    assert op == DEFAULT_LEAK.id and re.fullmatch(r"app\.al:\d+", src)


def test_isolated_mode_covers_the_same_tags(fixtures):
    p = fixtures["lifecycle_basic"]
    schemes = parse_schemes("reach,taint")
    joint = seed_all(p, schemes, DEFAULT_LEAK)
    parts = seed_isolated(p, schemes, DEFAULT_LEAK)
    assert sorted(t for r in parts for t in r.ledger.tags) == sorted(joint.ledger.tags)
    for r in parts:
        assert len({rec.group for rec in r.ledger.records}) == 1
        _check_ledger(r)


def test_new_tags_never_collide_with_existing_ones(corpus):
    s = corpus["async_tasks"]
    again = seed_all(s.program, parse_schemes("reach"), DEFAULT_LEAK)
    assert not set(again.ledger.tags) & set(s.ledger.tags)


def test_crypto_operator_seeds_misuse_tags():
    p = load_fixture("crypto_usage")
    res = seed_all(p, parse_schemes("reach,taint"), DEFAULT_CRYPTO)
    assert res.ledger.tags and all(t.startswith("misuse-") for t in res.ledger.tags)
    _check_ledger(res)
    text = render_program(res.program)["app.al"]
    assert 'crypto.getCipher(cryptoParam' in text
