"""Parser, renderer, scopes and callback inventory."""

from __future__ import annotations

import random

import pytest
from conftest import program
from hypothesis import given
from hypothesis import strategies as st

from soundmut.applang import (
    INIT,
    AppLangError,
    ClassKind,
    fingerprint,
    parse_program,
    render_program,
    resolve_scopes,
)
from soundmut.applang.inventory import (
    ASYNC,
    DYNAMIC,
    DYNAMIC_NESTED,
    STATIC_LAYOUT,
    STATIC_MANIFEST,
    UNREGISTERED,
    callback_inventory,
)
from soundmut.applang.nodes import CharLoop, Concat, Str, VarDecl, Var, walk_stmts
from soundmut.applang.scopes import stmt_at
from soundmut.corpus import fixture_names, generate_program

MINIMAL = """
manifest {
  entry Main;
  activity Main;
}

activity Main {
  callback onCreate() {
  }
}
"""


# ----------------------------------------------------------------------
# parse / render


@pytest.mark.parametrize("name", fixture_names())
def test_round_trip_on_fixture(fixtures, name):
    p = fixtures[name]
    again = parse_program(render_program(p))
    assert again == p
    assert render_program(again) == render_program(p)
    assert fingerprint(again) == fingerprint(p)


@given(st.integers(min_value=0, max_value=10_000))
def test_round_trip_on_generated_programs(seed):
    units = generate_program(random.Random(seed), "g")
    p = parse_program(units)
    assert parse_program(render_program(p)) == p


def test_fixtures_contain_no_char_loop(fixtures):
    def has_loop(e):
        if isinstance(e, CharLoop):
            return True
        if isinstance(e, Concat):
            return has_loop(e.left) or has_loop(e.right)
        return False

    for p in fixtures.values():
        for q, m in p.index.all_methods():
            for s in walk_stmts(p.index.body_of(q, m)):
                for attr in ("init", "expr"):
                    e = getattr(s, attr, None)
                    assert e is None or not has_loop(e)


def test_char_loop_renders_in_loop_form_and_reparses():
    p = program(MINIMAL.replace("callback onCreate() {\n", 'callback onCreate() {\n    var x = charLoop("abc");\n'))
    text = render_program(p)["app.al"]
    assert "charLoop(" in text
    body = parse_program(render_program(p)).index.body_of("Main", "onCreate")
    assert body[0] == VarDecl("x", CharLoop(Str("abc")))


def test_formatting_does_not_change_fingerprint():
    squashed = "manifest { entry Main; activity Main; } activity Main { callback onCreate() { } }"
    assert fingerprint(program(squashed)) == fingerprint(program(MINIMAL))


def test_nested_receiver_has_anonymous_lexical_parent(fixtures):
    p = fixtures["nested_receiver"]
    inner = p.index.classes["Main$1$1"]
    assert inner.anonymous and inner.parent == "Main$1"
    assert p.index.classes["Main$1"].anonymous
    assert p.index.is_anon_in_anon("Main$1$1")


def test_anonymous_names_count_per_class_in_preorder(fixtures):
    p = fixtures["async_tasks"]
    anon = [q for q, i in p.index.classes.items() if i.anonymous]
    assert anon == ["Main$1", "Main$2", "Main$3"]
    assert [p.index.classes[q].created_by for q in anon] == ["submit", "runOnUi", "startThread"]


@pytest.mark.parametrize("text, fragment", [
    ("manifest { entry Main; activity Main; } activity Main { callback onCreate() { var x = ; } }", "expected"),
    ("manifest { entry Main; activity Main; }", "undeclared class"),
    ("manifest { entry X; } activity X { }", "not listed as activity"),
    ("manifest { entry Main; activity Main; } activity Main { callback onCreate() { log(\"t\", y); } }",
     "unresolved variable"),
    ("manifest { entry Main; activity Main; } activity Main { callback onReceive() { } }", "not a callback"),
    ("manifest { entry Main; activity Main; } activity Main { callback onCreate() { this.nope(); } }",
     "unresolved call"),
    ("manifest { entry Main; activity Main; } activity Main { f() { } f() { } }", "duplicate method"),
    ("manifest { entry Main; activity Main; } layout l { button b; button b; } activity Main uses l { }",
     "duplicate button"),
    ("manifest { entry Main; activity Main; } activity Main uses nowhere { }", "unknown layout"),
    ("manifest { entry Main; activity Main; receiver R on \"\"; } activity Main { } receiver R { }",
     "empty receiver action"),
    ("manifest { entry Main; activity Main; } activity Main { callback onCreate() { var x = source.gps(); } }",
     "unknown source API"),
    ("manifest { entry Main; activity Main; } activity Main { var entry = \"\"; }", "expected identifier"),
])
def test_invalid_programs_are_rejected(text, fragment):
    with pytest.raises(AppLangError) as exc:
        program(text)
    assert fragment in str(exc.value)
    assert exc.value.diagnostics


def test_layout_binding_to_missing_method_is_an_error():
    text = MINIMAL.replace("activity Main {", "layout l {\n  button b onClick = \"gone\";\n}\n\nactivity Main uses l {")
    with pytest.raises(AppLangError, match="missing method"):
        callback_inventory(program(text))


def test_diagnostics_name_unit_and_line():
    with pytest.raises(AppLangError) as exc:
        parse_program({"x.al": "manifest {\n  entry Main;\n  activity Main;\n}\nactivity Main {\n  bad bad\n}\n"})
    d = exc.value.diagnostics[0]
    assert d.unit == "x.al" and d.line == 6


# ----------------------------------------------------------------------
# scopes


NESTED_SCOPES = """
manifest {
  entry Parent;
  activity Parent;
}

activity Parent {
  var shared = "";
  callback onCreate() {
    var local = "x";
    Child.update();
  }
  other() {
    log("t", shared);
  }
  class Child {
    update() {
      shared = "child";
    }
  }
}
"""


def test_parent_field_visible_in_nested_child_with_enclosing_provenance():
    p = program(NESTED_SCOPES)
    table = resolve_scopes(p)
    pos = next(x for x in table.positions() if x.cls == "Parent.Child" and x.method == "update")
    sym = table.lookup(pos, "shared")
    assert sym is not None and sym.kind == "field" and sym.provenance == "enclosing" and sym.owner == "Parent"


def test_method_local_invisible_in_sibling_method():
    p = program(NESTED_SCOPES)
    table = resolve_scopes(p)
    pos = next(x for x in table.positions() if x.method == "other")
    assert table.lookup(pos, "local") is None
    assert table.lookup(pos, "shared").provenance == "class"


def _spans(text: str) -> dict[int, int]:
    """Line of every opening brace line -> line of its matching close (brute-force text scan)."""
    lines = text.splitlines()
    spans: dict[int, int] = {}
    stack: list[int] = []
    for n, ln in enumerate(lines, start=1):
        for ch in ln:
            if ch == "{":
                stack.append(n)
            elif ch == "}":
                start = stack.pop()
                spans.setdefault(start, n)
    return spans


def _lexical_oracle(p, text: str, cls: str, method: str, line: int) -> dict[str, tuple[str, str]]:
    """Names visible at ``line`` computed from source text spans, independently of scopes.py.

    Visible: fields of every class whose brace span encloses the line, the
    innermost-class method's parameters, and locals declared earlier in
    that method in a block still open at the line.
    """
    spans = _spans(text)
    index = p.index
    classes = []
    for q, info in index.classes.items():
        end = spans[info.decl.line]
        if info.decl.line < line <= end:  # a header line belongs to the outer class
            classes.append((info.decl.line, q))
    classes.sort(reverse=True)  # innermost first
    env: dict[str, tuple[str, str]] = {}
    for _, q in classes:
        for f in index.classes[q].decl.fields:
            env.setdefault(f.name, ("field", q))
    innermost = classes[0][1]
    assert innermost == cls
    if method != INIT:
        m = index.classes[cls].decl.method(method)
        for prm in m.params:
            env[prm] = ("param", cls)
        body_end = spans[m.line]
    else:
        body_end = spans[index.classes[cls].decl.init.line]
    text_lines = text.splitlines()
    for s in walk_stmts(index.body_of(cls, method)):
        if isinstance(s, VarDecl) and s.line < line <= body_end:
            # block end: first line where brace depth drops below the declaration's
            depth = 0
            end = body_end
            for n in range(s.line + 1, body_end + 1):
                depth += text_lines[n - 1].count("{") - text_lines[n - 1].count("}")
                if depth < 0:
                    end = n
                    break
            if line <= end:
                env[s.name] = ("local", cls)
    return env


@pytest.mark.parametrize("name", fixture_names())
def test_scopes_agree_with_brute_force_lexical_walk(fixtures, name):
    p = parse_program(render_program(fixtures[name]))  # line numbers of the rendered text
    text = render_program(p)
    table = resolve_scopes(p)
    checked = 0
    for pos in table.positions():
        s = stmt_at(p.index, pos)
        unit_text = text[p.index.unit_of(pos.cls)]
        expected = _lexical_oracle(p, unit_text, pos.cls, pos.method, s.line)
        got = {k: (v.kind, v.owner) for k, v in table.visible(pos).items()}
        assert got == expected, (pos, s)
        checked += 1
    assert checked > 0


@pytest.mark.parametrize("name", fixture_names())
def test_scope_visibility_is_position_monotone(fixtures, name):
    p = fixtures[name]
    table = resolve_scopes(p)
    positions = table.positions()
    for a in positions:
        for b in positions:
            if (a.cls, a.method) == (b.cls, b.method) and len(b.path) > len(a.path) and b.path[:len(a.path)] == a.path:
                # b is nested under the statement at a (an if arm): everything visible at a stays visible
                assert set(table.visible(a)) <= set(table.visible(b))


# ----------------------------------------------------------------------
# callback inventory


CALLBACKS = {
    ClassKind.ACTIVITY: {"onCreate", "onStart", "onResume", "onPause", "onStop", "onDestroy"},
    ClassKind.FRAGMENT: {"onCreate", "onCreateView", "onDestroyView"},
    ClassKind.RECEIVER: {"onReceive"},
    ClassKind.LISTENER: {"onClick"},
}


def _independent_callback_count(p) -> int:
    """Walk the raw AST (not the index): callback-keyword methods valid for their class kind
    plus distinct layout-bound methods that are not already callbacks."""
    count = 0
    callbacks: set[tuple[int, str]] = set()
    bound: set[tuple[int, str]] = set()

    def visit(decl, chain):
        nonlocal count
        allowed = CALLBACKS.get(decl.kind, set())
        if decl.kind is ClassKind.PLAIN and decl.name is None:
            allowed = {"run"}
        for m in decl.methods:
            if m.is_callback and m.name in allowed:
                count += 1
                callbacks.add((id(decl), m.name))
        chain = chain + [decl]
        if decl.layout is not None:
            lay = p.layout(decl.layout)
            for b in lay.buttons:
                if b.on_click is None:
                    continue
                for owner in reversed(chain):
                    if owner.method(b.on_click) is not None:
                        bound.add((id(owner), b.on_click))
                        break
        for m in decl.members:
            if hasattr(m, "members"):
                visit(m, chain)
        for m in decl.methods:
            for s in walk_stmts(m.body):
                for attr in ("receiver", "listener", "closure"):
                    anon = getattr(s, attr, None)
                    if anon is not None:
                        visit(anon, chain)
        if decl.init is not None:
            for s in walk_stmts(decl.init.body):
                for attr in ("receiver", "listener", "closure"):
                    anon = getattr(s, attr, None)
                    if anon is not None:
                        visit(anon, chain)

    for c in p.classes:
        visit(c, [])
    return count + len(bound - callbacks)


@pytest.mark.parametrize("name", fixture_names())
def test_inventory_cardinality_matches_independent_walk(fixtures, name):
    p = fixtures[name]
    entries = callback_inventory(p)
    assert len(entries) == _independent_callback_count(p)
    assert len({(e.cls, e.method) for e in entries}) == len(entries)


def test_inventory_layout_binding():
    text = MINIMAL.replace("activity Main {", "layout l {\n  button b onClick = \"leakBtn\";\n}\n\nactivity Main uses l {")
    text = text.replace("callback onCreate() {\n  }", "callback onCreate() {\n  }\n  leakBtn() {\n  }")
    entries = callback_inventory(program(text))
    assert len(entries) == 2
    assert [e.registration for e in entries].count(STATIC_LAYOUT) == 1


def test_inventory_nested_dynamic_receiver(fixtures):
    entries = {e.cls: e for e in callback_inventory(fixtures["nested_receiver"])}
    assert entries["Main$1"].registration == DYNAMIC
    assert entries["Main$1$1"].registration == DYNAMIC_NESTED
    assert entries["Main$1$1"].method == "onReceive"


def test_inventory_registration_kinds(fixtures):
    regs = {(e.cls, e.method): e.registration for e in callback_inventory(fixtures["static_receivers"])}
    assert regs[("Boot", "onReceive")] == STATIC_MANIFEST
    assert regs[("Orphan", "onReceive")] == UNREGISTERED
    regs = {e.cls: e.registration for e in callback_inventory(fixtures["async_tasks"])}
    assert regs["Main$1"] == ASYNC


def test_plain_class_has_no_callbacks():
    text = MINIMAL + "\nclass Util {\n  f() {\n  }\n}\n"
    assert all(e.cls != "Util" for e in callback_inventory(program(text)))


def test_unknown_and_false_conditions_parse():
    text = MINIMAL.replace("callback onCreate() {\n", "callback onCreate() {\n    if (unknown) {\n      var a = \"1\";\n"
                           "    } else {\n      var a = \"2\";\n    }\n    if (false) {\n    }\n")
    p = program(text)
    assert len(p.index.body_of("Main", "onCreate")) == 2


def test_concat_and_var_expressions_round_trip():
    text = MINIMAL.replace("callback onCreate() {\n", "callback onCreate() {\n    var a = \"x\";\n    var b = a + \"y\";\n")
    p = program(text)
    assert p.index.body_of("Main", "onCreate")[1] == VarDecl("b", Concat(Var("a"), Str("y")))
