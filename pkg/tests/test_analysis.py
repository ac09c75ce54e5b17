import pytest

from hotopt.analysis import (
    ADVISORY_RULES, ALL_RULES, REWRITABLE, DetectConfig, RuleId, Safety, detect,
    global_hot_uses, is_boolean_valued, loop_shape, render_text, render_tsv, side_effect_free,
)
from hotopt.frontend import parse_source
from hotopt.frontend.syntax import For, IntLit, TranslationUnit, Var, walk

from conftest import load


def expr(text, decls="int a; int b; int j; int n; int x; int done; int carry; int *p; int arr[9];"):
    tu = parse_source(f"{decls} int f(int y) {{ return {text}; }} int g2(int z) {{ return z; }}")
    return tu.functions[0].body.stmts[0].value, tu


def first_for(src):
    tu = parse_source(src)
    return next(n for n in walk(tu) if isinstance(n, For)), tu


def rules_of(findings):
    return [f.rule for f in findings]


# -- detect -------------------------------------------------------------------------

def test_inline_swap_in_heap():
    found = detect(load("heap.c"), {RuleId.FN_INLINE})
    assert len(found) == 1
    f = found[0]
    assert f.function == "hsort" and f.payload["callee"] == "swap" and f.safety is Safety.SAFE


def test_memset_in_fact():
    found = detect(load("fact.c"), {RuleId.MEMSET_INIT})
    assert len(found) == 1
    f = found[0]
    assert f.function == "init_fa" and f.payload["array"] == "fa" and f.safety is Safety.SAFE
    assert f.payload["lo"] == IntLit(1) and f.payload["hi"] == IntLit(10000)


def test_empty_unit():
    assert detect(TranslationUnit()) == []
    assert detect(TranslationUnit(), {RuleId.FN_INLINE}) == []


def test_detect_deterministic_and_sorted():
    a, b = detect(load("fact.c")), detect(load("fact.c"))
    assert a == b
    keys = [(f.span.file, f.span.line_start, f.span.col_start) for f in a]
    assert keys == sorted(keys)


def test_rule_partition():
    assert len(ALL_RULES) == 12
    assert set(REWRITABLE) == {RuleId.LOOP_COUNTDOWN, RuleId.FN_INLINE, RuleId.GLOBAL_REG_ALIAS,
                               RuleId.BITWISE_CONV, RuleId.NESTED_IF_MERGE, RuleId.MEMSET_INIT,
                               RuleId.UNSIGNED_PROMOTE}
    assert all(r.value.startswith("ADV_") for r in ADVISORY_RULES)


def test_safety_matches_rule_kind():
    for tu in (load("heap.c"), load("fact.c")):
        for f in detect(tu):
            if f.rule in ADVISORY_RULES:
                assert f.safety is Safety.ADVISORY
            else:
                assert f.safety in (Safety.SAFE, Safety.UNSAFE_NEEDS_OVERRIDE)


# -- predicates -------------------------------------------------------------------------

@pytest.mark.parametrize("text, want", [
    ("arr[j] < arr[j+1]", True), ("j = j + 1", False), ("g2(x) + 1", False),
    ("*p + a", True), ("a++", False),
])
def test_side_effect_free(text, want):
    e, tu = expr(text)
    assert side_effect_free(e, tu) is want


@pytest.mark.parametrize("text, want", [
    ("j < n", True), ("carry", False), ("!done", True), ("a && b", True), ("a & b", False),
    ("carry > 0", True),
])
def test_is_boolean_valued(text, want):
    assert is_boolean_valued(expr(text)[0]) is want


def test_global_hot_uses_mult_fa():
    tu = load("fact.c")
    uses = {g: (n, region) for g, n, region in global_hot_uses(tu, tu.function("mult_fa"))}
    assert uses["fa"][0] >= 3 and uses["fa"][1] is False
    assert uses["fa_modulo"] == (2, False)
    assert uses["count"] == (2, False)


def test_global_hot_uses_print_fa():
    tu = load("fact.c")
    uses = {g: n for g, n, _ in global_hot_uses(tu, tu.function("print_fa"))}
    assert uses["count"] >= 4


def test_global_hot_uses_none():
    tu = parse_source("int g; int f(int a) { return a + 1; }")
    assert global_hot_uses(tu, tu.functions[0]) == []


def test_calls_in_region_transitive():
    tu = parse_source("int g; void leaf() { g = 1; } void mid() { leaf(); } "
                      "void f() { int i; for (i = 0; i < 3; i++) { g = g + 1; mid(); } }")
    (entry,) = [u for u in global_hot_uses(tu, tu.function("f")) if u[0] == "g"]
    assert entry[2] is True


# -- loop shapes ----------------------------------------------------------------------------

def test_loop_shape_inclusive_up():
    loop, _ = first_for("void f(int n) { int i; int s; for (i=1; i<=n; i++) s = i; }")
    c = loop_shape(loop)
    assert (c.var, c.init, c.bound, c.dir, c.step1, c.inclusive) == ("i", IntLit(1), Var("n"), "up", True, True)
    assert not c.var_written_in_body and c.bound_loop_invariant


def test_loop_shape_down():
    loop, _ = first_for("void f(int n) { int i; for (i=n/2; i >= 1; i--) ; }")
    assert loop_shape(loop).dir == "down"
    tu = parse_source("void f(int n) { int i; int s; for (i=n/2; i >= 1; i--) s = i; }")
    assert detect(tu, {RuleId.LOOP_COUNTDOWN}) == []


def test_loop_shape_step_two():
    loop, _ = first_for("void f(int n) { int i; for (i=0; i<n; i+=2) ; }")
    assert loop_shape(loop) is None


def test_loop_shape_body_writes():
    loop, _ = first_for("void f(int n) { int i; for (i=0; i<n; i++) { i = i + 1; n = 3; } }")
    c = loop_shape(loop)
    assert c.var_written_in_body and not c.bound_loop_invariant


def test_countdown_unsafe_when_bound_varies():
    tu = parse_source("int f(int n) { int i; int s; s = 0; for (i=0; i<n; i++) { s = s + i; n = n - 1; } return s; }")
    (f,) = detect(tu, {RuleId.LOOP_COUNTDOWN})
    assert f.safety is Safety.UNSAFE_NEEDS_OVERRIDE


def test_countdown_unsafe_when_var_live_after():
    tu = parse_source("int f(int n) { int i; int s; s = 0; for (i=0; i<n; i++) s = s + i; return i; }")
    (f,) = detect(tu, {RuleId.LOOP_COUNTDOWN})
    assert f.safety is Safety.UNSAFE_NEEDS_OVERRIDE


# -- soundness gates -----------------------------------------------------------------------------

def bitwise_findings(cond, decls="int a[9]; int n; int k;"):
    tu = parse_source(f"{decls} int h(int q) {{ k = q; return q; }} "
                      f"int f(int j) {{ int s; s = 0; if ({cond}) s = 1; return s; }}")
    return detect(tu, {RuleId.BITWISE_CONV})


def test_bitwise_safe_pure_comparisons():
    (f,) = bitwise_findings("(j <= n) && !k")
    assert f.safety is Safety.SAFE


@pytest.mark.parametrize("cond", [
    "(j < n) && (h(j) > 0)", "(j < n) && (k++ > 0)", "(k = 1) && (j < n)", "(h(j) > 0) || (j < n)",
    "(j < n) && (a[j] < a[j + 1])", "(j < n) || (n / j > 1)",
])
def test_bitwise_not_safe_with_effects_or_faults(cond):
    (f,) = bitwise_findings(cond)
    assert f.safety is Safety.UNSAFE_NEEDS_OVERRIDE


def test_bitwise_injected_call_degrades():
    (safe,) = bitwise_findings("(j < n) && (j > k)")
    (unsafe,) = bitwise_findings("(j < n) && (j > h(k))")
    assert safe.safety is Safety.SAFE and unsafe.safety is Safety.UNSAFE_NEEDS_OVERRIDE


def test_alias_never_safe_when_callee_touches_global():
    tu = parse_source("int g; void touch() { g = g + 1; } "
                      "void f() { int i; for (i = 0; i < 5; i++) { g = g * 2; touch(); } }")
    found = [x for x in detect(tu, {RuleId.GLOBAL_REG_ALIAS}) if x.function == "f"]
    assert found and all(x.safety is not Safety.SAFE for x in found)


def test_alias_safe_without_calls():
    tu = parse_source("int g; void f() { int i; for (i = 0; i < 5; i++) g = g * 2; }")
    (x,) = detect(tu, {RuleId.GLOBAL_REG_ALIAS})
    assert x.safety is Safety.SAFE


def test_inline_recursive_is_advisory():
    tu = parse_source("void r(int n) { if (n > 0) r(n - 1); } "
                      "void f() { int i; for (i = 0; i < 3; i++) r(i); }")
    assert detect(tu, {RuleId.FN_INLINE}) == []
    assert RuleId.ADV_RECURSION in rules_of(detect(tu, {RuleId.ADV_RECURSION}))


def test_inline_requires_loop_and_budget():
    outside = parse_source("int g; void s(int v) { g = v; } void f() { s(1); }")
    assert detect(outside, {RuleId.FN_INLINE}) == []
    big = parse_source("int g; void s(int v) { g = v; g = g + 1; g = g * 2; g = g - 3; } "
                       "void f() { int i; for (i = 0; i < 3; i++) s(i); }")
    assert detect(big, {RuleId.FN_INLINE}) == []
    wide = DetectConfig(stmt_budget=4)
    assert len(detect(big, {RuleId.FN_INLINE}, wide)) == 1


def test_memset_variants():
    zero = parse_source("void f() { char c[8]; int i; for (i=0; i<8; i++) c[i] = 0; }")
    (f,) = detect(zero, {RuleId.MEMSET_INIT})
    assert f.payload["elem"] == "char" and f.safety is Safety.SAFE
    five = parse_source("void f() { char c[8]; int i; for (i=0; i<8; i++) c[i] = 5; }")
    assert detect(five, {RuleId.MEMSET_INIT}) == []


def test_unsigned_promote_rules():
    ok = parse_source("int f() { int i; int s; s = 0; for (i = 0; i < 10; i++) s = s + 1; return s; }")
    assert "i" in [f.payload["var"] for f in detect(ok, {RuleId.UNSIGNED_PROMOTE})]
    neg = parse_source("int f() { int i; i = 3; i = -1; return i; }")
    assert detect(neg, {RuleId.UNSIGNED_PROMOTE}) == []
    down = parse_source("int f(int n) { int i; int s; s = 0; for (i = n; i > 0; i--) s = s + 1; return s; }")
    assert "i" not in [f.payload["var"] for f in detect(down, {RuleId.UNSIGNED_PROMOTE})]


def test_advisories():
    tu = parse_source("int g; int m[3][4]; int tiny(int x) { return x + 1; } "
                      "int rec(int n) { if (n < 1) return 0; return rec(n - 1); } "
                      "int main() { char ch; ch = 1; return tiny(2) + rec(2) + ch; }")
    found = detect(tu, set(ADVISORY_RULES))
    got = {(f.rule, f.payload.get("var", f.function)) for f in found}
    assert (RuleId.ADV_MULTIDIM_ARRAY, "m") in got
    assert (RuleId.ADV_RECURSION, "rec") in got
    assert (RuleId.ADV_TINY_FN_MACRO, "tiny") in got
    assert (RuleId.ADV_WORD_SIZE, "ch") in got
    assert (RuleId.ADV_STATIC_LINKAGE, "g") in got
    assert not any(f.rule is RuleId.ADV_STATIC_LINKAGE and f.function == "main" for f in found)


# -- rendering -----------------------------------------------------------------------------------

def test_render_tsv_columns():
    found = detect(load("heap.c"), {RuleId.FN_INLINE})
    lines = render_tsv(found).splitlines()
    assert lines[0] == "rule\tlocation\tfunction\tsafety\trationale"
    cols = lines[1].split("\t")
    assert cols[:4] == ["FN_INLINE", "heap.c:59", "hsort", "SAFE"]
    assert len(cols) == 5


def test_render_text_lists_each_finding():
    found = detect(load("fact.c"))
    assert len(render_text(found).splitlines()) == len(found)
