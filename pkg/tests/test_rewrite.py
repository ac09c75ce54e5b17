import dataclasses
import itertools

import pytest

from hotopt.analysis import REWRITABLE, RuleId, Safety, detect, loop_shape
from hotopt.errors import PreconditionViolated, SpanMismatch
from hotopt.frontend import parse_source, pretty_print
from hotopt.frontend.printer import expr_text, stmt_text
from hotopt.frontend.syntax import Binary, Call, ExprStmt, For, If, SourceSpan, walk
from hotopt.interp import RunConfig, run
from hotopt.rewrite import (
    AUTO_ORDER, SkipReason, apply_plan, auto_plan, rewrite_bitwise, rewrite_countdown,
    rewrite_global_alias, rewrite_inline, rewrite_memset, rewrite_nested_if_merge,
    rewrite_unsigned, staged_variants,
)

from conftest import load

SEEDS = (1, 42, 20071)


def squash(text):
    return " ".join(text.split())


def outputs(tu, seeds=SEEDS):
    return [(r.stdout, r.exit_code) for r in (run(tu, "main", RunConfig(seed=s)) for s in seeds)]


def cost(tu, seed=42):
    return run(tu, "main", RunConfig(seed=seed)).cost.total


def first(tu, kind):
    return next(n for n in walk(tu) if isinstance(n, kind))


# -- count-down -----------------------------------------------------------------------

def test_countdown_reference_form():
    src = 'int N; int a[101]; void f() { int i; for (i=1; i<=%s; i++) printf("%%d", a[i]); }'
    for bound, want in (("100", 'for (i = 100; i != 0; i--) printf("%d", a[(100 - i) + 1]);'),
                        # a symbolic bound may be below the start, so the test stays signed
                        ("N", 'for (i = N; i > 0; i--) printf("%d", a[(N - i) + 1]);')):
        tu = parse_source(src % bound)
        loop = first(tu, For)
        assert squash(stmt_text(rewrite_countdown(loop, loop_shape(loop, {"N"})))) == want


def test_countdown_single_iteration():
    src = 'int main() { int i; for (i=1; i<=1; i++) printf("%d;", i * 10); return 0; }'
    tu = parse_source(src)
    (f,) = detect(tu, {RuleId.LOOP_COUNTDOWN})
    new, rep = apply_plan(tu, [f])
    assert rep.applied and outputs(new) == outputs(tu)
    assert run(new, "main", RunConfig()).stdout == b"10;"


def test_countdown_sum_to_28():
    src = """int main() { int a[8]; int i; int n; int s; n = 7; s = 0;
             for (i = 1; i <= 7; i++) a[i] = i;
             for (i = 1; i <= n; i++) s += a[i];
             printf("%d", s); return 0; }"""
    tu = parse_source(src)
    loops = [f for f in detect(tu, {RuleId.LOOP_COUNTDOWN}) if f.safety is Safety.SAFE]
    assert loops
    new, rep = apply_plan(tu, loops)
    assert run(new, "main", RunConfig()).stdout == run(tu, "main", RunConfig()).stdout == b"28"
    assert "i--" in pretty_print(new)


@pytest.mark.parametrize("init, op, bound", [(0, "<", "n"), (2, "<=", "n"), (3, "<", "10"),
                                             (5, "<=", "4"), (0, "<", "0")])
def test_countdown_general_starts(init, op, bound):
    src = f"""int main() {{ int i; int n; n = 6;
              for (i = {init}; i {op} {bound}; i++) printf("%d,", i * 3 + 1);
              return 0; }}"""
    tu = parse_source(src)
    (f,) = detect(tu, {RuleId.LOOP_COUNTDOWN})
    new, rep = apply_plan(tu, [f], allow_unsafe=True)
    assert rep.applied
    assert outputs(new, (1,)) == outputs(tu, (1,))


def test_countdown_precondition():
    tu = parse_source("void f(int n) { int i; for (i=n; i>0; i--) ; }")
    loop = first(tu, For)
    with pytest.raises(PreconditionViolated):
        rewrite_countdown(loop, loop_shape(loop))


# -- inlining ---------------------------------------------------------------------------

def test_inline_swap_text():
    tu = load("heap.c")
    hsort = tu.function("hsort")
    site = next(n for n in walk(hsort) if isinstance(n, ExprStmt) and isinstance(n.expr, Call)
                and n.expr.name == "swap")
    block = rewrite_inline(tu, site, tu.function("swap"))
    assert squash(stmt_text(block)) == squash(
        "{ int *__t0 = &a[1]; int *__t1 = &a[i + 1]; int t; t = *__t0; *__t0 = *__t1; *__t1 = t; }")


def test_inline_literal_argument():
    tu = parse_source("int g; void f(int x) { g = x; } int main() { f(3); return g; }")
    site = first(tu.function("main"), ExprStmt)
    block = rewrite_inline(tu, site, tu.function("f"))
    assert squash(stmt_text(block)) == "{ int __t0 = 3; g = __t0; }"


def test_inline_heap_n1000_equivalent():
    tu = load("heap.c", "N=1000", "DEBUG")
    (f,) = detect(tu, {RuleId.FN_INLINE})
    new, rep = apply_plan(tu, [f])
    assert rep.applied
    assert outputs(new, (42,)) == outputs(tu, (42,))
    assert cost(new) < cost(tu)


def test_inline_fresh_names_avoid_capture():
    src = """int g; void f(int x) { g = g + x; }
             int main() { int __t0; int i; __t0 = 5; for (i = 0; i < 3; i++) f(__t0); printf("%d", g); return 0; }"""
    tu = parse_source(src)
    new, rep = apply_plan(tu, detect(tu, {RuleId.FN_INLINE}))
    assert rep.applied and outputs(new) == outputs(tu)


# -- global alias ---------------------------------------------------------------------------

def test_alias_print_fa():
    tu = load("fact.c")
    new = rewrite_global_alias(tu.function("print_fa"), "count", tu)
    text = squash(pretty_print(dataclasses.replace(tu, functions=(new,))))
    assert "void print_fa() { register int __local_count = count;" in text
    assert text.endswith("printf(\"\\n\"); count = __local_count; }")
    assert "count--" not in text.replace("__local_count--", "")


def test_alias_read_only_no_write_back():
    tu = load("fact.c")
    new = rewrite_global_alias(tu.function("mult_fa"), "fa_modulo", tu)
    text = pretty_print(dataclasses.replace(tu, functions=(new,)))
    assert "register int __local_fa_modulo = fa_modulo;" in text
    assert "fa_modulo = __local_fa_modulo" not in text


def test_alias_write_back_before_every_return():
    src = """int g; int f(int a) { g = g + a; if (a > 2) return 1; g = g * 2; return 0; }
             int main() { int i; int s; s = 0; for (i = 0; i < 5; i++) s = s + f(i); printf("%d %d", s, g); return 0; }"""
    tu = parse_source(src)
    (fd,) = [f for f in detect(tu, {RuleId.GLOBAL_REG_ALIAS}) if f.function == "f"]
    new, rep = apply_plan(tu, [fd])
    assert rep.applied
    assert pretty_print(new).count("g = __local_g;") == 2
    assert outputs(new) == outputs(tu)


def test_alias_unused_global_rejected():
    tu = parse_source("int g; int f(int a) { return a; }")
    with pytest.raises(PreconditionViolated):
        rewrite_global_alias(tu.function("f"), "g", tu)


# -- bitwise / nested if ----------------------------------------------------------------------

def _expr(text):
    tu = parse_source(f"int j; int n; int i; int c; int carry; int flag; int done; int f() {{ return {text}; }}")
    return tu.functions[0].body.stmts[0].value


@pytest.mark.parametrize("src, want", [
    ("(j <= n) && !done", "(j <= n) & !done"),
    ("(i <= c) || (carry > 0)", "(i <= c) | (carry > 0)"),
    ("carry || flag", "(carry != 0) | (flag != 0)"),
])
def test_rewrite_bitwise_text(src, want):
    assert expr_text(rewrite_bitwise(_expr(src))) == want


def test_booleanized_or_exhaustive():
    vals = (-1, 0, 1, 2)
    body = "".join(f"carry = {a}; flag = {b}; printf(\"%d%d \", carry || flag, (carry != 0) | (flag != 0));"
                   for a, b in itertools.product(vals, vals))
    out = run(parse_source(f"int main() {{ int carry; int flag; {body} return 0; }}"), "main").stdout.split()
    assert len(out) == 16 and all(p[:1] == p[1:] for p in out)


def test_nested_if_merge_text():
    tu = parse_source("int f(int a, int b) { int s; s = 0; if (a) if (b < 3) s = 1; return s; }")
    s = first(tu, If)
    assert squash(stmt_text(rewrite_nested_if_merge(s))) == "if ((a != 0) & (b < 3)) s = 1;"


def test_unsafe_bitwise_skipped_without_override():
    src = "int a[5]; int f(int j, int n) { int s; s = 0; while ((j < n) && (a[j] < a[j + 1])) j++; return j; }"
    tu = parse_source(src)
    (f,) = detect(tu, {RuleId.BITWISE_CONV})
    assert f.safety is Safety.UNSAFE_NEEDS_OVERRIDE
    new, rep = apply_plan(tu, [f])
    assert new == tu and rep.skipped == [(f, SkipReason.NEEDS_OVERRIDE)]
    assert detect(new, {RuleId.BITWISE_CONV}) == [f]
    forced, rep2 = apply_plan(tu, [f], allow_unsafe=True)
    assert rep2.applied and "&&" not in pretty_print(forced)


# -- memset / unsigned ------------------------------------------------------------------------------

def test_memset_fact_text():
    tu = load("fact.c")
    (f,) = detect(tu, {RuleId.MEMSET_INIT})
    new, rep = apply_plan(tu, [f])
    assert "memset(fa + 1, 0, (10000 - 1) * sizeof(int));" in pretty_print(new)
    assert rep.applied[0][2].startswith("memset(")


def test_memset_char_text():
    tu = parse_source("void f() { char c[8]; int i; for (i=0; i<8; i++) c[i] = 0; }")
    (f,) = detect(tu, {RuleId.MEMSET_INIT})
    assert squash(stmt_text(rewrite_memset(first(tu, For), f.payload))) == \
        "memset(c + 0, 0, (8 - 0) * sizeof(char));"


def test_memset_live_after_keeps_exit_value():
    src = """int main() { int a[6]; int i; for (i = 0; i < 6; i++) a[i] = 0; printf("%d %d", i, a[5]); return 0; }"""
    tu = parse_source(src)
    (f,) = detect(tu, {RuleId.MEMSET_INIT})
    new, rep = apply_plan(tu, [f])
    assert rep.applied and outputs(new) == outputs(tu)


def test_unsigned_decl_only():
    tu = parse_source("int f() { int i; int s; s = 0; for (i = 0; i < 10; i++) s = s + 1; return s; }")
    fd = [f for f in detect(tu, {RuleId.UNSIGNED_PROMOTE}) if f.payload["var"] == "i"]
    new, rep = apply_plan(tu, fd)
    before, after = pretty_print(tu), pretty_print(new)
    assert after == before.replace("    int i;", "    unsigned int i;")
    with pytest.raises(PreconditionViolated):
        rewrite_unsigned(tu.functions[0], "nope")


# -- plan mechanics --------------------------------------------------------------------------------------

def test_empty_plan_is_identity(heap_small):
    new, rep = apply_plan(heap_small, [])
    assert new == heap_small and rep.applied == [] and rep.skipped == []
    assert rep.diff() == ""


def test_span_mismatch():
    tu = load("heap.c")
    (f,) = detect(tu, {RuleId.FN_INLINE})
    bogus = dataclasses.replace(f, span=SourceSpan("heap.c", 999, 1, 999, 2))
    with pytest.raises(SpanMismatch):
        apply_plan(tu, [bogus])


def test_stale_span_skipped():
    tu = parse_source("int f(int a, int b, int c) { int s; s = 0; if (a < 1) if ((b < 2) && (c < 3)) s = 1; return s; }")
    merge = detect(tu, {RuleId.NESTED_IF_MERGE})[0]
    inner = detect(tu, {RuleId.BITWISE_CONV})[0]
    _, rep = apply_plan(tu, [merge, inner], allow_unsafe=True)
    assert len(rep.applied) + len(rep.skipped) == 2
    assert all(reason in (SkipReason.STALE_SPAN, SkipReason.PRECONDITION_FAILED) for _, reason in rep.skipped)


def test_advisory_skipped(heap_small):
    adv = [f for f in detect(heap_small) if f.safety is Safety.ADVISORY]
    new, rep = apply_plan(heap_small, adv)
    assert new == heap_small
    assert {r for _, r in rep.skipped} == {SkipReason.ADVISORY_ONLY}


def test_all_safe_heap_inlines_and_counts_down(heap_small):
    safe = [f for f in detect(heap_small) if f.safety is Safety.SAFE]
    new, rep = apply_plan(heap_small, safe)
    text = pretty_print(new)
    assert "swap(" not in text.split("void hsort", 1)[1].split("void swap", 1)[0]
    assert "for (i = n - 1; i > 0; i--)" in text
    assert outputs(new) == outputs(heap_small)
    applied = {f.rule for f, _, _ in rep.applied}
    assert {RuleId.FN_INLINE, RuleId.LOOP_COUNTDOWN} <= applied
    assert not {id(f) for f, _ in rep.skipped} & {id(f) for f, _, _ in rep.applied}


def test_change_report_diff(fact_small):
    _, rep = auto_plan(fact_small)
    d = rep.diff()
    assert d.startswith("--- a/fact.c\n+++ b/fact.c\n")
    assert "+    memset(fa + 1" in d
    assert rep.functions_touched >= {"mult_fa", "init_fa"}


def test_auto_order():
    assert AUTO_ORDER == (RuleId.GLOBAL_REG_ALIAS, RuleId.FN_INLINE, RuleId.NESTED_IF_MERGE,
                          RuleId.BITWISE_CONV, RuleId.MEMSET_INIT, RuleId.LOOP_COUNTDOWN,
                          RuleId.UNSIGNED_PROMOTE)


# -- properties over the corpus -------------------------------------------------------------------------

CORPUS = [("heap.c", ("SMALL", "DEBUG")), ("fact.c", ("SMALL", "DEBUG"))]


@pytest.mark.parametrize("name, defines", CORPUS)
def test_each_safe_finding_preserves_semantics(name, defines):
    tu = load(name, *defines)
    base = outputs(tu)
    safe = [f for f in detect(tu) if f.safety is Safety.SAFE and f.rule in REWRITABLE]
    assert safe
    for f in safe:
        new, rep = apply_plan(tu, [f])
        assert rep.applied, f
        assert outputs(new) == base, f


@pytest.mark.parametrize("name, defines", CORPUS)
def test_idempotence(name, defines):
    tu = load(name, *defines)
    for f in [f for f in detect(tu) if f.safety is Safety.SAFE and f.rule in REWRITABLE]:
        new, _ = apply_plan(tu, [f])
        again = [g for g in detect(new, {f.rule}) if g.safety is Safety.SAFE and g.span == f.span
                 and g.payload.get("var") == f.payload.get("var")
                 and g.payload.get("global") == f.payload.get("global")]
        assert again == [], f
    once, _ = auto_plan(tu)
    twice, rep = auto_plan(once)
    assert pretty_print(twice) == pretty_print(once)


@pytest.mark.parametrize("name, defines", CORPUS)
def test_cost_monotonicity(name, defines):
    tu = load(name, *defines)
    before = cost(tu)
    checked = 0
    for rule in (RuleId.LOOP_COUNTDOWN, RuleId.FN_INLINE, RuleId.GLOBAL_REG_ALIAS, RuleId.MEMSET_INIT):
        new, rep = auto_plan(tu, {rule})
        if rep.applied:
            checked += 1
            assert cost(new) < before, rule
    assert checked


def test_staged_variants_are_cumulative(heap_small):
    stages = staged_variants(heap_small)
    assert len(stages) == 3
    base = outputs(heap_small)
    for unit, _ in stages:
        assert outputs(unit) == base
    from conftest import fixture_text
    import importlib.util, pathlib
    spec = importlib.util.spec_from_file_location(
        "make_staged_heap", pathlib.Path(__file__).parents[1] / "walkthroughs" / "make_staged_heap.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    for k, text in enumerate(mod.staged_texts(), 1):
        assert fixture_text(f"heap_opt{k}.c") == text
