import io
import json
import subprocess
import sys

import pytest

from hotopt.analysis import RuleId, detect
from hotopt.cli import bench, first_difference, main, order_by_hotspots
from hotopt.frontend import parse_source
from hotopt.rewrite import auto_plan

from conftest import load


def cli(*argv):
    out = io.StringIO()
    try:
        code = main(list(argv), out=out)
    except SystemExit as exc:
        code = exc.code
    return code, out.getvalue()


def tsv_rows(text):
    return [line.split("\t") for line in text.splitlines()]


# -- report ---------------------------------------------------------------------------------

def test_report_table1_tsv():
    code, out = cli("report", "table1.samples", "--by", "function", "--format", "tsv")
    assert code == 0
    rows = {r[0]: r for r in tsv_rows(out)[1:]}
    assert rows["adjust"][1:7] == ["31", "79.49", "62000000", "27", "84.38", "54000000"]
    assert rows["hsort"][1:4] == ["4", "10.26", "8000000"]
    assert rows["swap"][1:4] == ["2", "5.13", "4000000"]
    assert rows["gen_array"][1:4] == ["1", "2.56", "2000000"]


def test_report_table2_text():
    code, out = cli("report", "table2.samples")
    assert code == 0
    first = out.splitlines()[1].split()
    assert first[:7] == ["adjust", "35", "83.33", "70000000", "33", "91.67", "66000000"]


def test_report_empty_run_header_only():
    code, out = cli("report", "empty-run.samples")
    assert code == 0 and len(out.splitlines()) == 1 and out.startswith("function")


def test_report_top_and_location():
    code, out = cli("report", "table1.samples", "--by", "location", "--top", "1", "--format", "tsv")
    assert code == 0
    assert [r[0] for r in tsv_rows(out)] == ["location", "heap.c:64"]


def test_report_malformed_exit_2(tmp_path, capsys):
    f = tmp_path / "bad.samples"
    f.write_text("#meta\tduration_s=1\tinterval_s=1\tprocessors=1\nX\tf\tx.c:1\t1\n")
    code, _ = cli("report", str(f))
    assert code == 2
    assert "line 2" in capsys.readouterr().err


# -- analyze --------------------------------------------------------------------------------

def test_analyze_fn_inline():
    code, out = cli("analyze", "heap.c", "--rules", "FN_INLINE", "--format", "tsv")
    assert code == 0
    rows = tsv_rows(out)[1:]
    assert len(rows) == 1
    assert "FN_INLINE" in rows[0] and "SAFE" in rows[0] and "hsort" in rows[0]


def test_analyze_hotspots_orders_adjust_first():
    code, out = cli("analyze", "heap.c", "--hotspots", "table1.samples", "--top", "1", "--format", "tsv")
    assert code == 0
    rows = tsv_rows(out)
    assert rows[0][0] == "hotness"
    marks = [r[0] for r in rows[1:]]
    assert marks[0] == "hot#1" and "adjust" in rows[1]
    assert set(marks) == {"hot#1", "cold"}
    assert marks == sorted(marks, key=lambda m: m == "cold")


def test_analyze_empty_file(tmp_path):
    f = tmp_path / "empty.c"
    f.write_text("")
    assert cli("analyze", str(f)) == (0, "")


def test_analyze_parse_error(tmp_path, capsys):
    f = tmp_path / "broken.c"
    f.write_text("int main( { return 0; }")
    code, out = cli("analyze", str(f))
    assert code == 2 and out == ""
    assert "broken.c" in capsys.readouterr().err


def test_analyze_unknown_rule_is_misuse():
    assert cli("analyze", "heap.c", "--rules", "NOPE")[0] == 3


def test_missing_file_is_misuse():
    assert cli("analyze", "/nonexistent/zzz.c")[0] == 3


def test_bad_flag_is_misuse(capsys):
    assert cli("report", "table1.samples", "--by", "module")[0] == 3
    assert cli("frobnicate")[0] == 3


def test_order_by_hotspots_stable():
    tu = load("heap.c")
    findings = detect(tu)
    ranked = order_by_hotspots(findings, ["adjust", "hsort"], 2)
    fns = [f.function for _, f in ranked]
    hot = [f for f in fns if f in ("adjust", "hsort")]
    assert fns[:len(hot)] == sorted(hot, key=["adjust", "hsort"].index)
    assert sorted(map(id, (f for _, f in ranked))) == sorted(map(id, findings))


# -- rewrite --------------------------------------------------------------------------------

def test_rewrite_then_reanalyze(tmp_path):
    out_c = tmp_path / "heap_opt.c"
    code, _ = cli("rewrite", "heap.c", "--rules", "LOOP_COUNTDOWN,FN_INLINE", "-o", str(out_c))
    assert code == 0
    code, listing = cli("analyze", str(out_c), "--rules", "LOOP_COUNTDOWN,FN_INLINE", "--format", "tsv")
    assert code == 0
    assert [r for r in tsv_rows(listing)[1:] if "SAFE" in r] == []
    # pipeline closure
    parse_source(out_c.read_text(), "heap_opt.c")


def test_rewrite_memset(tmp_path):
    out_c, rep = tmp_path / "out.c", tmp_path / "report.txt"
    code, _ = cli("rewrite", "fact.c", "--rules", "MEMSET_INIT", "-o", str(out_c), "--report", str(rep))
    assert code == 0
    text = out_c.read_text()
    assert "memset(fa + 1, 0, (10000 - 1) * sizeof(int));" in text
    init = text.split("void init_fa()", 1)[1].split("}", 1)[0]
    assert "for" not in init
    assert "MEMSET_INIT" in rep.read_text() and "+++ b/fact.c" in rep.read_text()


def test_rewrite_advisory_is_misuse():
    assert cli("rewrite", "heap.c", "--rules", "ADV_RECURSION")[0] == 3


def test_rewrite_nothing_applied(tmp_path, capsys):
    f = tmp_path / "plain.c"
    f.write_text("int main() { return 0; }\n")
    code, out = cli("rewrite", str(f))
    assert code == 0 and out == "int main() {\n    return 0;\n}\n"
    assert "no rewrites applied" in capsys.readouterr().err


def test_rewrite_stdout_is_all_safe_plan():
    code, out = cli("rewrite", "fact.c", "-D", "SMALL", "--rules", "all-safe")
    assert code == 0
    expected, _ = auto_plan(load("fact.c", "SMALL"))
    from hotopt.frontend import pretty_print
    assert out == pretty_print(expected)


# -- run --------------------------------------------------------------------------------------

def test_run_fact_small():
    code, out = cli("run", "fact.c", "-D", "SMALL", "-D", "DEBUG")
    assert code == 0 and out.strip() == "3628800"


def test_run_heap_sorted():
    code, out = cli("run", "heap.c", "--seed", "42", "-D", "SMALL", "--define", "DEBUG")
    assert code == 0
    lines = [l for l in out.splitlines() if l.strip()]
    second = [int(x) for x in lines[1].split()]
    assert len(second) == 100 and second == sorted(second)
    assert sorted(second) == sorted(int(x) for x in lines[0].split())


def test_run_cost_table_adjust_top():
    code, out = cli("run", "heap.c", "-D", "SMALL", "--cost", "--format", "tsv")
    assert code == 0
    rows = tsv_rows(out)
    head = rows.index(["function", "cost", "share %"])
    assert rows[head + 1][0] == "adjust"
    assert rows[-1][0] == "total"


def test_run_cost_model_file(tmp_path):
    model = tmp_path / "m.json"
    model.write_text(json.dumps({"call_overhead": 100}))
    _, a = cli("run", "heap.c", "-D", "SMALL", "--cost", "--format", "tsv")
    _, b = cli("run", "heap.c", "-D", "SMALL", "--cost", "--format", "tsv", "--cost-model", str(model))
    assert int(tsv_rows(b)[-1][1]) > int(tsv_rows(a)[-1][1])


def test_run_runtime_fault_exit_1(tmp_path):
    f = tmp_path / "div.c"
    f.write_text("int main() { int z; z = 0; return 5 / z; }\n")
    assert cli("run", str(f))[0] == 1


def test_run_reports_exit_status(tmp_path, capsys):
    f = tmp_path / "seven.c"
    f.write_text("int main() { return 7; }\n")
    assert cli("run", str(f))[0] == 0
    assert "exit code 7" in capsys.readouterr().err


# -- bench -------------------------------------------------------------------------------------

def _bench_rows(out):
    return dict(r for r in tsv_rows(out)[1:])


def test_bench_heap_all_safe(tmp_path):
    opt = tmp_path / "heap_opt.c"
    assert cli("rewrite", "heap.c", "-D", "SMALL", "-o", str(opt))[0] == 0
    code, out = cli("bench", "heap.c", str(opt), "-D", "SMALL", "--format", "tsv")
    assert code == 0
    rows = _bench_rows(out)
    assert rows["equivalent"] == "true"
    assert float(rows["reduction_percent"]) > 0
    assert any(k.startswith("delta ") for k in rows)


def test_bench_fact_all_safe(tmp_path):
    opt = tmp_path / "fact_opt.c"
    assert cli("rewrite", "fact.c", "-D", "SMALL", "-o", str(opt))[0] == 0
    code, out = cli("bench", "fact.c", str(opt), "-D", "SMALL", "--format", "tsv", "--no-breakdown")
    rows = _bench_rows(out)
    assert code == 0 and rows["equivalent"] == "true" and float(rows["reduction_percent"]) > 0


def test_bench_self_is_zero():
    code, out = cli("bench", "heap.c", "heap.c", "-D", "SMALL", "--format", "tsv", "--no-breakdown")
    rows = _bench_rows(out)
    assert code == 0 and rows["equivalent"] == "true" and rows["reduction_percent"] == "0.00"


def test_bench_divergence_exit_4(tmp_path, capsys):
    a, b = tmp_path / "a.c", tmp_path / "b.c"
    a.write_text('int main() { printf("hello 1\\n"); return 0; }\n')
    b.write_text('int main() { printf("hello 2\\n"); return 0; }\n')
    code, out = cli("bench", str(a), str(b))
    assert code == 4
    assert "byte 6" in capsys.readouterr().err


def test_bench_exit_code_divergence():
    a = parse_source("int main() { return 0; }")
    b = parse_source("int main() { return 1; }")
    outcome = bench(a, b)
    assert not outcome.equivalent and "exit code" in outcome.divergence


def test_first_difference():
    assert first_difference(b"abc", b"abd") == 2
    assert first_difference(b"ab", b"abc") == 2
    assert first_difference(b"", b"") == 0


def test_bench_reduction_formula(fact_small):
    new, _ = auto_plan(fact_small, {RuleId.MEMSET_INIT})
    o = bench(fact_small, new, seeds=(1,), breakdown=False)
    want = (100 * (o.cost_before - o.cost_after) / o.cost_before)
    assert abs(float(o.reduction_percent) - want) <= 0.005


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "hotopt", "report", "table2.samples", "--format", "tsv"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1].startswith("adjust\t35\t83.33")
