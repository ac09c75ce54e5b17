from decimal import Decimal

import pytest
from hypothesis import given, settings, strategies as st

from hotopt.errors import MalformedLine, MissingMeta, UnknownEvent, ZeroInstructions, ZeroTotal
from hotopt.profile import (
    EventSpec, SampleRecord, SamplingMeta, SamplingRun, cpi, cpi_flag, event_count, event_percent,
    expected_samples, hotspot_rank, hotspot_table, infer_sav, parse_samples_file, render_samples,
)

from conftest import fixture_text

META = "#meta\tduration_s=20\tinterval_s=0.001\tprocessors=1\n"
EVENTS = "#event\tCLK\tsav=2000000\trole=clock\n#event\tINST\tsav=2000000\trole=instruction\n"


def table(name, **kw):
    return hotspot_table(parse_samples_file(fixture_text(name)), **kw)


@pytest.mark.parametrize("meta, want", [((20, "0.001", 1), 20000), ((1, 1, 1), 1), ((10, "0.002", 4), 20000)])
def test_expected_samples(meta, want):
    assert expected_samples(SamplingMeta(*meta)) == want


@pytest.mark.parametrize("bad", [(0, 1, 1), (1, 0, 1), (1, 1, 0), (-1, 1, 1)])
def test_meta_invariants(bad):
    with pytest.raises(ValueError):
        SamplingMeta(*bad)


@pytest.mark.parametrize("s, t, want", [(31, 39, "79.49"), (27, 32, "84.38"), (0, 7, "0.00"),
                                        (35, 42, "83.33"), (33, 36, "91.67")])
def test_event_percent(s, t, want):
    assert event_percent(s, t) == Decimal(want)


def test_event_percent_errors():
    with pytest.raises(ZeroTotal):
        event_percent(0, 0)
    with pytest.raises(ValueError):
        event_percent(8, 7)


@pytest.mark.parametrize("s, sav, want", [(31, 2000000, 62000000), (4, 2000000, 8000000), (0, 987654, 0)])
def test_event_count(s, sav, want):
    assert event_count(s, sav) == want


@pytest.mark.parametrize("c, i, want", [(139200000, 67200000, "2.071"), (77, 77, "1.000"),
                                        (26400000, 14400000, "1.833")])
def test_cpi(c, i, want):
    assert cpi(c, i) == Decimal(want)


def test_cpi_zero_and_flags():
    with pytest.raises(ZeroInstructions):
        cpi(5, 0)
    assert [cpi_flag(Decimal(x)) for x in ("0.72", "1.000", "2.071", "5.000", "5.001")] == \
        ["", "", "suspect", "suspect", "high"]


def test_event_spec_invariants():
    with pytest.raises(ValueError):
        EventSpec("X", 0)
    with pytest.raises(ValueError):
        EventSpec("X", 1, "cycles")


# -- the transcribed tables -------------------------------------------------------------

def cells(row, ev):
    c = row.cell(ev)
    return c.samples, c.percent, c.events


def test_table1():
    t = table("table1.samples")
    clk, inst = "CPU_CLK", "INST_RETIRED"
    assert cells(t.row("adjust"), clk) == (31, Decimal("79.49"), 62000000)
    assert cells(t.row("adjust"), inst) == (27, Decimal("84.38"), 54000000)
    assert cells(t.row("hsort"), clk) == (4, Decimal("10.26"), 8000000)
    assert cells(t.row("swap"), clk) == (2, Decimal("5.13"), 4000000)
    assert cells(t.row("gen_array"), clk) == (1, Decimal("2.56"), 2000000)
    assert cells(t.row("memset"), clk) == (1, Decimal("2.56"), 2000000)
    assert cells(t.row("swap"), inst) == (4, Decimal("12.50"), 8000000)
    assert [r.scope for r in t.rows][:4] == ["adjust", "hsort", "swap", "gen_array"]


def test_table2():
    t = table("table2.samples")
    a = t.row("adjust")
    assert cells(a, "CPU_CLK_UNHALTED_CORE") == (35, Decimal("83.33"), 70000000)
    assert cells(a, "INST_RETIRED_ANY") == (33, Decimal("91.67"), 66000000)
    assert abs(a.cell("CPU_CLK_UNHALTED_CORE").percent - Decimal("83.3")) <= Decimal("0.05")
    assert cells(t.row("swap"), "INST_RETIRED_ANY") == (2, Decimal("5.56"), 4000000)


def test_table3_events_and_cpi():
    t = table("table3.samples")
    hs = t.row("HeapSort")
    assert hs.cell("CLOCKTICKS").events == 139200000
    assert hs.cell("INST_RETIRED").events == 67200000
    assert hs.cpi == Decimal("2.071") and hs.cpi_flag == "suspect"
    assert t.row("Heap_Optimized3").cpi == Decimal("1.833")
    assert t.row("Heap_Optimized3").cell("CLOCKTICKS").events == 26400000


@pytest.mark.parametrize("pairs, sav", [
    ([(58, 139200000), (56, 134400000), (55, 132000000), (11, 26400000),
      (28, 67200000), (27, 64800000), (29, 69600000), (6, 14400000)], 2400000),
    ([(31, 62000000), (4, 8000000), (2, 4000000), (1, 2000000), (27, 54000000), (4, 8000000)], 2000000),
    ([(35, 70000000), (2, 4000000), (33, 66000000), (1, 2000000), (0, 0)], 2000000),
])
def test_infer_sav_on_published_pairs(pairs, sav):
    assert infer_sav(pairs) == sav


def test_infer_sav_rejects_inconsistency():
    # Table 1 prints 2000K events for Rand from 0 samples
    with pytest.raises(ValueError):
        infer_sav([(31, 62000000), (0, 2000000)])
    with pytest.raises(ValueError):
        infer_sav([(2, 4000000), (3, 9000000)])


@pytest.mark.parametrize("name", ["table1.samples", "table2.samples", "table3.samples"])
def test_fixture_sav_matches_events(name):
    run = parse_samples_file(fixture_text(name))
    t = hotspot_table(run)
    for e in run.events:
        pairs = [(r.cell(e.name).samples, r.cell(e.name).events) for r in t.rows]
        assert infer_sav(pairs) == e.sample_after_value


def test_process_share_equals_clock_percent():
    t = table("table1.samples")
    for r in t.rows:
        assert r.process_share == r.cell("CPU_CLK").percent


def test_location_grouping_and_top():
    t = table("table1.samples", group_by="location", top=2)
    assert [r.scope for r in t.rows] == ["heap.c:64", "heap.c:52"]
    assert t.header()[0] == "location"


def test_hotspot_rank():
    assert hotspot_rank(parse_samples_file(fixture_text("table1.samples")))[0] == "adjust"


# -- parsing ---------------------------------------------------------------------------------

def test_empty_run():
    run = parse_samples_file(fixture_text("empty-run.samples"))
    assert run.records == () and run.events
    t = hotspot_table(run)
    assert t.rows == [] and t.render_tsv().count("\n") == 1


def test_single_record_full_share():
    t = hotspot_table(parse_samples_file(META + EVENTS + "CLK\tmain\tm.c:3\t9\n"))
    (row,) = t.rows
    assert row.cell("CLK").percent == Decimal("100.00")
    assert row.process_share == Decimal("100.00")
    assert row.cpi is None


@pytest.mark.parametrize("text, exc, lineno", [
    (META + EVENTS + "BOGUS\tf\tx.c:1\t3\n", UnknownEvent, 4),
    (EVENTS, MissingMeta, None),
    ("", MissingMeta, None),
    (META + META, MalformedLine, 2),
    (META + "#evnt\tX\tsav=1\trole=clock\n", MalformedLine, 2),
    (META + EVENTS + "CLK\tf\tx.c\t3\n", MalformedLine, 4),
    (META + EVENTS + "CLK\tf\tx.c:1\t-3\n", MalformedLine, 4),
    (META + EVENTS + "CLK\tf\tx.c:1\n", MalformedLine, 4),
    (META + EVENTS + "CLK\tf\tx.c:1\t3\n#event\tZ\tsav=1\trole=other\n", MalformedLine, 5),
    (META + "#event\tX\tsav=0\trole=clock\n", MalformedLine, 2),
    (META + "#event\tX\tsav=1\trole=cycles\n", MalformedLine, 2),
    ("#meta\tduration_s=0\tinterval_s=0.001\tprocessors=1\n", MalformedLine, 1),
    ("#meta\tduration_s=1\tinterval_s=0.001\n", MalformedLine, 1),
])
def test_parse_errors(text, exc, lineno):
    with pytest.raises(exc) as info:
        parse_samples_file(text)
    if lineno is not None:
        assert info.value.lineno == lineno


def test_comments_and_blank_lines_ignored():
    text = "// header\n\n" + META + "// x\n" + EVENTS + "\nCLK\tf\tx.c:1\t3\n"
    assert len(parse_samples_file(text).records) == 1


def test_run_rejects_undeclared_event():
    with pytest.raises(UnknownEvent):
        SamplingRun(SamplingMeta(1, 1), (EventSpec("A", 1),), (SampleRecord("B", "f", "x:1", 1),))


# -- properties -------------------------------------------------------------------------------

names = st.sampled_from(["adjust", "hsort", "swap", "gen_array", "rand", "memset", "main"])
records = st.lists(st.tuples(st.sampled_from(["CLK", "INST", "OTH"]), names, st.integers(0, 500)),
                   min_size=1, max_size=30)


def build(recs):
    events = (EventSpec("CLK", 2000000, "clock"), EventSpec("INST", 2000000, "instruction"),
              EventSpec("OTH", 7, "other"))
    return SamplingRun(SamplingMeta(20, "0.001"), events,
                       tuple(SampleRecord(e, f, f"{f}.c:{k}", n) for k, (e, f, n) in enumerate(recs)))


@settings(max_examples=150, deadline=None)
@given(records, st.randoms())
def test_permutation_invariance(recs, rnd):
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    a, b = hotspot_table(build(recs)), hotspot_table(build(shuffled))
    assert a.render_tsv() == b.render_tsv()


@settings(max_examples=150, deadline=None)
@given(records)
def test_column_sums_and_exact_events(recs):
    run = build(recs)
    t = hotspot_table(run)
    for e in run.events:
        total = sum(r.cell(e.name).samples for r in t.rows)
        for r in t.rows:
            assert r.cell(e.name).events == r.cell(e.name).samples * e.sample_after_value
        if total:
            assert abs(sum(r.cell(e.name).percent for r in t.rows) - 100) <= Decimal("0.01")


@settings(max_examples=100, deadline=None)
@given(records)
def test_round_trip(recs):
    run = build(recs)
    assert parse_samples_file(render_samples(run)) == run


@pytest.mark.parametrize("name", ["table1.samples", "table2.samples", "table3.samples", "empty-run.samples"])
def test_fixture_round_trip(name):
    run = parse_samples_file(fixture_text(name))
    assert parse_samples_file(render_samples(run)) == run


def test_render_text_and_tsv_agree():
    t = table("table1.samples")
    tsv = t.render_tsv().splitlines()
    text = t.render_text().splitlines()
    assert len(tsv) == len(text) == 7
    assert tsv[0].split("\t") == t.header()
    assert tsv[1].split("\t")[:4] == ["adjust", "31", "79.49", "62000000"]
    assert "1.148 (suspect)" in tsv[1]
