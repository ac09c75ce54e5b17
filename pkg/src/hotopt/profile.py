"""Sampling-profiler arithmetic: sample counts, event shares, event totals, CPI.

Sampling logs are TSV::

    #meta   duration_s=20   interval_s=0.001   processors=1
    #event  CPU_CLK  sav=2000000  role=clock
    CPU_CLK  adjust  heap.c:64  31

Blank lines and ``//`` comment lines are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

from .errors import MalformedLine, MissingMeta, UnknownEvent, ZeroInstructions, ZeroTotal
from .interp.cost import rounded_shares

ROLES = ("clock", "instruction", "other")
_TWO = Decimal("0.01")
_THREE = Decimal("0.001")


def _dec(x) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


@dataclass(frozen=True)
class SamplingMeta:
    duration_s: Decimal
    interval_s: Decimal
    n_processors: int = 1

    def __post_init__(self):
        object.__setattr__(self, "duration_s", _dec(self.duration_s))
        object.__setattr__(self, "interval_s", _dec(self.interval_s))
        if self.duration_s <= 0 or self.interval_s <= 0:
            raise ValueError("duration and interval must be positive")
        if not isinstance(self.n_processors, int) or self.n_processors < 1:
            raise ValueError("at least one processor is required")


@dataclass(frozen=True)
class EventSpec:
    name: str
    sample_after_value: int
    role: str = "other"

    def __post_init__(self):
        if not isinstance(self.sample_after_value, int) or self.sample_after_value < 1:
            raise ValueError(f"sample-after value of {self.name} must be a positive integer")
        if self.role not in ROLES:
            raise ValueError(f"unknown event role {self.role!r}")


@dataclass(frozen=True)
class SampleRecord:
    event: str
    function: str
    location: str
    samples: int

    def __post_init__(self):
        if self.samples < 0:
            raise ValueError("sample counts are non-negative")


@dataclass(frozen=True)
class SamplingRun:
    meta: SamplingMeta
    events: tuple
    records: tuple = ()

    def __post_init__(self):
        names = [e.name for e in self.events]
        if len(set(names)) != len(names):
            raise ValueError("duplicate event declaration")
        for r in self.records:
            if r.event not in names:
                raise UnknownEvent(r.event)

    def event(self, name: str) -> EventSpec:
        for e in self.events:
            if e.name == name:
                return e
        raise UnknownEvent(name)

    def by_role(self, role: str) -> Optional[EventSpec]:
        for e in self.events:
            if e.role == role:
                return e
        return None


# -- the formulas ---------------------------------------------------------------

def expected_samples(meta: SamplingMeta) -> int:
    """duration x processors / interval, rounded to the nearest integer."""
    exact = meta.duration_s * meta.n_processors / meta.interval_s
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def event_percent(samples: int, total: int) -> Decimal:
    if total == 0:
        raise ZeroTotal("no samples recorded for this event")
    if samples < 0 or samples > total:
        raise ValueError(f"{samples} samples out of a total of {total}")
    return (Decimal(samples) * 100 / Decimal(total)).quantize(_TWO, rounding=ROUND_HALF_UP)


def event_count(samples: int, sample_after_value: int) -> int:
    if samples < 0 or sample_after_value < 0:
        raise ValueError("inputs must be non-negative")
    return samples * sample_after_value


def cpi(clock_events: int, instruction_events: int) -> Decimal:
    if instruction_events == 0:
        raise ZeroInstructions("no instructions retired")
    return (Decimal(clock_events) / Decimal(instruction_events)).quantize(_THREE, rounding=ROUND_HALF_UP)


def cpi_flag(value: Optional[Decimal]) -> str:
    """'high' above 5, 'suspect' above 1, '' otherwise."""
    if value is None:
        return ""
    if value > 5:
        return "high"
    if value > 1:
        return "suspect"
    return ""


def infer_sav(pairs) -> int:
    """Common events/samples ratio of (samples, events) pairs; ValueError if they disagree."""
    ratios = set()
    for samples, events in pairs:
        if samples == 0:
            if events != 0:
                raise ValueError(f"{events} events from zero samples")
            continue
        q, r = divmod(events, samples)
        if r:
            raise ValueError(f"{events} events is not a whole multiple of {samples} samples")
        ratios.add(q)
    if len(ratios) != 1:
        raise ValueError(f"inconsistent sample-after values: {sorted(ratios)}")
    return ratios.pop()


# -- file format ------------------------------------------------------------------

_KV = re.compile(r"^([a-z_]+)=(.*)$")


def _kv(parts, lineno, keys) -> dict:
    out = {}
    for p in parts:
        m = _KV.match(p)
        if not m or m.group(1) not in keys:
            raise MalformedLine(lineno, f"unexpected field {p!r}")
        out[m.group(1)] = m.group(2)
    missing = [k for k in keys if k not in out]
    if missing:
        raise MalformedLine(lineno, f"missing {', '.join(missing)}")
    return out


def parse_samples_file(text: str) -> SamplingRun:
    meta = None
    events: list = []
    records: list = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("//"):
            continue
        parts = line.split("\t")
        if parts[0] == "#meta":
            if meta is not None:
                raise MalformedLine(lineno, "second #meta line")
            kv = _kv(parts[1:], lineno, ("duration_s", "interval_s", "processors"))
            try:
                meta = SamplingMeta(Decimal(kv["duration_s"]), Decimal(kv["interval_s"]),
                                    int(kv["processors"]))
            except (ArithmeticError, ValueError) as exc:
                raise MalformedLine(lineno, str(exc)) from None
            continue
        if meta is None:
            raise MissingMeta("the first directive must be #meta")
        if parts[0] == "#event":
            if len(parts) != 4 or records:
                raise MalformedLine(lineno, "#event needs name, sav and role, before any record")
            kv = _kv(parts[2:], lineno, ("sav", "role"))
            try:
                spec = EventSpec(parts[1], int(kv["sav"]), kv["role"])
            except ValueError as exc:
                raise MalformedLine(lineno, str(exc)) from None
            if any(e.name == spec.name for e in events):
                raise MalformedLine(lineno, f"event {spec.name} declared twice")
            events.append(spec)
            continue
        if parts[0].startswith("#"):
            raise MalformedLine(lineno, f"unknown directive {parts[0]}")
        if len(parts) != 4:
            raise MalformedLine(lineno, f"expected 4 tab-separated fields, got {len(parts)}")
        ev, fn, loc, count = parts
        if not re.fullmatch(r".+:\d+", loc):
            raise MalformedLine(lineno, f"location {loc!r} is not file:line")
        if not re.fullmatch(r"\d+", count):
            raise MalformedLine(lineno, f"sample count {count!r} is not a non-negative integer")
        if not any(e.name == ev for e in events):
            raise UnknownEvent(ev, lineno)
        records.append(SampleRecord(ev, fn, loc, int(count)))
    if meta is None:
        raise MissingMeta("no #meta line")
    return SamplingRun(meta, tuple(events), tuple(records))


def render_samples(run: SamplingRun) -> str:
    m = run.meta
    lines = [f"#meta\tduration_s={m.duration_s}\tinterval_s={m.interval_s}\tprocessors={m.n_processors}"]
    lines += [f"#event\t{e.name}\tsav={e.sample_after_value}\trole={e.role}" for e in run.events]
    lines += [f"{r.event}\t{r.function}\t{r.location}\t{r.samples}" for r in run.records]
    return "\n".join(lines) + "\n"


# -- hotspot tables ----------------------------------------------------------------

@dataclass(frozen=True)
class EventCell:
    event: str
    samples: int
    percent: Decimal
    events: int


@dataclass(frozen=True)
class HotspotRow:
    scope: str
    cells: tuple
    cpi: Optional[Decimal] = None
    process_share: Optional[Decimal] = None

    def cell(self, event: str) -> EventCell:
        for c in self.cells:
            if c.event == event:
                return c
        raise KeyError(event)

    @property
    def cpi_flag(self) -> str:
        return cpi_flag(self.cpi)


@dataclass
class HotspotTable:
    events: tuple
    rows: list = field(default_factory=list)
    group_by: str = "function"

    def row(self, scope: str) -> HotspotRow:
        for r in self.rows:
            if r.scope == scope:
                return r
        raise KeyError(scope)

    def header(self) -> list:
        cols = [self.group_by]
        for e in self.events:
            cols += [f"{e.name} samples", f"{e.name} %", f"{e.name} events"]
        return cols + ["CPI", "process %"]

    def _cells(self, r: HotspotRow) -> list:
        out = [r.scope]
        for c in r.cells:
            out += [str(c.samples), str(c.percent), str(c.events)]
        cpi_txt = "" if r.cpi is None else str(r.cpi) + (f" ({r.cpi_flag})" if r.cpi_flag else "")
        out.append(cpi_txt)
        out.append("" if r.process_share is None else str(r.process_share))
        return out

    def render_tsv(self) -> str:
        lines = ["\t".join(self.header())] + ["\t".join(self._cells(r)) for r in self.rows]
        return "\n".join(lines) + "\n"

    def render_text(self) -> str:
        table = [self.header()] + [self._cells(r) for r in self.rows]
        widths = [max(len(row[i]) for row in table) for i in range(len(table[0]))]
        lines = []
        for row in table:
            cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
        return "\n".join(lines) + "\n"

    def render(self, fmt: str = "text") -> str:
        return self.render_tsv() if fmt == "tsv" else self.render_text()


def hotspot_table(run: SamplingRun, group_by: str = "function", top: Optional[int] = None) -> HotspotTable:
    if group_by not in ("function", "location"):
        raise ValueError("group_by must be 'function' or 'location'")
    per: dict = {}
    for r in run.records:
        scope = r.function if group_by == "function" else r.location
        row = per.setdefault(scope, {})
        row[r.event] = row.get(r.event, 0) + r.samples
    scopes = sorted(per)
    totals = {e.name: sum(per[s].get(e.name, 0) for s in scopes) for e in run.events}
    shares = {}
    for e in run.events:
        values = [per[s].get(e.name, 0) for s in scopes]
        shares[e.name] = dict(zip(scopes, rounded_shares(values, totals[e.name])))
    clock = run.by_role("clock")
    inst = run.by_role("instruction")
    rows = []
    for s in scopes:
        cells = tuple(EventCell(e.name, per[s].get(e.name, 0), shares[e.name][s],
                                event_count(per[s].get(e.name, 0), e.sample_after_value))
                      for e in run.events)
        row_cpi = None
        share = None
        if clock is not None:
            ce = event_count(per[s].get(clock.name, 0), clock.sample_after_value)
            total_ce = event_count(totals[clock.name], clock.sample_after_value)
            if total_ce:
                share = (Decimal(ce) * 100 / Decimal(total_ce)).quantize(_TWO, rounding=ROUND_HALF_UP)
            if inst is not None:
                ie = event_count(per[s].get(inst.name, 0), inst.sample_after_value)
                row_cpi = cpi(ce, ie) if ie else None
        rows.append(HotspotRow(s, cells, row_cpi, share))
    key_event = clock or (run.events[0] if run.events else None)
    if key_event is not None:
        rows.sort(key=lambda r: (-r.cell(key_event.name).samples, r.scope))
    if top is not None:
        rows = rows[:top]
    return HotspotTable(tuple(run.events), rows, group_by)


def hotspot_rank(run: SamplingRun) -> list:
    """Function names from hottest to coldest."""
    return [r.scope for r in hotspot_table(run, "function").rows]
