"""Command-line front end: analyze, rewrite, run, report and bench.

Exit codes: 0 success, 1 runtime fault in the interpreted program, 2 parse
error, 3 misuse, 4 bench divergence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from importlib.resources import files
from pathlib import Path
from typing import Optional

from .analysis import ADVISORY_RULES, ALL_RULES, REWRITABLE, RuleId, Safety, detect, render_text, render_tsv
from .errors import FrontendError, InterpError, ProfileError
from .frontend import parse_source, pretty_print
from .interp import DEFAULT_COST_MODEL, CostModel, RunConfig, cost_attribution, run
from .profile import hotspot_rank, hotspot_table, parse_samples_file
from .rewrite import auto_plan

EXIT_OK, EXIT_FAULT, EXIT_PARSE, EXIT_MISUSE, EXIT_DIVERGED = 0, 1, 2, 3, 4
DEFAULT_SEEDS = (1, 42, 20071)


class Misuse(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_MISUSE, f"{self.prog}: error: {message}\n")


# -- input helpers ---------------------------------------------------------------

def resolve(path: str) -> Path:
    """Use ``path`` if it exists, else a shipped fixture with that name."""
    p = Path(path)
    if p.exists():
        return p
    shipped = files("hotopt") / "fixtures" / p.name
    if shipped.is_file():
        return Path(str(shipped))
    raise Misuse(f"no such file: {path}")


def load_unit(path: str, defines=()):
    p = resolve(path)
    return parse_source(p.read_text(), p.name, list(defines))


def parse_rules(spec: Optional[list]) -> Optional[list]:
    if not spec:
        return None
    names = [n.strip() for chunk in spec for n in chunk.split(",") if n.strip()]
    if "all-safe" in names:
        return None
    try:
        return [RuleId(n) for n in names]
    except ValueError:
        bad = [n for n in names if n not in {r.value for r in ALL_RULES}]
        raise Misuse(f"unknown rule(s): {', '.join(bad)}") from None


def load_model(path: Optional[str]) -> CostModel:
    return CostModel.from_file(path) if path else DEFAULT_COST_MODEL


def _pct(x) -> Decimal:
    return Decimal(x).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def _table(rows: list, fmt: str) -> str:
    if fmt == "tsv":
        return "".join("\t".join(r) + "\n" for r in rows)
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    out = []
    for r in rows:
        out.append("  ".join([r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]).rstrip())
    return "\n".join(out) + "\n"


# -- analyze ------------------------------------------------------------------------

def order_by_hotspots(findings: list, ranking: list, top: Optional[int]) -> list:
    """(marker, finding) pairs: hot functions by rank first, the rest marked cold."""
    hot = ranking[:top] if top is not None else ranking
    rank = {fn: i for i, fn in enumerate(hot)}
    keyed = sorted(enumerate(findings), key=lambda p: (rank.get(p[1].function, len(hot)), p[0]))
    return [(f"hot#{rank[f.function] + 1}" if f.function in rank else "cold", f) for _, f in keyed]


def cmd_analyze(args, out) -> int:
    tu = load_unit(args.file, args.define)
    findings = detect(tu, parse_rules(args.rules))
    if not findings:
        return EXIT_OK
    if args.hotspots is None:
        out.write(render_tsv(findings) if args.format == "tsv" else render_text(findings))
        return EXIT_OK
    run_ = parse_samples_file(resolve(args.hotspots).read_text())
    ranked = order_by_hotspots(findings, hotspot_rank(run_), args.top)
    if args.format == "tsv":
        body = render_tsv([f for _, f in ranked]).splitlines()
        lines = ["hotness\t" + body[0]] + [f"{m}\t{line}" for (m, _), line in zip(ranked, body[1:])]
        out.write("\n".join(lines) + "\n")
    else:
        body = render_text([f for _, f in ranked]).splitlines()
        out.write("".join(f"{m:<7} {line}\n" for (m, _), line in zip(ranked, body)))
    return EXIT_OK


# -- rewrite --------------------------------------------------------------------------

def cmd_rewrite(args, out) -> int:
    rules = parse_rules(args.rules)
    if rules is not None:
        adv = [r for r in rules if r in ADVISORY_RULES]
        if adv:
            raise Misuse(f"advisory rules cannot be rewritten: {', '.join(r.value for r in adv)}")
    tu = load_unit(args.file, args.define)
    # an explicit rule list applies every eligible finding; all-safe also gates on profit
    new, report = auto_plan(tu, rules if rules is not None else REWRITABLE,
                            allow_unsafe=args.unsafe, gate=rules is None)
    text = pretty_print(new)
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    summary = report.summary() if report.applied else "no rewrites applied\n" + report.summary()
    if args.report:
        Path(args.report).write_text(summary + report.diff())
    sys.stderr.write(summary)
    return EXIT_OK


# -- run --------------------------------------------------------------------------------

def cmd_run(args, out) -> int:
    tu = load_unit(args.file, args.define)
    config = RunConfig(seed=args.seed, time_value=args.time_value,
                       cost_model=load_model(args.cost_model))
    result = run(tu, args.entry, config)
    out.flush()
    out_bytes = getattr(out, "buffer", None)
    if out_bytes is not None:
        out_bytes.write(result.stdout)
        out_bytes.flush()
    else:
        out.write(result.stdout.decode("latin-1"))
    if args.cost:
        rows = [[args.by, "cost", "share %"]]
        rows += [[r.scope, str(r.cost), str(r.share)] for r in cost_attribution(result, args.by)]
        rows.append(["total", str(result.cost.total), "100.00" if result.cost.total else "0.00"])
        out.write(_table(rows, args.format))
    sys.stderr.write(f"exit code {result.exit_code}, {result.steps} steps\n")
    return EXIT_OK


# -- report -------------------------------------------------------------------------------

def cmd_report(args, out) -> int:
    run_ = parse_samples_file(resolve(args.file).read_text())
    out.write(hotspot_table(run_, args.by, args.top).render(args.format))
    return EXIT_OK


# -- bench ----------------------------------------------------------------------------------

@dataclass
class BenchOutcome:
    equivalent: bool
    cost_before: int
    cost_after: int
    reduction_percent: Decimal
    per_rule_breakdown: dict = field(default_factory=dict)
    divergence: Optional[str] = None

    def render(self, fmt: str = "text") -> str:
        rows = [["metric", "value"],
                ["equivalent", str(self.equivalent).lower()],
                ["cost_before", str(self.cost_before)],
                ["cost_after", str(self.cost_after)],
                ["reduction_percent", str(self.reduction_percent)]]
        rows += [[f"delta {rule}", str(d)] for rule, d in self.per_rule_breakdown.items()]
        return _table(rows, fmt)


def first_difference(a: bytes, b: bytes) -> int:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i
    return min(len(a), len(b))


def bench(original, optimized, entry: str = "main", seeds=DEFAULT_SEEDS,
          cost_model: CostModel = DEFAULT_COST_MODEL, breakdown: bool = True) -> BenchOutcome:
    """Run both units under every seed and compare output bytes and exit codes.

    Costs are summed over the seeds. The per-rule breakdown rewrites the
    original with each rule alone and reports the cost saved under the first seed.
    """
    before = after = 0
    for seed in seeds:
        cfg = RunConfig(seed=seed, cost_model=cost_model)
        a, b = run(original, entry, cfg), run(optimized, entry, cfg)
        before += a.cost.total
        after += b.cost.total
        if a.stdout != b.stdout or a.exit_code != b.exit_code:
            if a.stdout != b.stdout:
                off = first_difference(a.stdout, b.stdout)
                what = (f"seed {seed}: stdout differs at byte {off}: "
                        f"{a.stdout[off:off + 16]!r} vs {b.stdout[off:off + 16]!r}")
            else:
                what = f"seed {seed}: exit code {a.exit_code} vs {b.exit_code}"
            return BenchOutcome(False, a.cost.total, b.cost.total, _reduction(a.cost.total, b.cost.total),
                                divergence=what)
    per_rule = {}
    if breakdown and seeds:
        cfg = RunConfig(seed=seeds[0], cost_model=cost_model)
        base = run(original, entry, cfg).cost.total
        for rule in REWRITABLE:
            if not any(f.safety is Safety.SAFE for f in detect(original, {rule})):
                continue
            variant, rep = auto_plan(original, {rule}, cost_model=cost_model)
            if rep.applied:
                per_rule[rule.value] = base - run(variant, entry, cfg).cost.total
    return BenchOutcome(True, before, after, _reduction(before, after), per_rule)


def _reduction(before: int, after: int) -> Decimal:
    return _pct(Decimal(100) * (before - after) / before) if before else _pct(0)


def cmd_bench(args, out) -> int:
    seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip()) if args.seeds else DEFAULT_SEEDS
    a = load_unit(args.original, args.define)
    b = load_unit(args.optimized, args.define)
    outcome = bench(a, b, args.entry, seeds, load_model(args.cost_model), not args.no_breakdown)
    out.write(outcome.render(args.format))
    if not outcome.equivalent:
        sys.stderr.write(f"divergence: {outcome.divergence}\n")
        return EXIT_DIVERGED
    return EXIT_OK


# -- wiring -----------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hotopt", description="Hotspot-guided source optimizer for a small C subset.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt=True, define=True):
        if fmt:
            sp.add_argument("--format", choices=("text", "tsv"), default="text")
        if define:
            sp.add_argument("--define", "-D", action="append", default=[], metavar="NAME[=VALUE]",
                            help="predefine a macro, e.g. SMALL or N=1000")

    a = sub.add_parser("analyze", help="list optimization opportunities")
    a.add_argument("file")
    a.add_argument("--rules", action="append", help="comma-separated rule ids")
    a.add_argument("--hotspots", metavar="SAMPLES", help="order findings by this sampling log")
    a.add_argument("--top", type=int, help="functions beyond this hotspot rank are cold")
    common(a)
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("rewrite", help="apply rewrites and print the new source")
    r.add_argument("file")
    r.add_argument("--rules", action="append", help="comma-separated rule ids, or all-safe")
    r.add_argument("--unsafe", action="store_true", help="also apply findings that need an override")
    r.add_argument("-o", "--output")
    r.add_argument("--report", help="write the change report and diff here")
    common(r, fmt=False)
    r.set_defaults(func=cmd_rewrite)

    x = sub.add_parser("run", help="interpret a program")
    x.add_argument("file")
    x.add_argument("--entry", default="main")
    x.add_argument("--seed", type=int, default=42)
    x.add_argument("--time-value", type=int)
    x.add_argument("--cost", action="store_true", help="print the cost attribution table")
    x.add_argument("--by", choices=("function", "location"), default="function")
    x.add_argument("--cost-model", metavar="FILE")
    common(x)
    x.set_defaults(func=cmd_run)

    s = sub.add_parser("report", help="hotspot table from a sampling log")
    s.add_argument("file")
    s.add_argument("--by", choices=("function", "location"), default="function")
    s.add_argument("--top", type=int)
    common(s, define=False)
    s.set_defaults(func=cmd_report)

    b = sub.add_parser("bench", help="compare two programs for output and cost")
    b.add_argument("original")
    b.add_argument("optimized")
    b.add_argument("--entry", default="main")
    b.add_argument("--seeds", help=f"comma-separated, default {','.join(map(str, DEFAULT_SEEDS))}")
    b.add_argument("--cost-model", metavar="FILE")
    b.add_argument("--no-breakdown", action="store_true", help="skip the per-rule cost deltas")
    common(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except Misuse as exc:
        sys.stderr.write(f"hotopt: {exc}\n")
        return EXIT_MISUSE
    except (FrontendError, ProfileError) as exc:
        sys.stderr.write(f"hotopt: {exc}\n")
        return EXIT_PARSE
    except InterpError as exc:
        sys.stderr.write(f"hotopt: runtime error: {exc}\n")
        return EXIT_FAULT
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"hotopt: {exc}\n")
        return EXIT_MISUSE


if __name__ == "__main__":
    sys.exit(main())
