"""Abstract cost model: a declared weight table over operation categories.

The interpreter tallies how often each category occurs, per function and per
source line; a CostReport turns the tallies into weighted totals.

Counting policy (what the interpreter charges where):

=================  ============================================================
arith              + - * on integers or pointers, unary minus, ++/-- updates
compare            relational/equality operators; a comparison against the
                   literal 0 and ``!`` are flag tests and cost nothing here
logical_branching  each evaluation of ``&&`` or ``||``
bitwise            & | << >> ~
load               each read of a variable or memory cell; ``register``
                   locals and parameters are register-resident and free
store              each write of a variable or memory cell (same exemption),
                   including parameter binding at a call
call_overhead      each call of a user-defined function
branch             each test of an if/while/for/do condition or ?: operator
div_mod            / and %
builtin_call       each call of a runtime builtin (printf, memset, ...)
loop_back_edge     each jump from the end of a loop body back to its test
=================  ============================================================
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

CATEGORIES = (
    "arith", "compare", "logical_branching", "bitwise", "load", "store",
    "call_overhead", "branch", "div_mod", "builtin_call", "loop_back_edge",
)
(ARITH, COMPARE, LOGICAL, BITWISE, LOAD, STORE, CALL, BRANCH, DIVMOD,
 BUILTIN, BACKEDGE) = range(len(CATEGORIES))

DEFAULT_WEIGHTS = {
    "arith": 1, "compare": 1, "bitwise": 1, "logical_branching": 2,
    "load": 1, "store": 1, "branch": 1, "div_mod": 4, "call_overhead": 8,
    "builtin_call": 2, "loop_back_edge": 1,
}


@dataclass(frozen=True)
class CostModel:
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    version: str = "1"

    def __post_init__(self):
        unknown = set(self.weights) - set(CATEGORIES)
        if unknown:
            raise ValueError(f"unknown cost categories: {sorted(unknown)}")
        for k, v in self.weights.items():
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"weight for {k} must be a non-negative integer, got {v!r}")
        merged = dict(DEFAULT_WEIGHTS)
        merged.update(self.weights)
        object.__setattr__(self, "weights", merged)

    def vector(self) -> list[int]:
        return [self.weights[c] for c in CATEGORIES]

    @classmethod
    def from_file(cls, path) -> "CostModel":
        """Load a JSON object mapping category -> weight (missing ones keep defaults)."""
        data = json.loads(Path(path).read_text())
        version = str(data.pop("version", "custom"))
        return cls(data, version)


DEFAULT_COST_MODEL = CostModel()


@dataclass
class CostReport:
    model: CostModel
    # (function, "file:line") -> per-category counts
    tallies: dict = field(default_factory=dict)

    @property
    def counts(self) -> dict[str, int]:
        out = [0] * len(CATEGORIES)
        for vec in self.tallies.values():
            for i, n in enumerate(vec):
                out[i] += n
        return dict(zip(CATEGORIES, out))

    def _weighted(self, vec) -> int:
        return sum(n * w for n, w in zip(vec, self.model.vector()))

    @property
    def total(self) -> int:
        return sum(n * self.model.weights[c] for c, n in self.counts.items())

    @property
    def by_function(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (fn, _), vec in self.tallies.items():
            out[fn] = out.get(fn, 0) + self._weighted(vec)
        return out

    @property
    def by_location(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for (_, loc), vec in self.tallies.items():
            out[loc] = out.get(loc, 0) + self._weighted(vec)
        return out

    def function_counts(self, fn: str) -> dict[str, int]:
        out = [0] * len(CATEGORIES)
        for (f, _), vec in self.tallies.items():
            if f == fn:
                for i, n in enumerate(vec):
                    out[i] += n
        return dict(zip(CATEGORIES, out))


def rounded_shares(values: list, total, places: int = 2, tolerance: str = "0.01") -> list[Decimal]:
    """Percent shares rounded half-up, nudged by one ulp where needed so the
    column sums to 100 within ``tolerance``."""
    if not values or total == 0:
        return [Decimal(0).quantize(Decimal(1).scaleb(-places)) for _ in values]
    q = Decimal(1).scaleb(-places)
    exact = [Decimal(v) * 100 / Decimal(total) for v in values]
    shares = [e.quantize(q, rounding=ROUND_HALF_UP) for e in exact]
    tol = Decimal(tolerance)
    drift = sum(shares) - 100
    # cells whose rounding error is largest in the drift direction move first
    while abs(drift) > tol:
        sign = 1 if drift > 0 else -1
        i = max(range(len(shares)), key=lambda k: (sign * (shares[k] - exact[k]), -k))
        shares[i] -= sign * q
        drift -= sign * q
    return shares


@dataclass(frozen=True)
class AttributionRow:
    scope: str
    cost: int
    share: Decimal


def cost_attribution(result, group_by: str = "function") -> list[AttributionRow]:
    """Per-function (or per-line) cost with percentage shares, most costly first."""
    report = result.cost if hasattr(result, "cost") else result
    if group_by == "function":
        table = report.by_function
    elif group_by == "location":
        table = report.by_location
    else:
        raise ValueError("group_by must be 'function' or 'location'")
    items = sorted(((k, v) for k, v in table.items() if v), key=lambda kv: (-kv[1], kv[0]))
    shares = rounded_shares([v for _, v in items], sum(v for _, v in items))
    return [AttributionRow(k, v, s) for (k, v), s in zip(items, shares)]
