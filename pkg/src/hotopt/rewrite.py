"""Source-to-source rewrites for the rewritable rules, and plan application.

Rewritten code keeps the span of the node it replaces; code that is spliced
in or synthesized has no span, so later findings never point into it.
"""

from __future__ import annotations

import dataclasses
import difflib
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .analysis import (
    CanonicalLoop, DetectConfig, DEFAULT_CONFIG, Finding, REWRITABLE, RuleId, Safety,
    detect, is_boolean_valued, loop_shape, side_effect_free,
)
from .errors import (
    EarlyReturnUnsupported, NameCollision, PreconditionViolated, SpanMismatch,
)
from .frontend.printer import node_text, pretty_print
from .frontend.syntax import (
    Assign, Binary, Block, Call, CType, Deref, ExprStmt, For, FunctionDef, If, IncDec,
    Index, IntLit, Node, Return, SizeOf, TranslationUnit, Unary, Var, VarDecl,
    map_children, transform, walk,
)
from .interp.cost import (
    ARITH, BITWISE, CATEGORIES, COMPARE, DEFAULT_COST_MODEL, DIVMOD, LOAD, LOGICAL,
    CostModel,
)

AUTO_ORDER = (
    RuleId.GLOBAL_REG_ALIAS, RuleId.FN_INLINE, RuleId.NESTED_IF_MERGE, RuleId.BITWISE_CONV,
    RuleId.MEMSET_INIT, RuleId.LOOP_COUNTDOWN, RuleId.UNSIGNED_PROMOTE,
)


class SkipReason(str, Enum):
    STALE_SPAN = "STALE_SPAN"
    NEEDS_OVERRIDE = "NEEDS_OVERRIDE"
    PRECONDITION_FAILED = "PRECONDITION_FAILED"
    ADVISORY_ONLY = "ADVISORY_ONLY"
    UNPROFITABLE = "UNPROFITABLE"

    def __str__(self):
        return self.value


@dataclass
class ChangeReport:
    applied: list = field(default_factory=list)  # (Finding, before, after)
    skipped: list = field(default_factory=list)  # (Finding, SkipReason)
    functions_touched: set = field(default_factory=set)
    before_text: str = ""
    after_text: str = ""
    filename: str = "<input>"

    def extend(self, other: "ChangeReport"):
        self.applied += other.applied
        self.skipped += other.skipped
        self.functions_touched |= other.functions_touched
        self.after_text = other.after_text

    def diff(self) -> str:
        lines = difflib.unified_diff(
            self.before_text.splitlines(keepends=True), self.after_text.splitlines(keepends=True),
            fromfile=f"a/{self.filename}", tofile=f"b/{self.filename}")
        return "".join(lines)

    def summary(self) -> str:
        out = []
        for f, before, after in self.applied:
            out.append(f"applied {f.rule} at {f.location} in {f.function}")
        for f, reason in self.skipped:
            out.append(f"skipped {f.rule} at {f.location} in {f.function}: {reason}")
        return "\n".join(out) + ("\n" if out else "")

    def counts_by_rule(self) -> dict:
        out: dict = {}
        for f, _, _ in self.applied:
            out[f.rule] = out.get(f.rule, 0) + 1
        return out


# -- small builders ------------------------------------------------------------

def strip_spans(node: Node) -> Node:
    return transform(node, lambda n: dataclasses.replace(n, span=None) if n.span is not None else n)


def _lit(e) -> Optional[int]:
    if isinstance(e, IntLit):
        return e.value
    return None


def _plus(e: Node, c: int) -> Node:
    if c == 0:
        return e
    if isinstance(e, IntLit):
        return IntLit(e.value + c)
    return Binary("+", e, IntLit(c)) if c > 0 else Binary("-", e, IntLit(-c))


def booleanize(e: Node) -> Node:
    return e if is_boolean_valued(e) else Binary("!=", e, IntLit(0))


def substitute(node: Node, name: str, repl: Node) -> Node:
    """Replace every read of variable ``name`` with a copy of ``repl``."""
    def f(n):
        if isinstance(n, Var) and n.name == name:
            return repl
        return n
    return transform(node, f)


def rename_var(node: Node, old: str, new: str) -> Node:
    return transform(node, lambda n: Var(new, n.span) if isinstance(n, Var) and n.name == old else n)


def all_identifiers(tu: TranslationUnit) -> set:
    names = {g.name for g in tu.globals} | {f.name for f in tu.functions}
    names |= {p.name for p in tu.prototypes}
    for fn in tu.functions:
        names |= {p.name for p in fn.params}
        for n in walk(fn.body):
            if isinstance(n, (Var, VarDecl)):
                names.add(n.name)
    return names


class FreshNames:
    """Deterministic ``__t<n>`` names that avoid every identifier in the unit."""

    def __init__(self, tu: TranslationUnit):
        self.taken = all_identifiers(tu)
        self.n = 0

    def temp(self) -> str:
        while f"__t{self.n}" in self.taken:
            self.n += 1
        name = f"__t{self.n}"
        self.taken.add(name)
        return name

    def named(self, base: str) -> str:
        name, k = base, 1
        while name in self.taken:
            name = f"{base}_{k}"
            k += 1
        self.taken.add(name)
        return name


# -- individual rewrites ---------------------------------------------------------

def _check_countdown(loop, canonical: CanonicalLoop):
    if not isinstance(loop, For):
        raise PreconditionViolated("count-down conversion needs a for loop", getattr(loop, "span", None))
    if canonical.dir != "up" or not canonical.step1:
        raise PreconditionViolated("loop is not an up-counting unit-step loop", loop.span)
    if canonical.var_written_in_body:
        raise PreconditionViolated(f"body writes {canonical.var}", loop.span)
    if not canonical.bound_loop_invariant:
        raise PreconditionViolated("bound is not loop-invariant", loop.span)
    if not side_effect_free(canonical.init):
        raise PreconditionViolated("start value has side effects", loop.span)


def countdown_parts(canonical: CanonicalLoop):
    """(start value, condition, index remap) for the count-down form.

    The original visits x = A..B' (B' = B, or B - 1 for ``<``).  The new loop
    counts v from B' - A + 1 down to 1, and the body sees x = B' - v + 1.
    """
    v = canonical.var
    A = canonical.init
    B = canonical.bound
    bc = 0 if canonical.inclusive else -1
    a = _lit(A)
    if a is not None:
        start = _plus(B, bc + 1 - a)
    else:
        start = _plus(Binary("-", B, A), bc + 1)
    remap = _plus(Binary("-", B, Var(v)), bc + 1)
    trip = _lit(start)
    if trip is not None and trip >= 0:
        cond = Binary("!=", Var(v), IntLit(0))
    else:
        # a negative trip count must still run zero times
        cond = Binary(">", Var(v), IntLit(0))
    return start, cond, remap


def rewrite_countdown(loop: For, canonical: CanonicalLoop) -> For:
    """``for (v = A; v <= B; v++) S`` -> ``for (v = B-A+1; v != 0; v--) S[v := B-v+1]``."""
    _check_countdown(loop, canonical)
    v = canonical.var
    start, cond, remap = countdown_parts(canonical)
    body = substitute(loop.body, v, remap)
    return For(Assign("=", Var(v), start), cond, IncDec("--", False, Var(v)), body, span=loop.span)


def _trailing_return(body: Block) -> tuple:
    stmts = body.stmts
    rets = [n for n in walk(body) if isinstance(n, Return)]
    if not rets:
        return stmts
    if len(rets) == 1 and stmts and stmts[-1] is rets[0] and rets[0].value is None:
        return stmts[:-1]
    raise EarlyReturnUnsupported("callee returns before its end", rets[0].span)


def rewrite_inline(tu: TranslationUnit, call_site: ExprStmt, callee: FunctionDef,
                   names: Optional[FreshNames] = None) -> Block:
    """Splice ``callee`` at an expression-statement call, arguments bound to temporaries."""
    call = call_site.expr if isinstance(call_site, ExprStmt) else call_site
    if not isinstance(call, Call) or call.name != callee.name:
        raise PreconditionViolated(f"not a call of {callee.name}", getattr(call_site, "span", None))
    if len(call.args) != len(callee.params):
        raise PreconditionViolated("argument count mismatch", call.span)
    if any(isinstance(n, VarDecl) and n.is_static for n in walk(callee.body)):
        raise PreconditionViolated(f"{callee.name} has static locals", callee.span)
    body = _trailing_return(callee.body)
    names = names or FreshNames(tu)
    local = {n.name for n in walk(callee.body) if isinstance(n, VarDecl)}
    decls = []
    spliced = Block(tuple(body))
    for p, arg in zip(callee.params, call.args):
        if p.name in local:
            raise NameCollision(f"{callee.name} redeclares parameter {p.name}", callee.span)
        t = names.temp()
        if t in local:
            raise NameCollision(f"temporary {t} collides with a local of {callee.name}", callee.span)
        decls.append(VarDecl(t, p.ctype.plain(), (), arg))
        spliced = rename_var(spliced, p.name, t)
    spliced = strip_spans(spliced)
    return Block(tuple(decls) + spliced.stmts, span=call_site.span)


def rewrite_global_alias(fn: FunctionDef, global_: str, tu: Optional[TranslationUnit] = None,
                         names: Optional[FreshNames] = None) -> FunctionDef:
    """Route every use of ``global_`` in ``fn`` through a register-hinted local copy."""
    decl = tu.global_decl(global_) if tu is not None else None
    if tu is not None and (decl is None or decl.dims):
        raise PreconditionViolated(f"{global_} is not a scalar global", fn.span)
    ctype = decl.ctype if decl is not None else CType("int")
    locals_ = {p.name for p in fn.params} | {n.name for n in walk(fn.body) if isinstance(n, VarDecl)}
    if global_ in locals_:
        raise PreconditionViolated(f"{global_} is shadowed inside {fn.name}", fn.span)
    if not any(isinstance(n, Var) and n.name == global_ for n in walk(fn.body)):
        raise PreconditionViolated(f"{fn.name} does not use {global_}", fn.span)
    names = names or (FreshNames(tu) if tu is not None else None)
    alias = names.named(f"__local_{global_}") if names else f"__local_{global_}"
    if alias in locals_:
        raise NameCollision(f"{alias} already exists in {fn.name}", fn.span)
    writes = any(isinstance(n, (Assign, IncDec)) and isinstance(n.target, Var)
                 and n.target.name == global_ for n in walk(fn.body))
    body = rename_var(fn.body, global_, alias)

    def write_back():
        return ExprStmt(Assign("=", Var(global_), Var(alias)))

    if writes:
        def at_returns(n):
            if isinstance(n, Return):
                if n.value is not None and not side_effect_free(n.value):
                    raise PreconditionViolated("return value with side effects", n.span)
                return Block((write_back(), n))
            return n

        def rebuild(n):
            n = map_children(n, rebuild) if not isinstance(n, Return) else n
            return at_returns(n)
        stmts = tuple(rebuild(s) for s in body.stmts)
        # a returning final statement needs no extra write-back after it
        if not (stmts and isinstance(stmts[-1], Block) and stmts[-1].stmts
                and isinstance(stmts[-1].stmts[-1], Return) and stmts[-1].span is None):
            stmts = stmts + (write_back(),)
        # unwrap a trailing write-back/return pair so it reads naturally
        if stmts and isinstance(stmts[-1], Block) and stmts[-1].span is None:
            stmts = stmts[:-1] + stmts[-1].stmts
        body = Block(stmts, span=body.span)
    entry = VarDecl(alias, CType(ctype.base, ctype.pointer_depth, True), (), Var(global_))
    body = Block((entry,) + body.stmts, span=body.span)
    return dataclasses.replace(fn, body=body)


def rewrite_bitwise(e: Binary) -> Binary:
    """``a && b`` -> ``a & b`` and ``a || b`` -> ``a | b``, booleanizing operands."""
    if not isinstance(e, Binary) or e.op not in ("&&", "||"):
        raise PreconditionViolated("not a logical operator", getattr(e, "span", None))
    if not (side_effect_free(e.left) and side_effect_free(e.right)):
        raise PreconditionViolated("operand with side effects", e.span)
    return Binary("&" if e.op == "&&" else "|", booleanize(e.left), booleanize(e.right), span=e.span)


def rewrite_nested_if_merge(s: If) -> If:
    if not (isinstance(s, If) and s.other is None and isinstance(s.then, If) and s.then.other is None):
        raise PreconditionViolated("not an else-less nested if", getattr(s, "span", None))
    inner = s.then
    if not (side_effect_free(s.cond) and side_effect_free(inner.cond)):
        raise PreconditionViolated("condition with side effects", s.span)
    cond = Binary("&", booleanize(s.cond), booleanize(inner.cond))
    return If(cond, inner.then, None, span=s.span)


def rewrite_memset(loop: For, payload: dict) -> Node:
    """Zero-fill loop -> ``memset(arr + lo, 0, (hi - lo) * sizeof(elem))``."""
    for key in ("array", "lo", "hi", "elem", "var"):
        if key not in payload:
            raise PreconditionViolated(f"memset payload lacks {key}", loop.span)
    elem = payload["elem"]
    if elem not in ("int", "char"):
        raise PreconditionViolated(f"element type {elem} is not int or char", loop.span)
    lo = payload["lo"]
    hi = payload["hi"] if not payload.get("inclusive") else _plus(payload["hi"], 1)
    size = Binary("*", Binary("-", hi, lo), SizeOf(CType(elem)))
    call = ExprStmt(Call("memset", (Binary("+", Var(payload["array"]), lo), IntLit(0), size)),
                    span=loop.span)
    if payload.get("live_after"):
        # keep the loop variable's exit value for later reads
        return Block((call, ExprStmt(Assign("=", Var(payload["var"]), hi))), span=loop.span)
    return call


def rewrite_unsigned(fn: FunctionDef, var: str) -> FunctionDef:
    found = []

    def f(n):
        if isinstance(n, VarDecl) and n.name == var:
            if n.ctype.base != "int" or n.ctype.pointer_depth or n.dims:
                raise PreconditionViolated(f"{var} is not a plain int", n.span)
            found.append(n)
            return dataclasses.replace(n, ctype=dataclasses.replace(n.ctype, base="unsigned-int"))
        return n
    out = transform(fn, f)
    if not found:
        raise PreconditionViolated(f"no declaration of {var} in {fn.name}", fn.span)
    return out


# -- plan application --------------------------------------------------------------

def find_node(root: Node, node_type: Optional[str], span) -> Optional[Node]:
    for n in walk(root):
        if n.span == span and span is not None and (node_type is None or type(n).__name__ == node_type):
            return n
    return None


def replace_node(root: Node, target: Node, new: Node) -> Node:
    if root is target:
        return new

    def f(n):
        if n is target:
            return new
        if any(m is target for m in walk(n)):
            return map_children(n, f)
        return n
    return map_children(root, f)


def _key(f: Finding):
    p = f.payload
    return (f.rule, f.span, p.get("global"), p.get("callee"), p.get("var"), p.get("op"))


def _enclosing_function(tu: TranslationUnit, node: Node) -> Optional[FunctionDef]:
    for fn in tu.functions:
        if fn is node or any(n is node for n in walk(fn)):
            return fn
    return None


def _apply_one(tu: TranslationUnit, f: Finding, target: Node, names: FreshNames) -> tuple:
    """(node replaced, replacement)."""
    new = _rewrite_target(tu, f, target, names)
    return new if isinstance(new, tuple) else (target, new)


def _rewrite_target(tu: TranslationUnit, f: Finding, target: Node, names: FreshNames):
    rule = f.rule
    if rule is RuleId.LOOP_COUNTDOWN:
        gnames = {g.name for g in tu.globals}
        shape = loop_shape(target, gnames)
        if shape is None:
            raise PreconditionViolated("loop no longer has a canonical shape", target.span)
        return rewrite_countdown(target, shape)
    if rule is RuleId.FN_INLINE:
        callee = tu.function(f.payload["callee"])
        if callee is None:
            raise PreconditionViolated(f"no function {f.payload['callee']}", target.span)
        return rewrite_inline(tu, target, callee, names)
    if rule is RuleId.GLOBAL_REG_ALIAS:
        return rewrite_global_alias(target, f.payload["global"], tu, names)
    if rule is RuleId.BITWISE_CONV:
        return rewrite_bitwise(target)
    if rule is RuleId.NESTED_IF_MERGE:
        return rewrite_nested_if_merge(target)
    if rule is RuleId.MEMSET_INIT:
        return rewrite_memset(target, f.payload)
    if rule is RuleId.UNSIGNED_PROMOTE:
        fn = _enclosing_function(tu, target)
        if fn is None:
            raise PreconditionViolated("declaration outside any function", target.span)
        return fn, rewrite_unsigned(fn, f.payload["var"])
    raise PreconditionViolated(f"{rule} has no rewrite", f.span)


def apply_plan(tu: TranslationUnit, findings: Iterable[Finding], allow_unsafe: bool = False,
               config: DetectConfig = DEFAULT_CONFIG) -> tuple:
    """Apply ``findings`` in order; returns (new unit, ChangeReport)."""
    findings = list(findings)
    report = ChangeReport(filename=tu.filename)
    report.before_text = report.after_text = pretty_print(tu)
    for f in findings:
        if f.span is None or find_node(tu, f.payload.get("node"), f.span) is None:
            raise SpanMismatch(f"{f.rule} finding at {f.span} matches no node of the original AST",
                               f.span)
    names = FreshNames(tu)
    cur = tu
    for f in findings:
        if not f.rule.rewritable or f.safety is Safety.ADVISORY:
            report.skipped.append((f, SkipReason.ADVISORY_ONLY))
            continue
        if f.safety is Safety.UNSAFE_NEEDS_OVERRIDE and not allow_unsafe:
            report.skipped.append((f, SkipReason.NEEDS_OVERRIDE))
            continue
        target = find_node(cur, f.payload.get("node"), f.span)
        if target is None:
            report.skipped.append((f, SkipReason.STALE_SPAN))
            continue
        current = [g for g in detect(cur, {f.rule}, config) if _key(g) == _key(f)]
        if not current or (current[0].safety is not Safety.SAFE and not allow_unsafe):
            report.skipped.append((f, SkipReason.PRECONDITION_FAILED))
            continue
        try:
            old, new = _apply_one(cur, f, target, names)
        except (PreconditionViolated, EarlyReturnUnsupported):
            report.skipped.append((f, SkipReason.PRECONDITION_FAILED))
            continue
        if f.rule is RuleId.UNSIGNED_PROMOTE:
            before, after = node_text(target), node_text(find_node(new, "VarDecl", f.span))
        else:
            before, after = node_text(old), node_text(new)
        cur = replace_node(cur, old, new)
        report.applied.append((f, before, after))
        report.functions_touched.add(f.function)
    report.after_text = pretty_print(cur)
    return cur, report


# -- profitability ----------------------------------------------------------------

_CAT = {"+": ARITH, "-": ARITH, "*": ARITH, "/": DIVMOD, "%": DIVMOD,
        "&": BITWISE, "|": BITWISE, "<<": BITWISE, ">>": BITWISE,
        "&&": LOGICAL, "||": LOGICAL}


def static_cost(e: Node, model: CostModel = DEFAULT_COST_MODEL, free: frozenset = frozenset()) -> int:
    """Rough per-evaluation cost of a pure expression, mirroring the interpreter's policy."""
    w = dict(zip(range(len(CATEGORIES)), model.vector()))
    total = 0
    for n in walk(e):
        if isinstance(n, Var) and n.name not in free:
            total += w[LOAD]
        elif isinstance(n, (Index, Deref)):
            total += w[LOAD]
        elif isinstance(n, Binary):
            if n.op in _CAT:
                total += w[_CAT[n.op]]
            elif not (_lit(n.left) == 0 or _lit(n.right) == 0):
                total += w[COMPARE]
        elif isinstance(n, Unary) and n.op == "-":
            total += w[ARITH]
        elif isinstance(n, Unary) and n.op == "~":
            total += w[BITWISE]
    return total


def countdown_gain(loop: For, canonical: CanonicalLoop, model: CostModel = DEFAULT_COST_MODEL,
                   free: frozenset = frozenset()) -> int:
    """Estimated cost saved per iteration by the count-down form (may be negative)."""
    _, cond, remap = countdown_parts(canonical)
    reads = sum(1 for n in walk(loop.body) if isinstance(n, Var) and n.name == canonical.var)
    old = static_cost(loop.cond, model, free) + reads * static_cost(Var(canonical.var), model, free)
    new = static_cost(cond, model, free) + reads * static_cost(remap, model, free)
    return old - new


def _register_names(fn: FunctionDef) -> frozenset:
    names = {p.name for p in fn.params if p.ctype.is_register_hint}
    names |= {n.name for n in walk(fn.body) if isinstance(n, VarDecl) and n.ctype.is_register_hint}
    return frozenset(names)


def _profitable(tu: TranslationUnit, f: Finding, model: CostModel) -> bool:
    if f.rule is not RuleId.LOOP_COUNTDOWN:
        return True
    loop = find_node(tu, "For", f.span)
    if loop is None:
        return True
    shape = loop_shape(loop, {g.name for g in tu.globals})
    fn = tu.function(f.function)
    free = _register_names(fn) if fn is not None else frozenset()
    return shape is not None and countdown_gain(loop, shape, model, free) > 0


def auto_plan(tu: TranslationUnit, rules: Optional[Iterable[RuleId]] = None,
              allow_unsafe: bool = False, cost_model: CostModel = DEFAULT_COST_MODEL,
              gate: bool = True, config: DetectConfig = DEFAULT_CONFIG) -> tuple:
    """Detect and apply rules stage by stage in the fixed order.

    With ``gate`` on, count-down conversions the cost model rates as no gain
    (index remaps that cost more than the cheaper test saves) are skipped.
    """
    wanted = set(REWRITABLE if rules is None else rules)
    total = ChangeReport(filename=tu.filename)
    total.before_text = total.after_text = pretty_print(tu)
    cur = tu
    for rule in AUTO_ORDER:
        if rule not in wanted:
            continue
        found = detect(cur, {rule}, config)
        plan = []
        for f in found:
            if f.safety is not Safety.SAFE and not allow_unsafe:
                total.skipped.append((f, SkipReason.NEEDS_OVERRIDE))
            elif gate and not _profitable(cur, f, cost_model):
                total.skipped.append((f, SkipReason.UNPROFITABLE))
            else:
                plan.append(f)
        cur, rep = apply_plan(cur, plan, allow_unsafe, config)
        total.extend(rep)
    total.after_text = pretty_print(cur)
    return cur, total


# -- staged variants ----------------------------------------------------------------

# Cumulative bundles behind the three shipped heap variants: loops, then
# register-oriented rules, then branch removal and inlining.
STAGES = (
    ("loops", (RuleId.LOOP_COUNTDOWN,)),
    ("registers", (RuleId.GLOBAL_REG_ALIAS, RuleId.UNSIGNED_PROMOTE)),
    ("branch+inline", (RuleId.BITWISE_CONV, RuleId.FN_INLINE)),
)


def staged_variants(tu: TranslationUnit, stages=STAGES) -> list:
    """One (unit, report) per stage, each building on the previous one.

    Every SAFE finding of the stage's rules is applied without the profit gate.
    NESTED_IF_MERGE stays out: on the heap fixture it would read one past the
    array end.
    """
    out = []
    cur = tu
    for _, rules in stages:
        cur, report = auto_plan(cur, rules, gate=False)
        out.append((cur, report))
    return out
