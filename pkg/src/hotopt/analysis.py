"""Detection of optimization opportunities and the analyses their safety gates use."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .frontend.printer import expr_text
from .frontend.syntax import (
    AddrOf, Assign, Binary, Block, BUILTIN_FUNCTIONS, Call, CharLit, COMPARISONS,
    CType, Deref, DoWhile, ExprStmt, For, FunctionDef, If, IncDec, Index, IntLit,
    LOGICAL, Node, Return, SourceSpan, TranslationUnit, Unary, Var, VarDecl, While,
    children, walk,
)

GLOBAL_SCOPE = "<global>"


class RuleId(str, Enum):
    LOOP_COUNTDOWN = "LOOP_COUNTDOWN"
    FN_INLINE = "FN_INLINE"
    GLOBAL_REG_ALIAS = "GLOBAL_REG_ALIAS"
    BITWISE_CONV = "BITWISE_CONV"
    NESTED_IF_MERGE = "NESTED_IF_MERGE"
    MEMSET_INIT = "MEMSET_INIT"
    UNSIGNED_PROMOTE = "UNSIGNED_PROMOTE"
    ADV_RECURSION = "ADV_RECURSION"
    ADV_MULTIDIM_ARRAY = "ADV_MULTIDIM_ARRAY"
    ADV_STATIC_LINKAGE = "ADV_STATIC_LINKAGE"
    ADV_TINY_FN_MACRO = "ADV_TINY_FN_MACRO"
    ADV_WORD_SIZE = "ADV_WORD_SIZE"

    def __str__(self):
        return self.value

    @property
    def rewritable(self) -> bool:
        return not self.value.startswith("ADV_")


ALL_RULES = tuple(RuleId)
REWRITABLE = tuple(r for r in RuleId if r.rewritable)
ADVISORY_RULES = tuple(r for r in RuleId if not r.rewritable)


class Safety(str, Enum):
    SAFE = "SAFE"
    UNSAFE_NEEDS_OVERRIDE = "UNSAFE_NEEDS_OVERRIDE"
    ADVISORY = "ADVISORY"

    def __str__(self):
        return self.value


@dataclass
class Finding:
    rule: RuleId
    span: SourceSpan
    function: str
    safety: Safety
    rationale: str
    payload: dict = field(default_factory=dict)

    @property
    def location(self) -> str:
        return self.span.location

    def sort_key(self):
        s = self.span
        return (s.file, s.line_start, s.col_start, ALL_RULES.index(self.rule),
                -s.line_end, -s.col_end, repr(sorted(self.payload.items(), key=lambda kv: kv[0])))


@dataclass(frozen=True)
class DetectConfig:
    stmt_budget: int = 3
    max_params: int = 2


DEFAULT_CONFIG = DetectConfig()


@dataclass(frozen=True)
class CanonicalLoop:
    var: str
    init: Node
    bound: Node
    dir: str  # "up" or "down"
    step1: bool
    var_written_in_body: bool
    bound_loop_invariant: bool
    inclusive: bool = True  # <= / >= rather than < / >


# -- expression predicates ---------------------------------------------------

def side_effect_free(e: Node, tu: Optional[TranslationUnit] = None) -> bool:
    """No assignment, increment/decrement or call anywhere in ``e``."""
    return not any(isinstance(n, (Assign, IncDec, Call)) for n in walk(e))


def is_boolean_valued(e: Node) -> bool:
    if isinstance(e, Binary):
        return e.op in COMPARISONS or e.op in LOGICAL
    return isinstance(e, Unary) and e.op == "!"


def may_fault(e: Node) -> bool:
    """True if evaluating ``e`` can trap: memory reads or division."""
    for n in walk(e):
        if isinstance(n, (Index, Deref)):
            return True
        if isinstance(n, Binary) and n.op in ("/", "%"):
            return True
    return False


def _is_zero(e) -> bool:
    return isinstance(e, (IntLit, CharLit)) and e.value == 0


def _lit(e) -> Optional[int]:
    if isinstance(e, (IntLit, CharLit)):
        return e.value
    if isinstance(e, Unary) and e.op == "-" and isinstance(e.operand, IntLit):
        return -e.operand.value
    return None


# -- effects and names --------------------------------------------------------

@dataclass
class Effects:
    """What a statement (or expression) may modify when executed."""

    vars: set = field(default_factory=set)  # names assigned directly
    memory: bool = False  # writes through an index or pointer
    user_calls: set = field(default_factory=set)
    builtin_calls: set = field(default_factory=set)

    @property
    def calls(self) -> bool:
        return bool(self.user_calls or self.builtin_calls)


def effects(node: Node) -> Effects:
    out = Effects()
    for n in walk(node):
        if isinstance(n, (Assign, IncDec)):
            t = n.target
            if isinstance(t, Var):
                out.vars.add(t.name)
            else:
                out.memory = True
        elif isinstance(n, Call):
            (out.builtin_calls if n.name in BUILTIN_FUNCTIONS else out.user_calls).add(n.name)
        elif isinstance(n, VarDecl):
            out.vars.add(n.name)
    return out


def var_names(e: Node) -> set:
    return {n.name for n in walk(e) if isinstance(n, Var)}


def invariant_under(e: Node, eff: Effects, global_names: set) -> bool:
    """``e`` evaluates to the same value before and after code with ``eff``."""
    if not side_effect_free(e):
        return False
    names = var_names(e)
    if names & eff.vars:
        return False
    if eff.user_calls and names & global_names:
        return False
    reads_memory = any(isinstance(n, (Index, Deref)) for n in walk(e))
    if reads_memory and (eff.memory or eff.calls):
        return False
    return True


def call_graph(tu: TranslationUnit) -> dict:
    defined = {fn.name for fn in tu.functions}
    return {fn.name: {n.name for n in walk(fn.body) if isinstance(n, Call) and n.name in defined}
            for fn in tu.functions}


def reachable(graph: dict, start: str) -> set:
    """Functions reachable from ``start`` through one or more calls."""
    seen: set = set()
    stack = list(graph.get(start, ()))
    while stack:
        f = stack.pop()
        if f in seen:
            continue
        seen.add(f)
        stack.extend(graph.get(f, ()))
    return seen


def recursive_functions(tu: TranslationUnit) -> set:
    g = call_graph(tu)
    return {f for f in g if f in reachable(g, f)}


def local_names(fn: FunctionDef) -> set:
    names = {p.name for p in fn.params}
    names |= {n.name for n in walk(fn.body) if isinstance(n, VarDecl)}
    return names


def _decls(fn: FunctionDef, name: str) -> list:
    out = [p for p in fn.params if p.name == name]
    out += [n for n in walk(fn.body) if isinstance(n, VarDecl) and n.name == name]
    return out


def address_taken(node: Node) -> set:
    return {n.operand.name for n in walk(node) if isinstance(n, AddrOf) and isinstance(n.operand, Var)}


def global_refs(fn: FunctionDef, tu: TranslationUnit) -> list:
    """Var nodes in ``fn`` that refer to globals (names shadowed anywhere in fn are skipped)."""
    gnames = {g.name for g in tu.globals}
    shadow = local_names(fn)
    return [n for n in walk(fn.body) if isinstance(n, Var) and n.name in gnames - shadow]


def _function_touches(tu: TranslationUnit, fname: str, gname: str) -> bool:
    fn = tu.function(fname)
    return fn is not None and any(v.name == gname for v in global_refs(fn, tu))


def _written_vars(fn: FunctionDef) -> dict:
    """Access count for Var nodes that are written: a plain ``g = e`` is one
    write, while ``g += e``, ``g++`` and ``g[i] = e`` both read and write."""
    out = {}
    for n in walk(fn.body):
        if isinstance(n, (Assign, IncDec)):
            t = n.target
            if isinstance(t, Var):
                out[id(t)] = 1 if isinstance(n, Assign) and n.op == "=" else 2
            elif isinstance(t, Index) and isinstance(t.base, Var):
                out[id(t.base)] = 2
    return out


def global_hot_uses(tu: TranslationUnit, fn: FunctionDef) -> list:
    """(global, use count, calls_in_region) for every global fn references, in first-use order."""
    counts: dict = {}
    written = _written_vars(fn)
    for v in global_refs(fn, tu):
        counts[v.name] = counts.get(v.name, 0) + written.get(id(v), 1)
    graph = call_graph(tu)
    callees = graph.get(fn.name, set())
    closure = set(callees)
    for c in callees:
        closure |= reachable(graph, c)
    out = []
    for g, n in counts.items():
        region = any(_function_touches(tu, c, g) for c in sorted(closure))
        out.append((g, n, region))
    return out


def _writes_global(fn: FunctionDef, g: str) -> bool:
    for n in walk(fn.body):
        if isinstance(n, (Assign, IncDec)) and isinstance(n.target, Var) and n.target.name == g:
            return True
    return False


def _pointer_access(fn: FunctionDef, tu: TranslationUnit) -> bool:
    """Any memory access that is not a direct index of a named array."""
    arrays = {g.name for g in tu.globals if g.dims}
    arrays |= {n.name for n in walk(fn.body) if isinstance(n, VarDecl) and n.dims}
    for n in walk(fn.body):
        if isinstance(n, Deref):
            return True
        if isinstance(n, Index) and not (isinstance(n.base, Var) and n.base.name in arrays):
            return True
        if isinstance(n, Call) and n.name in ("memset", "sprintf"):
            return True
    return False


# -- loops ---------------------------------------------------------------------

def _step_dir(step, v: str) -> Optional[str]:
    if isinstance(step, IncDec) and isinstance(step.target, Var) and step.target.name == v:
        return "up" if step.op == "++" else "down"
    if isinstance(step, Assign) and isinstance(step.target, Var) and step.target.name == v:
        if step.op in ("+=", "-=") and _lit(step.value) == 1:
            return "up" if step.op == "+=" else "down"
        val = step.value
        if (step.op == "=" and isinstance(val, Binary) and val.op in ("+", "-")
                and isinstance(val.left, Var) and val.left.name == v and _lit(val.right) == 1):
            return "up" if val.op == "+" else "down"
    return None


_UP = {"<": False, "<=": True}
_DOWN = {">": False, ">=": True, "!=": False}
_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "!=": "!="}


def loop_shape(s: Node, globals_: Iterable[str] = ()) -> Optional[CanonicalLoop]:
    """Recognize ``for (v = A; v <op> B; v++/v--)``; None for anything else."""
    if not isinstance(s, For) or s.init is None or s.cond is None or s.step is None:
        return None
    init = s.init
    if not (isinstance(init, Assign) and init.op == "=" and isinstance(init.target, Var)):
        return None
    v = init.target.name
    cond = s.cond
    if not (isinstance(cond, Binary) and cond.op in _FLIP):
        return None
    if isinstance(cond.left, Var) and cond.left.name == v:
        op, bound = cond.op, cond.right
    elif isinstance(cond.right, Var) and cond.right.name == v:
        op, bound = _FLIP[cond.op], cond.left
    else:
        return None
    direction = _step_dir(s.step, v)
    if direction is None:
        return None
    if direction == "up" and op not in _UP:
        return None
    if direction == "down" and op not in _DOWN:
        return None
    inclusive = _UP[op] if direction == "up" else _DOWN[op]
    eff = effects(s.body)
    written = v in eff.vars
    invariant = v not in var_names(bound) and invariant_under(bound, eff, set(globals_))
    return CanonicalLoop(v, init.value, bound, direction, True, written, invariant, inclusive)


def _dead_after(fn: FunctionDef, loop: For, v: str) -> bool:
    """Every use of ``v`` outside ``loop`` sits in another for loop that
    re-initializes ``v`` first, so the value ``loop`` leaves behind is never read."""
    inside = {id(n) for n in walk(loop)}
    covered: set = set()
    for n in walk(fn.body):
        if n is loop or not isinstance(n, For) or id(n) in inside:
            continue
        if any(m is loop for m in walk(n)):
            continue
        init = n.init
        if (isinstance(init, Assign) and init.op == "=" and isinstance(init.target, Var)
                and init.target.name == v and v not in var_names(init.value)):
            covered |= {id(m) for m in walk(n)}
    for n in walk(fn.body):
        if isinstance(n, Var) and n.name == v and id(n) not in inside and id(n) not in covered:
            return False
    return True


def _plain_local_int(fn: FunctionDef, v: str, signed_only: bool = True) -> bool:
    decls = _decls(fn, v)
    if len(decls) != 1 or v in address_taken(fn.body):
        return False
    d = decls[0]
    if isinstance(d, VarDecl) and (d.dims or d.is_static):
        return False
    t = d.ctype
    if t.pointer_depth:
        return False
    return t.base == "int" if signed_only else t.base in ("int", "unsigned-int")


# -- per-rule detectors ----------------------------------------------------------

def _literal_trip(shape: CanonicalLoop) -> bool:
    a, b = _lit(shape.init), _lit(shape.bound)
    return a is not None and b is not None and b - a + (1 if shape.inclusive else 0) >= 0


def _countdown(tu, fn, gnames):
    out = []
    for s in walk(fn.body):
        shape = loop_shape(s, gnames)
        if shape is None or shape.dir != "up":
            continue
        v = shape.var
        reasons = []
        if not _plain_local_int(fn, v, signed_only=False):
            reasons.append(f"{v} is not a plain int local")
        elif not _plain_local_int(fn, v) and not _literal_trip(shape):
            reasons.append(f"{v} is unsigned and the trip count is not a known constant")
        if shape.var_written_in_body:
            reasons.append(f"body writes {v}")
        if not shape.bound_loop_invariant:
            reasons.append("bound is not loop-invariant")
        eff = effects(s.body)
        if v in var_names(shape.init) or not invariant_under(shape.init, eff, gnames):
            reasons.append("start value is not loop-invariant")
        if not _dead_after(fn, s, v):
            reasons.append(f"{v} is read after the loop")
        bound_txt = expr_text(shape.bound)
        cmp = "<=" if shape.inclusive else "<"
        payload = {"var": v, "init": shape.init, "bound": shape.bound,
                   "inclusive": shape.inclusive, "node": "For"}
        if reasons:
            out.append(Finding(RuleId.LOOP_COUNTDOWN, s.span, fn.name, Safety.UNSAFE_NEEDS_OVERRIDE,
                               f"up-counting loop on {v} not convertible: " + "; ".join(reasons),
                               payload))
        else:
            out.append(Finding(RuleId.LOOP_COUNTDOWN, s.span, fn.name, Safety.SAFE,
                               f"loop {v} {cmp} {bound_txt} can count down to zero", payload))
    return out


def _stmt_count(s) -> int:
    """Non-declaration statements, counted recursively (blocks themselves are free)."""
    if isinstance(s, Block):
        return sum(_stmt_count(x) for x in s.stmts)
    if isinstance(s, VarDecl):
        return 0
    n = 1
    for c in children(s):
        if isinstance(c, (Block, If, While, DoWhile, For, ExprStmt, Return, VarDecl)):
            n += _stmt_count(c)
    return n


def tiny_function(fn: FunctionDef, config: DetectConfig = DEFAULT_CONFIG) -> bool:
    return _stmt_count(fn.body) <= config.stmt_budget and len(fn.params) <= config.max_params


def _early_return(fn: FunctionDef) -> bool:
    stmts = fn.body.stmts
    rets = [n for n in walk(fn.body) if isinstance(n, Return)]
    if not rets:
        return False
    if len(rets) == 1 and stmts and stmts[-1] is rets[0] and rets[0].value is None:
        return False
    return True


def _loop_stmts(fn: FunctionDef):
    """Expression statements lexically inside a loop of ``fn``."""
    out = []
    for s in walk(fn.body):
        if isinstance(s, (While, DoWhile, For)):
            out.extend(n for n in walk(s.body) if isinstance(n, ExprStmt))
    seen = set()
    uniq = []
    for n in out:
        if id(n) not in seen:
            seen.add(id(n))
            uniq.append(n)
    return uniq


def _inline(tu, fn, config, recursive):
    out = []
    for st in _loop_stmts(fn):
        call = st.expr
        if not isinstance(call, Call):
            continue
        callee = tu.function(call.name)
        if callee is None or callee.name in recursive:
            continue
        if not tiny_function(callee, config):
            continue
        if _early_return(callee):
            continue
        if any(isinstance(n, VarDecl) and n.is_static for n in walk(callee.body)):
            continue
        # globals the callee names must not be shadowed at the call site
        callee_globals = {v.name for v in global_refs(callee, tu)}
        if callee_globals & local_names(fn):
            continue
        out.append(Finding(RuleId.FN_INLINE, st.span, fn.name, Safety.SAFE,
                           f"call to tiny function {callee.name}() inside a loop can be inlined",
                           {"callee": callee.name, "node": "ExprStmt"}))
    return out


def _alias(tu, fn):
    out = []
    scalars = {g.name: g for g in tu.globals if not g.dims}
    taken = address_taken(tu)
    ptr_access = None
    # a register local copied from g means fn already uses the alias pattern
    aliased = {n.init.name for n in walk(fn.body)
               if isinstance(n, VarDecl) and n.ctype.is_register_hint and isinstance(n.init, Var)}
    for g, uses, region in global_hot_uses(tu, fn):
        if g not in scalars or uses < 2 or g in aliased:
            continue
        writes = _writes_global(fn, g)
        payload = {"global": g, "uses": uses, "writes": writes, "node": "FunctionDef"}
        if region:
            out.append(Finding(RuleId.GLOBAL_REG_ALIAS, fn.span, fn.name, Safety.UNSAFE_NEEDS_OVERRIDE,
                               f"global {g} used {uses} times but a called function also uses it",
                               payload))
            continue
        if g in taken:
            if ptr_access is None:
                ptr_access = _pointer_access(fn, tu)
            if ptr_access:
                out.append(Finding(RuleId.GLOBAL_REG_ALIAS, fn.span, fn.name,
                                   Safety.UNSAFE_NEEDS_OVERRIDE,
                                   f"global {g} has its address taken and {fn.name} accesses memory "
                                   "through pointers", payload))
                continue
        out.append(Finding(RuleId.GLOBAL_REG_ALIAS, fn.span, fn.name, Safety.SAFE,
                           f"global {g} used {uses} times can live in a register-hinted local",
                           payload))
    return out


def _operands_safe(left, right) -> Optional[str]:
    if not side_effect_free(left) or not side_effect_free(right):
        return "an operand has side effects"
    if may_fault(right):
        return "right operand reads memory or divides, so evaluating it unconditionally may fault"
    return None


def _bitwise(fn):
    out = []
    for n in walk(fn.body):
        if isinstance(n, Binary) and n.op in LOGICAL:
            why = _operands_safe(n.left, n.right)
            bop = "&" if n.op == "&&" else "|"
            payload = {"op": n.op, "node": "Binary"}
            if why:
                out.append(Finding(RuleId.BITWISE_CONV, n.span, fn.name, Safety.UNSAFE_NEEDS_OVERRIDE,
                                   f"'{n.op}' to '{bop}' not proven safe: {why}", payload))
            else:
                out.append(Finding(RuleId.BITWISE_CONV, n.span, fn.name, Safety.SAFE,
                                   f"'{n.op}' can become '{bop}' (both operands pure)", payload))
    return out


def _nested_if(fn):
    out = []
    for n in walk(fn.body):
        if isinstance(n, If) and n.other is None and isinstance(n.then, If) and n.then.other is None:
            why = _operands_safe(n.cond, n.then.cond)
            payload = {"node": "If"}
            if why:
                out.append(Finding(RuleId.NESTED_IF_MERGE, n.span, fn.name, Safety.UNSAFE_NEEDS_OVERRIDE,
                                   f"nested ifs not proven mergeable: {why}", payload))
            else:
                out.append(Finding(RuleId.NESTED_IF_MERGE, n.span, fn.name, Safety.SAFE,
                                   "nested ifs can merge into one test with '&'", payload))
    return out


def _arrays_in_scope(tu, fn) -> dict:
    arrays = {g.name: g for g in tu.globals if len(g.dims) == 1}
    for p in fn.params:
        arrays.pop(p.name, None)
    for n in walk(fn.body):
        if isinstance(n, VarDecl):
            if len(n.dims) == 1:
                arrays[n.name] = n
            else:
                arrays.pop(n.name, None)
    return arrays


def _memset(tu, fn, gnames):
    out = []
    arrays = _arrays_in_scope(tu, fn)
    for s in walk(fn.body):
        shape = loop_shape(s, gnames)
        if shape is None or shape.dir != "up":
            continue
        body = s.body
        if isinstance(body, Block) and len(body.stmts) == 1:
            body = body.stmts[0]
        if not isinstance(body, ExprStmt):
            continue
        a = body.expr
        if not (isinstance(a, Assign) and a.op == "=" and isinstance(a.target, Index)
                and isinstance(a.target.base, Var) and isinstance(a.target.index, Var)
                and a.target.index.name == shape.var and _is_zero(a.value)):
            continue
        name = a.target.base.name
        decl = arrays.get(name)
        if decl is None or decl.ctype.pointer_depth or decl.ctype.base not in ("int", "char"):
            continue
        if not _plain_local_int(fn, shape.var, signed_only=False):
            continue
        lo = _lit(shape.init)
        hi = _lit(shape.bound)
        payload = {"array": name, "var": shape.var, "elem": decl.ctype.base,
                   "lo": shape.init, "hi": shape.bound, "inclusive": shape.inclusive,
                   "live_after": not _dead_after(fn, s, shape.var), "node": "For"}
        if lo is None or hi is None:
            out.append(Finding(RuleId.MEMSET_INIT, s.span, fn.name, Safety.UNSAFE_NEEDS_OVERRIDE,
                               f"zero fill of {name} has non-constant bounds (a negative trip count "
                               "would become a negative memset size)", payload))
            continue
        end = hi + 1 if shape.inclusive else hi
        if lo < 0 or end < lo:
            continue
        out.append(Finding(RuleId.MEMSET_INIT, s.span, fn.name, Safety.SAFE,
                           f"loop zero-fills {name}[{lo}..{end - 1}]; memset can do it", payload))
    return out


def _nonneg_source(e, ok: set) -> bool:
    if _lit(e) is not None:
        return _lit(e) >= 0
    if isinstance(e, Call) and e.name == "rand":
        return True
    return isinstance(e, Var) and e.name in ok


def _unsigned(fn):
    """Conservative promotion: every definition keeps the variable non-negative
    and every read is in a context where signedness cannot matter."""
    cands = {}
    for d in walk(fn.body):
        if isinstance(d, VarDecl) and not d.is_static and _plain_local_int(fn, d.name):
            cands[d.name] = d
    ok = set(cands)
    changed = True
    while changed:
        changed = False
        for v in sorted(ok):
            if not _promotable(fn, v, cands[v], ok):
                ok.discard(v)
                changed = True
    return [Finding(RuleId.UNSIGNED_PROMOTE, cands[v].span, fn.name, Safety.SAFE,
                    f"{v} is never negative; unsigned int is the cheaper type",
                    {"var": v, "node": "VarDecl"})
            for v in sorted(ok, key=lambda n: (cands[n].span.line_start, cands[n].span.col_start))]


def _promotable(fn, v, decl, ok) -> bool:
    if decl.init is not None and not _nonneg_source(decl.init, ok):
        return False
    parents = {}
    for n in walk(fn.body):
        for c in children(n):
            parents[id(c)] = n
    for n in walk(fn.body):
        if isinstance(n, IncDec) and isinstance(n.target, Var) and n.target.name == v:
            if n.op == "--":
                return False
            if not isinstance(parents.get(id(n)), (ExprStmt, For)):
                return False
        elif isinstance(n, Assign) and isinstance(n.target, Var) and n.target.name == v:
            if n.op == "=":
                if not _nonneg_source(n.value, ok):
                    return False
            elif n.op == "+=":
                lit = _lit(n.value)
                if lit is None or lit < 0:
                    return False
            else:
                return False
            if not isinstance(parents.get(id(n)), (ExprStmt, For)):
                return False
        elif isinstance(n, Var) and n.name == v:
            p = parents.get(id(n))
            if not _neutral_use(n, p, ok):
                return False
    return True


def _neutral_use(var, parent, ok) -> bool:
    """A read whose result is identical for int and unsigned int when the value is non-negative."""
    if isinstance(parent, (Assign, IncDec)) and parent.target is var:
        return True
    if isinstance(parent, Assign) and parent.value is var:
        return parent.op != "/="
    if isinstance(parent, Index) and parent.index is var:
        return True
    if isinstance(parent, (If, While, DoWhile)) and parent.cond is var:
        return True
    if isinstance(parent, For) and parent.cond is var:
        return True
    if isinstance(parent, Unary) and parent.op == "!":
        return True
    if isinstance(parent, Binary):
        if parent.op in LOGICAL:
            return True
        if parent.op in COMPARISONS:
            other = parent.right if parent.left is var else parent.left
            return _nonneg_source(other, ok)
    if isinstance(parent, (ExprStmt, Call)):
        return True
    if isinstance(parent, VarDecl):
        return True
    return False


def _recursion(tu, recursive):
    return [Finding(RuleId.ADV_RECURSION, fn.span, fn.name, Safety.ADVISORY,
                    f"{fn.name}() is recursive; an iterative form avoids per-call overhead",
                    {"node": "FunctionDef"})
            for fn in tu.functions if fn.name in recursive]


def _multidim(tu):
    out = []
    for g in tu.globals:
        if len(g.dims) > 1:
            out.append(Finding(RuleId.ADV_MULTIDIM_ARRAY, g.span, GLOBAL_SCOPE, Safety.ADVISORY,
                               f"{g.name} has {len(g.dims)} dimensions; a flat array is faster",
                               {"var": g.name, "node": "VarDecl"}))
    for fn in tu.functions:
        for d in walk(fn.body):
            if isinstance(d, VarDecl) and len(d.dims) > 1:
                out.append(Finding(RuleId.ADV_MULTIDIM_ARRAY, d.span, fn.name, Safety.ADVISORY,
                                   f"{d.name} has {len(d.dims)} dimensions; a flat array is faster",
                                   {"var": d.name, "node": "VarDecl"}))
    return out


def _linkage(tu):
    out = []
    for g in tu.globals:
        if not g.is_static:
            out.append(Finding(RuleId.ADV_STATIC_LINKAGE, g.span, GLOBAL_SCOPE, Safety.ADVISORY,
                               f"file-scope {g.name} could be declared static",
                               {"var": g.name, "node": "VarDecl"}))
    for fn in tu.functions:
        if not fn.is_static and fn.name != "main":
            out.append(Finding(RuleId.ADV_STATIC_LINKAGE, fn.span, fn.name, Safety.ADVISORY,
                               f"function {fn.name}() could be declared static",
                               {"node": "FunctionDef"}))
    return out


def _tiny(tu, config):
    called = {n.name for fn in tu.functions for n in walk(fn.body) if isinstance(n, Call)}
    return [Finding(RuleId.ADV_TINY_FN_MACRO, fn.span, fn.name, Safety.ADVISORY,
                    f"{fn.name}() is tiny ({_stmt_count(fn.body)} statements); a macro avoids the call",
                    {"node": "FunctionDef"})
            for fn in tu.functions
            if fn.name != "main" and fn.name in called and tiny_function(fn, config)]


def _word_size(fn):
    return [Finding(RuleId.ADV_WORD_SIZE, d.span, fn.name, Safety.ADVISORY,
                    f"{d.name} is a char; a word-size int avoids narrowing",
                    {"var": d.name, "node": "VarDecl"})
            for d in walk(fn.body)
            if isinstance(d, VarDecl) and not d.dims and d.ctype == CType("char", 0, d.ctype.is_register_hint)]


def detect(tu: TranslationUnit, rules: Optional[Iterable[RuleId]] = None,
           config: DetectConfig = DEFAULT_CONFIG) -> list:
    """All findings for ``rules`` (default: every rule), ordered by position."""
    wanted = set(ALL_RULES if rules is None else (RuleId(r) for r in rules))
    gnames = {g.name for g in tu.globals}
    recursive = recursive_functions(tu)
    out: list = []
    for fn in tu.functions:
        if RuleId.LOOP_COUNTDOWN in wanted:
            out += _countdown(tu, fn, gnames)
        if RuleId.FN_INLINE in wanted:
            out += _inline(tu, fn, config, recursive)
        if RuleId.GLOBAL_REG_ALIAS in wanted:
            out += _alias(tu, fn)
        if RuleId.BITWISE_CONV in wanted:
            out += _bitwise(fn)
        if RuleId.NESTED_IF_MERGE in wanted:
            out += _nested_if(fn)
        if RuleId.MEMSET_INIT in wanted:
            out += _memset(tu, fn, gnames)
        if RuleId.UNSIGNED_PROMOTE in wanted:
            out += _unsigned(fn)
        if RuleId.ADV_WORD_SIZE in wanted:
            out += _word_size(fn)
    if RuleId.ADV_RECURSION in wanted:
        out += _recursion(tu, recursive)
    if RuleId.ADV_MULTIDIM_ARRAY in wanted:
        out += _multidim(tu)
    if RuleId.ADV_STATIC_LINKAGE in wanted:
        out += _linkage(tu)
    if RuleId.ADV_TINY_FN_MACRO in wanted:
        out += _tiny(tu, config)
    # synthesized code carries no span and is never a target
    out = [f for f in out if f.span is not None]
    out.sort(key=Finding.sort_key)
    return out


# -- rendering -----------------------------------------------------------------

TSV_COLUMNS = ("rule", "location", "function", "safety", "rationale")


def _clean(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ")


def render_tsv(findings: list, header: bool = True) -> str:
    lines = ["\t".join(TSV_COLUMNS)] if header else []
    for f in findings:
        lines.append("\t".join((str(f.rule), f.location, f.function, str(f.safety), _clean(f.rationale))))
    return "\n".join(lines) + ("\n" if lines else "")


def render_text(findings: list) -> str:
    if not findings:
        return "no findings\n"
    rows = [(str(f.rule), f.location, f.function, str(f.safety), _clean(f.rationale)) for f in findings]
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    out = []
    for r in rows:
        out.append("  ".join(r[i].ljust(widths[i]) for i in range(4)) + "  " + r[4])
    return "\n".join(out) + "\n"
