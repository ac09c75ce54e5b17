"""Closure-compiling interpreter for the C subset.

Each function body is compiled once per run into nested Python closures that
take the current frame (a list of slots).  Scalars whose address is never
taken live directly in frame slots; arrays, address-taken locals and globals
live in Segments.

Costs are not tallied operation by operation.  Every straight-line piece of
code becomes a *site* with a fixed per-category vector; executing it bumps a
hit counter, and the report multiplies hits by vectors at the end.  Parts of
an expression that may be skipped (the right side of ``&&``/``||``, the arms
of ``?:``) get sites of their own.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass, field
from typing import Optional

from ..errors import (
    DivisionByZero, InterpError, NullDeref, OutOfBounds, StackOverflow,
    StepLimitExceeded, UnknownEntry, UnsupportedConstruct,
)
from ..frontend.syntax import (
    AddrOf, Assign, Binary, Block, BUILTIN_FUNCTIONS, Call, Cast, CharLit, CType,
    Deref, DoWhile, Empty, ExprStmt, For, FunctionDef, If, IncDec, Index, IntLit,
    Return, SizeOf, StrLit, Ternary, TranslationUnit, Unary, Var, VarDecl, While,
    unescape, walk,
)
from .builtins import Runtime, check_arity
from .cost import (
    ARITH, BACKEDGE, BITWISE, BRANCH, BUILTIN, CALL, CATEGORIES, COMPARE,
    DEFAULT_COST_MODEL, DIVMOD, LOAD, LOGICAL, STORE, CostModel, CostReport,
)
from .memory import ESIZE, WRAP, Ptr, Segment, kind_of, load, store, u32, w64

NCAT = len(CATEGORIES)
_MIN = -(1 << 63)
_MAX = (1 << 63) - 1
INT = CType("int")
TICK = 4096


@dataclass
class RunConfig:
    seed: int = 42
    time_value: Optional[int] = None  # time() result; falls back to seed
    argv: tuple = ()
    step_limit: int = 50_000_000
    cost_model: CostModel = DEFAULT_COST_MODEL
    trace: bool = False
    max_depth: int = 1000


@dataclass
class ExecResult:
    stdout: bytes
    exit_code: int
    cost: CostReport
    steps: int
    trace: tuple = field(default=(), repr=False)


def _add(*vs) -> list:
    out = [0] * NCAT
    for v in vs:
        for i, n in enumerate(v):
            out[i] += n
    return out


def _one(cat: int) -> list:
    v = [0] * NCAT
    v[cat] = 1
    return v


def _zero() -> list:
    return [0] * NCAT


def sizeof(t: CType) -> int:
    if t.pointer_depth:
        return ESIZE["ptr"]
    return {"int": 4, "unsigned-int": 4, "char": 1, "void": 1}[t.base]


def _is_ptr(t: CType) -> bool:
    return t.pointer_depth > 0


def _unsigned(t: CType) -> bool:
    return t.base == "unsigned-int" and not t.pointer_depth


def _up(t: CType) -> CType:
    return CType(t.base, min(t.pointer_depth + 1, 2))


def _arith_type(lt: CType, rt: CType) -> CType:
    if _unsigned(lt) or _unsigned(rt):
        return CType("unsigned-int")
    return INT


@dataclass
class Binding:
    ctype: CType
    storage: str  # slot | aslot | global | array | const
    where: object = None  # slot index, Segment, Ptr, or constant value
    register: bool = False
    dims: tuple = ()

    @property
    def kind(self) -> str:
        return kind_of(self.ctype)


class CFunc:
    """A compiled user function; filled in after all signatures are known."""

    __slots__ = ("name", "defn", "nslots", "binders", "body", "ret_wrap")

    def __init__(self, defn: FunctionDef):
        self.name = defn.name
        self.defn = defn
        self.nslots = 0
        self.binders = ()
        self.body = None
        rt = defn.return_type
        self.ret_wrap = None if (rt.base == "void" and not rt.pointer_depth) else WRAP[kind_of(rt)]


def _truncdiv(a: int, b: int) -> int:
    q = a // b
    if q < 0 and q * b != a:
        q += 1
    return q


def _ptr_cmp(op, span):
    def f(a, b):
        if a.__class__ is Ptr and b.__class__ is Ptr:
            if op == "==":
                return a == b
            if op == "!=":
                return not a == b
            if a.seg is not b.seg:
                raise InterpError("relational comparison of pointers into different objects", span)
            x, y = a.off, b.off
        elif op in ("==", "!="):
            return (a == b) if op == "==" else not (a == b)
        elif a.__class__ is Ptr or b.__class__ is Ptr:
            raise InterpError("relational comparison of a pointer with an integer", span)
        else:
            x, y = a, b
        return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]
    return f


def binop_function(op: str, lt: CType, rt: CType, span):
    """Plain (l, r) -> value for a non-logical binary operator."""
    if op in ("+", "-") and (_is_ptr(lt) or _is_ptr(rt)):
        def padd(a, b):
            if op == "-" and a.__class__ is Ptr and b.__class__ is Ptr:
                if a.seg is not b.seg:
                    raise InterpError("difference of pointers into different objects", span)
                return (a.off - b.off) // a.step
            if a.__class__ is Ptr:
                return a.moved(b if op == "+" else -b)
            if b.__class__ is Ptr and op == "+":
                return b.moved(a)
            if a == 0 or b == 0:
                raise NullDeref("arithmetic on a null pointer", span)
            raise InterpError("unsupported pointer arithmetic", span)
        return padd
    if op in ("<", "<=", ">", ">=", "==", "!="):
        if _is_ptr(lt) or _is_ptr(rt):
            return _ptr_cmp(op, span)
        if _unsigned(lt) or _unsigned(rt):
            return {"<": lambda a, b: u32(a) < u32(b), "<=": lambda a, b: u32(a) <= u32(b),
                    ">": lambda a, b: u32(a) > u32(b), ">=": lambda a, b: u32(a) >= u32(b),
                    "==": lambda a, b: u32(a) == u32(b), "!=": lambda a, b: u32(a) != u32(b)}[op]
        return {"<": lambda a, b: a < b, "<=": lambda a, b: a <= b,
                ">": lambda a, b: a > b, ">=": lambda a, b: a >= b,
                "==": lambda a, b: a == b, "!=": lambda a, b: a != b}[op]
    unsigned = _unsigned(lt) or _unsigned(rt)
    if op in ("/", "%"):
        def div(a, b):
            if b == 0:
                raise DivisionByZero("division by zero", span)
            if unsigned:
                a, b = u32(a), u32(b)
                return a // b if op == "/" else a % b
            q = _truncdiv(a, b)
            return w64(q) if op == "/" else a - b * q
        return div
    base = {"+": lambda a, b: a + b, "-": lambda a, b: a - b, "*": lambda a, b: a * b,
            "&": lambda a, b: a & b, "|": lambda a, b: a | b,
            "<<": lambda a, b: a << b, ">>": lambda a, b: a >> b}[op]
    if op in ("<<", ">>"):
        def shift(a, b):
            if b < 0 or b >= 64:
                raise InterpError(f"shift count {b} out of range", span)
            v = base(u32(a) if unsigned else a, b)
            return u32(v) if unsigned else w64(v)
        return shift
    if unsigned:
        return lambda a, b: u32(base(a, b))
    if op in ("&", "|"):
        return base
    return lambda a, b: w64(base(a, b))


_OP_COST = {"+": ARITH, "-": ARITH, "*": ARITH, "/": DIVMOD, "%": DIVMOD,
            "&": BITWISE, "|": BITWISE, "<<": BITWISE, ">>": BITWISE,
            "<": COMPARE, "<=": COMPARE, ">": COMPARE, ">=": COMPARE,
            "==": COMPARE, "!=": COMPARE}


def _is_zero_lit(e) -> bool:
    return isinstance(e, IntLit) and e.value == 0


class Machine:
    """One program execution: globals, runtime state and compiled code."""

    def __init__(self, tu: TranslationUnit, config: RunConfig):
        self.tu = tu
        self.config = config
        tv = config.time_value if config.time_value is not None else config.seed
        self.rt = Runtime(config.seed, tv)
        self.sites: list = []  # (function, location, vector, counts_as_step)
        self.hits: list = []
        self.tick = [TICK]
        self.depth = [0]
        self.trace_lines: list = []
        self.globals: dict = {}
        self.funcs = {fn.name: CFunc(fn) for fn in tu.functions}
        self.fn_name = "<global>"
        self.loc = f"{tu.filename}:0"
        self._strings: dict = {}
        self._global_init()
        for cf in self.funcs.values():
            self._compile_function(cf)

    # -- sites ----------------------------------------------------------------

    def site(self, vec, step=False) -> int:
        self.sites.append((self.fn_name, self.loc, vec, step))
        self.hits.append(0)
        return len(self.hits) - 1

    def steps(self) -> int:
        h = self.hits
        return sum(h[k] for k, s in enumerate(self.sites) if s[3])

    def _check_limit(self):
        self.tick[0] = TICK
        if self.steps() > self.config.step_limit:
            raise StepLimitExceeded(f"step limit of {self.config.step_limit} exceeded")

    def total_cost(self) -> int:
        w = self.config.cost_model.vector()
        return sum(h * sum(a * b for a, b in zip(s[2], w))
                   for h, s in zip(self.hits, self.sites) if h)

    def report(self) -> CostReport:
        tallies: dict = {}
        for h, (fn, loc, vec, _) in zip(self.hits, self.sites):
            if not h or not any(vec):
                continue
            acc = tallies.setdefault((fn, loc), [0] * NCAT)
            for i, n in enumerate(vec):
                acc[i] += n * h
        return CostReport(self.config.cost_model, tallies)

    def _wrap_site(self, f, vec):
        """Run ``f`` under its own cost site (for conditionally executed code)."""
        if not any(vec):
            return f
        hits = self.hits
        k = self.site(vec)

        def g(fr):
            hits[k] += 1
            return f(fr)
        return g

    def _at(self, node):
        if node is not None and getattr(node, "span", None) is not None:
            self.loc = node.span.location

    # -- globals and scopes ---------------------------------------------------

    def _const(self, e) -> int:
        f, _, _ = self.expr(e, [{}])
        return f([])

    def _global_init(self):
        scope = {}
        self.scopes = [scope]
        for name in ("NULL", "stdout"):
            scope[name] = Binding(CType("void", 1), "const", 0)
        for g in self.tu.globals:
            self._at(g)
            b = self._static_binding(g, f"global {g.name}")
            scope[g.name] = b
            self.globals[g.name] = b
        # initializers are not charged
        self.sites.clear()
        self.hits.clear()

    def _static_binding(self, d: VarDecl, label: str) -> Binding:
        kind = kind_of(d.ctype)
        if d.dims:
            dims = tuple(self._const(x) for x in d.dims)
            n = 1
            for x in dims:
                n *= x
            seg = Segment(n, kind, label, sid=len(self.globals) + 1)
            base = Ptr(seg, 0, seg.esize, dims[1:])
            if d.init is not None:
                self._init_array(base, d, lambda e: self._const(e))
            return Binding(d.ctype, "array", base, dims=dims)
        seg = Segment(1, kind, label, sid=len(self.globals) + 1)
        if d.init is not None:
            f, _, _ = self.expr(d.init, [{}], hint=d.ctype)
            seg.cells[0] = WRAP[kind](f([]))
        return Binding(d.ctype, "global", seg)

    def _init_array(self, base: Ptr, d: VarDecl, evaluate):
        if isinstance(d.init, StrLit):
            data = unescape(d.init.text) + b"\0"
            if len(data) > base.seg.nbytes and len(data) - 1 > base.seg.nbytes:
                raise OutOfBounds(f"initializer too long for {d.name}", d.span)
            for i, byte in enumerate(data[:base.seg.nbytes]):
                store(Ptr(base.seg, i, 1), byte, d.span)
        else:
            raise UnsupportedConstruct("only string initializers are supported for arrays", d.span)

    def lookup(self, name: str, span) -> Binding:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        raise InterpError(f"unbound identifier {name!r}", span)

    # -- functions ------------------------------------------------------------

    def _compile_function(self, cf: CFunc):
        fn = cf.defn
        self.fn_name = fn.name
        self._at(fn)
        self.nslots = 0
        self.addr_taken = {n.operand.name for n in walk(fn.body)
                           if isinstance(n, AddrOf) and isinstance(n.operand, Var)}
        scope = {}
        self.scopes = [self.scopes[0], scope]
        binders = []
        for p in fn.params:
            b = self._local_binding(p.name, p.ctype)
            scope[p.name] = b
            binders.append((b.storage, b.where, WRAP[b.kind], b.kind))
        cf.binders = tuple(binders)
        cf.body = self.stmt(fn.body)
        cf.nslots = self.nslots
        self.scopes = [self.scopes[0]]

    def _local_binding(self, name: str, ctype: CType, dims=()) -> Binding:
        slot = self.nslots
        self.nslots += 1
        if dims:
            return Binding(ctype, "array", slot, dims=dims)
        storage = "aslot" if name in self.addr_taken else "slot"
        return Binding(ctype, storage, slot, register=ctype.is_register_hint)

    def invoke(self, cf: CFunc, args: list, span=None):
        if cf.body is None:
            raise InterpError(f"function {cf.name} has no body", span)
        depth = self.depth
        if depth[0] >= self.config.max_depth:
            raise StackOverflow(f"call depth exceeds {self.config.max_depth}", span)
        t = self.tick
        t[0] -= 1
        if not t[0]:
            self._check_limit()
        if len(args) != len(cf.binders):
            raise InterpError(f"{cf.name} expects {len(cf.binders)} argument(s), got {len(args)}", span)
        fr = [0] * cf.nslots
        for (storage, slot, wrap, kind), v in zip(cf.binders, args):
            if storage == "slot":
                fr[slot] = wrap(v)
            else:
                seg = Segment(1, kind, f"{cf.name}.param")
                seg.cells[0] = wrap(v)
                fr[slot] = Ptr(seg, 0, seg.esize)
        if self.config.trace:
            self.trace_lines.append(f"enter\t{cf.name}\t{self.total_cost()}")
        depth[0] += 1
        try:
            r = cf.body(fr)
        finally:
            depth[0] -= 1
        if self.config.trace:
            self.trace_lines.append(f"exit\t{cf.name}\t{self.total_cost()}")
        if r is None or cf.ret_wrap is None:
            return 0
        return cf.ret_wrap(r[0])

    # -- statements -----------------------------------------------------------

    def stmt(self, s):
        self._at(s)
        hits = self.hits
        if isinstance(s, Block):
            k = self.site(_zero(), step=True)
            self.scopes.append({})
            parts = [self.stmt(x) for x in s.stmts]
            self.scopes.pop()
            parts = tuple(parts)
            if len(parts) == 1:
                only = parts[0]

                def block1(fr):
                    hits[k] += 1
                    return only(fr)
                return block1

            def block(fr):
                hits[k] += 1
                for p in parts:
                    r = p(fr)
                    if r is not None:
                        return r
            return block
        if isinstance(s, ExprStmt):
            f, vec, _ = self.expr(s.expr)
            k = self.site(vec, step=True)

            def expr_stmt(fr):
                hits[k] += 1
                f(fr)
            return expr_stmt
        if isinstance(s, Empty):
            k = self.site(_zero(), step=True)

            def empty(fr):
                hits[k] += 1
            return empty
        if isinstance(s, VarDecl):
            return self._decl(s)
        if isinstance(s, Return):
            if s.value is None:
                k = self.site(_zero(), step=True)

                def ret0(fr):
                    hits[k] += 1
                    return (0,)
                return ret0
            f, vec, _ = self.expr(s.value)
            k = self.site(vec, step=True)

            def ret(fr):
                hits[k] += 1
                return (f(fr),)
            return ret
        if isinstance(s, If):
            c, vec, _ = self.expr(s.cond)
            k = self.site(_add(vec, _one(BRANCH)), step=True)
            then = self.stmt(s.then)
            if s.other is None:
                def if1(fr):
                    hits[k] += 1
                    if c(fr):
                        return then(fr)
                return if1
            other = self.stmt(s.other)

            def if2(fr):
                hits[k] += 1
                if c(fr):
                    return then(fr)
                return other(fr)
            return if2
        if isinstance(s, (While, For, DoWhile)):
            return self._loop(s)
        raise UnsupportedConstruct(f"cannot execute {type(s).__name__}", s.span)

    def _loop(self, s):
        hits = self.hits
        tick = self.tick
        check = self._check_limit
        init = None
        init_vec = _zero()
        if isinstance(s, For) and s.init is not None:
            init, init_vec, _ = self.expr(s.init)
        k_stmt = self.site(init_vec, step=True)
        if s.cond is not None:
            cond, cvec, _ = self.expr(s.cond)
            k_test = self.site(_add(cvec, _one(BRANCH)))
        else:
            cond, k_test = None, self.site(_zero())
        step_vec = _zero()
        step = None
        if isinstance(s, For) and s.step is not None:
            step, step_vec, _ = self.expr(s.step)
        k_back = self.site(_add(step_vec, _one(BACKEDGE)), step=True)
        body = self.stmt(s.body)
        if cond is None:
            cond = lambda fr: 1  # noqa: E731

        if isinstance(s, DoWhile):
            def do_loop(fr):
                hits[k_stmt] += 1
                while True:
                    r = body(fr)
                    if r is not None:
                        return r
                    hits[k_test] += 1
                    if not cond(fr):
                        return None
                    hits[k_back] += 1
                    tick[0] -= 1
                    if not tick[0]:
                        check()
            return do_loop

        if step is None:
            def loop(fr):
                hits[k_stmt] += 1
                if init is not None:
                    init(fr)
                while True:
                    hits[k_test] += 1
                    if not cond(fr):
                        return None
                    r = body(fr)
                    if r is not None:
                        return r
                    hits[k_back] += 1
                    tick[0] -= 1
                    if not tick[0]:
                        check()
            return loop

        def for_loop(fr):
            hits[k_stmt] += 1
            if init is not None:
                init(fr)
            while True:
                hits[k_test] += 1
                if not cond(fr):
                    return None
                r = body(fr)
                if r is not None:
                    return r
                hits[k_back] += 1
                step(fr)
                tick[0] -= 1
                if not tick[0]:
                    check()
        return for_loop

    def _decl(self, d: VarDecl):
        hits = self.hits
        scope = self.scopes[-1]
        if d.is_static:
            b = self._static_binding(d, f"{self.fn_name}.{d.name}")
            scope[d.name] = b
            k = self.site(_zero(), step=True)

            def static_decl(fr):
                hits[k] += 1
            return static_decl
        if d.dims:
            dimfs = [self.expr(x)[0] for x in d.dims]
            b = self._local_binding(d.name, d.ctype, dims=tuple(d.dims))
            kind = b.kind
            slot = b.where
            label = f"{self.fn_name}.{d.name}"
            init_vec = _one(STORE) if d.init is not None else _zero()
            k = self.site(init_vec, step=True)
            span = d.span
            init_array = self._init_array

            def array_decl(fr):
                hits[k] += 1
                dims = [f(fr) for f in dimfs]
                n = 1
                for x in dims:
                    if x <= 0:
                        raise OutOfBounds(f"array {d.name} declared with size {x}", span)
                    n *= x
                seg = Segment(n, kind, label)
                base = Ptr(seg, 0, seg.esize, tuple(dims[1:]))
                if d.init is not None:
                    init_array(base, d, None)
                fr[slot] = base
            scope[d.name] = b
            return array_decl
        b = self._local_binding(d.name, d.ctype)
        wrap = WRAP[b.kind]
        slot = b.where
        kind = b.kind
        if d.init is not None:
            f, vec, _ = self.expr(d.init, hint=d.ctype)
        else:
            f, vec = None, _zero()
        if d.init is not None and not b.register:
            vec = _add(vec, _one(STORE))
        scope[d.name] = b  # visible after its own initializer
        k = self.site(vec, step=True)
        if b.storage == "aslot":
            label = f"{self.fn_name}.{d.name}"

            def addr_decl(fr):
                hits[k] += 1
                seg = Segment(1, kind, label)
                if f is not None:
                    seg.cells[0] = wrap(f(fr))
                fr[slot] = Ptr(seg, 0, seg.esize)
            return addr_decl
        if f is None:
            def decl0(fr):
                hits[k] += 1
                fr[slot] = 0
            return decl0

        def decl(fr):
            hits[k] += 1
            fr[slot] = wrap(f(fr))
        return decl

    # -- expressions ----------------------------------------------------------

    def expr(self, e, scopes=None, hint: Optional[CType] = None):
        """Compile ``e`` to (closure, static cost vector, static type)."""
        if scopes is not None:
            saved = self.scopes
            self.scopes = [self.scopes[0]] + scopes if saved else scopes
            try:
                return self.expr(e, None, hint)
            finally:
                self.scopes = saved
        method = getattr(self, "_e_" + type(e).__name__, None)
        if method is None:
            raise UnsupportedConstruct(f"cannot evaluate {type(e).__name__}", e.span)
        return method(e, hint)

    def _e_IntLit(self, e, hint):
        v = e.value
        return (lambda fr: v), _zero(), INT

    def _e_CharLit(self, e, hint):
        v = e.value
        return (lambda fr: v), _zero(), INT

    def _e_SizeOf(self, e, hint):
        v = sizeof(e.ctype)
        return (lambda fr: v), _zero(), INT

    def _e_StrLit(self, e, hint):
        key = id(e)
        ptr = self._strings.get(key)
        if ptr is None:
            data = unescape(e.text) + b"\0"
            seg = Segment(len(data), "char", "string literal")
            seg.cells[:] = [((b + 0x80) & 0xFF) - 0x80 for b in data]
            ptr = Ptr(seg, 0, 1)
            self._strings[key] = (ptr, e)  # keep e alive so id() stays unique
        else:
            ptr = ptr[0]
        return (lambda fr: ptr), _zero(), CType("char", 1)

    def _e_Var(self, e, hint):
        b = self.lookup(e.name, e.span)
        st = b.storage
        w = b.where
        if st == "const":
            return (lambda fr: w), _zero(), b.ctype
        if st == "array":
            t = _up(b.ctype)
            if isinstance(w, Ptr):
                return (lambda fr: w), _zero(), t
            return (lambda fr: fr[w]), _zero(), t
        vec = _zero() if b.register else _one(LOAD)
        if st == "slot":
            return (lambda fr: fr[w]), vec, b.ctype
        if st == "aslot":
            return (lambda fr: fr[w].seg.cells[0]), vec, b.ctype
        cells = w.cells
        return (lambda fr: cells[0]), vec, b.ctype

    def _e_Unary(self, e, hint):
        f, vec, t = self.expr(e.operand)
        if e.op == "!":
            return (lambda fr: not f(fr)), vec, INT
        if e.op == "+":
            return f, vec, t
        if _is_ptr(t):
            raise InterpError(f"unary {e.op} applied to a pointer", e.span)
        uns = _unsigned(t)
        if e.op == "-":
            vec = _add(vec, _one(ARITH))
            if uns:
                return (lambda fr: u32(-f(fr))), vec, t
            return (lambda fr: w64(-f(fr))), vec, INT
        vec = _add(vec, _one(BITWISE))
        if uns:
            return (lambda fr: u32(~f(fr))), vec, t
        return (lambda fr: ~f(fr)), vec, INT

    def _e_Binary(self, e, hint):
        op = e.op
        l, lv, lt = self.expr(e.left)
        r, rv, rt = self.expr(e.right)
        if op in ("&&", "||"):
            rr = self._wrap_site(r, rv)
            vec = _add(lv, _one(LOGICAL))
            if op == "&&":
                return (lambda fr: 1 if (l(fr) and rr(fr)) else 0), vec, INT
            return (lambda fr: 1 if (l(fr) or rr(fr)) else 0), vec, INT
        vec = _add(lv, rv)
        cat = _OP_COST[op]
        if not (cat == COMPARE and (_is_zero_lit(e.left) or _is_zero_lit(e.right))):
            vec[cat] += 1
        if op in ("<", "<=", ">", ">=", "==", "!="):
            rtype = INT
        elif op in ("+", "-") and (_is_ptr(lt) or _is_ptr(rt)):
            rtype = INT if (_is_ptr(lt) and _is_ptr(rt)) else (lt if _is_ptr(lt) else rt)
        else:
            rtype = _arith_type(lt, rt)
        fast = not (_is_ptr(lt) or _is_ptr(rt) or _unsigned(lt) or _unsigned(rt))
        if fast:
            g = _fast_binary(op, l, r, e)
            if g is not None:
                return g, vec, rtype
        fn = binop_function(op, lt, rt, e.span)
        return (lambda fr: fn(l(fr), r(fr))), vec, rtype

    def _e_Ternary(self, e, hint):
        c, cv, _ = self.expr(e.cond)
        a, av, at = self.expr(e.then, hint=hint)
        b, bv, _ = self.expr(e.other, hint=hint)
        a = self._wrap_site(a, av)
        b = self._wrap_site(b, bv)
        return (lambda fr: a(fr) if c(fr) else b(fr)), _add(cv, _one(BRANCH)), at

    def _e_Cast(self, e, hint):
        t = e.ctype
        f, vec, _ = self.expr(e.operand, hint=t)
        span = e.span
        if _is_ptr(t):
            es = sizeof(t.pointee()) if t.pointee().pointer_depth or t.base != "void" else 1

            def to_ptr(fr):
                v = f(fr)
                if v.__class__ is Ptr:
                    return v if v.esize == es and not v.inner else Ptr(v.seg, v.off, es)
                if v == 0:
                    return 0
                raise InterpError("integer to pointer cast", span)
            return to_ptr, vec, t
        if t.base == "void":
            return f, vec, t
        wrap = WRAP[kind_of(t)]

        def to_int(fr):
            v = f(fr)
            if v.__class__ is Ptr:
                raise InterpError("pointer to integer cast", span)
            return wrap(v)
        return to_int, vec, CType(t.base)

    # lvalues -------------------------------------------------------------------

    def _lvalue(self, e):
        """(kind, data, address-cost vector, ctype, register)."""
        if isinstance(e, Var):
            b = self.lookup(e.name, e.span)
            if b.storage in ("array", "const"):
                raise InterpError(f"{e.name} is not assignable", e.span)
            return b.storage, b.where, _zero(), b.ctype, b.register
        if isinstance(e, Index):
            base, bv, bt = self.expr(e.base)
            idx, iv, _ = self.expr(e.index)
            span = e.span

            def addr(fr):
                p = base(fr)
                if p.__class__ is not Ptr:
                    raise NullDeref("indexing a null pointer", span)
                return p.moved(idx(fr))
            return "mem", addr, _add(bv, iv), bt.pointee() if bt.pointer_depth else INT, False
        if isinstance(e, Deref):
            f, vec, t = self.expr(e.operand)
            return "mem", f, vec, t.pointee() if t.pointer_depth else INT, False
        raise InterpError("expression is not assignable", e.span)

    def _e_Index(self, e, hint):
        span = e.span
        # direct path for a named one-dimensional array
        if isinstance(e.base, Var):
            b = self.lookup(e.base.name, e.base.span)
            if b.storage == "array" and len(b.dims) == 1:
                idx, iv, _ = self.expr(e.index)
                vec = _add(iv, _one(LOAD))
                if isinstance(b.where, Ptr):
                    seg = b.where.seg
                    cells = seg.cells
                    n = len(cells)

                    def gload(fr):
                        i = idx(fr)
                        if 0 <= i < n:
                            return cells[i]
                        raise OutOfBounds(f"read of {seg!r} at index {i}", span)
                    return gload, vec, b.ctype
                slot = b.where

                def lload(fr):
                    i = idx(fr)
                    cells = fr[slot].seg.cells
                    if 0 <= i < len(cells):
                        return cells[i]
                    raise OutOfBounds(f"read of {fr[slot].seg!r} at index {i}", span)
                return lload, vec, b.ctype
        base, bv, bt = self.expr(e.base)
        idx, iv, _ = self.expr(e.index)
        vec = _add(bv, iv, _one(LOAD))
        t = bt.pointee() if bt.pointer_depth else INT

        def iload(fr):
            p = base(fr)
            if p.__class__ is not Ptr:
                raise NullDeref("indexing a null pointer", span)
            q = p.moved(idx(fr))
            if q.inner:
                return q if 0 <= q.off < q.seg.nbytes else _oob(q, span)
            return load(q, span)
        return iload, vec, t

    def _e_Deref(self, e, hint):
        f, vec, t = self.expr(e.operand)
        span = e.span
        return (lambda fr: load(f(fr), span)), _add(vec, _one(LOAD)), (
            t.pointee() if t.pointer_depth else INT)

    def _e_AddrOf(self, e, hint):
        o = e.operand
        if isinstance(o, Var):
            b = self.lookup(o.name, o.span)
            if b.storage == "aslot":
                w = b.where
                return (lambda fr: fr[w]), _zero(), _up(b.ctype)
            if b.storage == "global":
                p = Ptr(b.where, 0, b.where.esize)
                return (lambda fr: p), _zero(), _up(b.ctype)
            if b.storage == "array":
                return self._e_Var(o, hint)
            raise InterpError(f"cannot take the address of {o.name}", e.span)
        if isinstance(o, Index):
            _, addr, vec, t, _ = self._lvalue(o)
            return addr, vec, _up(t)
        if isinstance(o, Deref):
            f, vec, t = self.expr(o.operand)
            return f, vec, t
        raise InterpError("cannot take this address", e.span)

    def _e_Assign(self, e, hint):
        kind, data, avec, t, reg = self._lvalue(e.target)
        f, vec, vt = self.expr(e.value, hint=t)
        vec = _add(vec, avec)
        span = e.span
        wrap = WRAP[kind_of(t)]
        compound = e.op != "="
        if compound:
            op = e.op[0]
            fn = binop_function(op, t, vt, span)
            if not reg:
                vec[LOAD] += 1
            vec[_OP_COST[op]] += 1
        if not reg:
            vec[STORE] += 1
        if kind == "slot":
            s = data
            if compound:
                def slot_op(fr):
                    v = wrap(fn(fr[s], f(fr)))
                    fr[s] = v
                    return v
                return slot_op, vec, t

            def slot_set(fr):
                v = wrap(f(fr))
                fr[s] = v
                return v
            return slot_set, vec, t
        if kind in ("aslot", "global"):
            get_cells = (lambda fr: fr[data].seg.cells) if kind == "aslot" else (lambda fr, c=data.cells: c)

            def cell_set(fr):
                cells = get_cells(fr)
                v = wrap(fn(cells[0], f(fr))) if compound else wrap(f(fr))
                cells[0] = v
                return v
            return cell_set, vec, t
        addr = data
        if compound:
            def mem_op(fr):
                p = addr(fr)
                return store(p, fn(load(p, span), f(fr)), span)
            return mem_op, vec, t

        # a[i] = v on a named one-dimensional array
        if isinstance(e.target, Index) and isinstance(e.target.base, Var):
            b = self.lookup(e.target.base.name, e.target.base.span)
            if b.storage == "array" and len(b.dims) == 1:
                idx = self.expr(e.target.index)[0]
                ew = WRAP[b.kind]
                if isinstance(b.where, Ptr):
                    seg = b.where.seg
                    cells = seg.cells
                    n = len(cells)

                    def gstore(fr):
                        i = idx(fr)
                        v = ew(f(fr))
                        if 0 <= i < n:
                            cells[i] = v
                            return v
                        raise OutOfBounds(f"write of {seg!r} at index {i}", span)
                    return gstore, vec, t

        def mem_set(fr):
            p = addr(fr)
            return store(p, f(fr), span)
        return mem_set, vec, t

    def _e_IncDec(self, e, hint):
        kind, data, avec, t, reg = self._lvalue(e.target)
        span = e.span
        d = 1 if e.op == "++" else -1
        vec = _add(avec, _one(ARITH))
        if not reg:
            vec[LOAD] += 1
            vec[STORE] += 1
        wrap = WRAP[kind_of(t)]
        if _is_ptr(t):
            def bump(v):
                if v.__class__ is not Ptr:
                    raise NullDeref("arithmetic on a null pointer", span)
                return v.moved(d)
        else:
            def bump(v):
                return wrap(v + d)
        prefix = e.prefix
        if kind == "slot" and not _is_ptr(t):
            s = data
            if prefix:
                def pre(fr):
                    v = wrap(fr[s] + d)
                    fr[s] = v
                    return v
                return pre, vec, t

            def post(fr):
                v = fr[s]
                fr[s] = wrap(v + d)
                return v
            return post, vec, t
        if kind == "slot":
            s = data

            def slot_any(fr):
                old = fr[s]
                fr[s] = new = bump(old)
                return new if prefix else old
            return slot_any, vec, t
        if kind in ("aslot", "global"):
            get_cells = (lambda fr: fr[data].seg.cells) if kind == "aslot" else (lambda fr, c=data.cells: c)

            def cell_any(fr):
                cells = get_cells(fr)
                old = cells[0]
                cells[0] = new = bump(old)
                return new if prefix else old
            return cell_any, vec, t
        addr = data

        def mem_any(fr):
            p = addr(fr)
            old = load(p, span)
            new = store(p, bump(old), span)
            return new if prefix else old
        return mem_any, vec, t

    def _e_Call(self, e, hint):
        span = e.span
        compiled = [self.expr(a) for a in e.args]
        argfs = tuple(c[0] for c in compiled)
        vec = _add(*[c[1] for c in compiled]) if compiled else _zero()
        if e.name in self.funcs:
            cf = self.funcs[e.name]
            vec[CALL] += 1
            vec[STORE] += sum(1 for p in cf.defn.params if not p.ctype.is_register_hint)
            invoke = self.invoke
            rt = cf.defn.return_type
            if len(argfs) == 0:
                return (lambda fr: invoke(cf, [], span)), vec, rt
            return (lambda fr: invoke(cf, [a(fr) for a in argfs], span)), vec, rt
        if e.name in BUILTIN_FUNCTIONS:
            check_arity(e.name, len(argfs), span)
            vec[BUILTIN] += 1
            impl = getattr(self.rt, e.name)
            mhint = None
            if e.name == "malloc" and hint is not None and hint.pointer_depth:
                mhint = kind_of(hint.pointee()) if hint.pointee().base != "void" or hint.pointer_depth > 1 else None
            rtype = CType("void", 1) if e.name in ("malloc", "memset") else INT
            return (lambda fr: impl([a(fr) for a in argfs], mhint, span)), vec, rtype
        # declared but never defined
        name = e.name
        rtype = INT
        for p in self.tu.prototypes:
            if p.name == name:
                rtype = p.return_type

        def missing(fr):
            raise InterpError(f"call of undefined function {name}", span)
        return missing, vec, rtype


def _oob(q, span):
    raise OutOfBounds(f"row access outside {q.seg!r}", span)


def _fast_binary(op, l, r, e):
    """Specialized closures for int-typed operands."""
    span = e.span
    lit = e.right.value if isinstance(e.right, IntLit) else None
    if op == "+":
        if lit is not None:
            def add_k(fr):
                v = l(fr) + lit
                return v if _MIN <= v <= _MAX else w64(v)
            return add_k

        def add(fr):
            v = l(fr) + r(fr)
            return v if _MIN <= v <= _MAX else w64(v)
        return add
    if op == "-":
        if lit is not None:
            def sub_k(fr):
                v = l(fr) - lit
                return v if _MIN <= v <= _MAX else w64(v)
            return sub_k

        def sub(fr):
            v = l(fr) - r(fr)
            return v if _MIN <= v <= _MAX else w64(v)
        return sub
    if op == "*":
        def mul(fr):
            v = l(fr) * r(fr)
            return v if _MIN <= v <= _MAX else w64(v)
        return mul
    if op in ("/", "%"):
        div = op == "/"

        def divmod_(fr):
            a = l(fr)
            b = r(fr)
            if b == 0:
                raise DivisionByZero("division by zero", span)
            if a >= 0 and b > 0:
                return a // b if div else a % b
            q = _truncdiv(a, b)
            return w64(q) if div else a - b * q
        return divmod_
    if lit is not None:
        if op == "<":
            return lambda fr: l(fr) < lit
        if op == "<=":
            return lambda fr: l(fr) <= lit
        if op == ">":
            return lambda fr: l(fr) > lit
        if op == ">=":
            return lambda fr: l(fr) >= lit
        if op == "==":
            return lambda fr: l(fr) == lit
        if op == "!=":
            return lambda fr: l(fr) != lit
    table = {
        "<": lambda fr: l(fr) < r(fr), "<=": lambda fr: l(fr) <= r(fr),
        ">": lambda fr: l(fr) > r(fr), ">=": lambda fr: l(fr) >= r(fr),
        "==": lambda fr: l(fr) == r(fr), "!=": lambda fr: l(fr) != r(fr),
        "&": lambda fr: l(fr) & r(fr), "|": lambda fr: l(fr) | r(fr),
    }
    return table.get(op)


def _build_argv(argv) -> tuple:
    strs = []
    for a in argv:
        data = a.encode() + b"\0"
        seg = Segment(len(data), "char", "argv string")
        seg.cells[:] = [((b + 0x80) & 0xFF) - 0x80 for b in data]
        strs.append(Ptr(seg, 0, 1))
    table = Segment(len(strs) + 1, "ptr", "argv")
    table.cells[:len(strs)] = strs
    return len(strs), Ptr(table, 0, 8)


_STACK_BYTES = 512 * 1024 * 1024
_stack_lock = threading.Lock()


def _in_big_stack(fn):
    """Run ``fn`` on a thread with a large C stack so deep C recursion fits."""
    box = {}

    def target():
        try:
            box["value"] = fn()
        except BaseException as exc:  # re-raised in the caller
            box["error"] = exc

    with _stack_lock:
        old = threading.stack_size()
        threading.stack_size(_STACK_BYTES)
        try:
            t = threading.Thread(target=target, name="hotopt-interp")
            t.start()
        finally:
            threading.stack_size(old)
    t.join()
    if "error" in box:
        raise box["error"]
    return box["value"]


def run(tu: TranslationUnit, entry: str = "main", config: Optional[RunConfig] = None) -> ExecResult:
    """Execute ``entry`` in ``tu`` and return its output, exit code and cost."""
    config = config or RunConfig()
    fn = tu.function(entry)
    if fn is None:
        raise UnknownEntry(f"no function named {entry!r}")
    if sys.getrecursionlimit() < 200_000:
        sys.setrecursionlimit(200_000)

    def go():
        m = Machine(tu, config)
        argc, argv = _build_argv(config.argv)
        args = [argc, argv][:len(fn.params)] + [0] * max(0, len(fn.params) - 2)
        code = m.invoke(m.funcs[entry], args, fn.span)
        steps = m.steps()
        if steps > config.step_limit:
            raise StepLimitExceeded(f"step limit of {config.step_limit} exceeded")
        if code.__class__ is Ptr:
            code = 0
        return ExecResult(bytes(m.rt.stdout), int(code), m.report(), steps, tuple(m.trace_lines))

    return _in_big_stack(go)
