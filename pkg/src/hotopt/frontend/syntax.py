"""AST for the supported C subset.

Nodes are dataclasses whose ``span`` field is excluded from equality, so two
trees compare equal when they differ only in source positions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line_start: int
    col_start: int
    line_end: int
    col_end: int

    def __post_init__(self):
        if self.line_start > self.line_end or (
            self.line_start == self.line_end and self.col_start > self.col_end
        ):
            raise ValueError(f"inverted span {self!r}")

    def __str__(self):
        return f"{self.file}:{self.line_start}:{self.col_start}"

    @property
    def location(self) -> str:
        return f"{self.file}:{self.line_start}"

    def to(self, other: "SourceSpan") -> "SourceSpan":
        return SourceSpan(self.file, self.line_start, self.col_start,
                          other.line_end, other.col_end)


BASES = ("int", "unsigned-int", "char", "void")


@dataclass(frozen=True)
class CType:
    base: str = "int"
    pointer_depth: int = 0
    is_register_hint: bool = False

    def __post_init__(self):
        if self.base not in BASES:
            raise ValueError(f"unknown base type {self.base!r}")
        if not 0 <= self.pointer_depth <= 2:
            raise ValueError("pointer depth must be 0..2")

    def pointee(self) -> "CType":
        return CType(self.base, self.pointer_depth - 1)

    def plain(self) -> "CType":
        return CType(self.base, self.pointer_depth)

    def c_text(self) -> str:
        head = "register " if self.is_register_hint else ""
        base = "unsigned int" if self.base == "unsigned-int" else self.base
        if self.pointer_depth:
            return f"{head}{base} {'*' * self.pointer_depth}"
        return f"{head}{base}"


class Node:
    """Marker base; concrete nodes are dataclasses with a ``span`` field."""

    span: Optional[SourceSpan]


def _span():
    return field(default=None, compare=False, repr=False)


# -- expressions -------------------------------------------------------------

@dataclass
class IntLit(Node):
    value: int
    span: Optional[SourceSpan] = _span()


@dataclass
class StrLit(Node):
    text: str  # raw source text between the quotes, escapes intact
    span: Optional[SourceSpan] = _span()


@dataclass
class CharLit(Node):
    text: str  # raw source text between the quotes
    value: int
    span: Optional[SourceSpan] = _span()


@dataclass
class Var(Node):
    name: str
    span: Optional[SourceSpan] = _span()


@dataclass
class Unary(Node):
    op: str  # one of - + ! ~
    operand: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class Binary(Node):
    op: str
    left: Node
    right: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class Assign(Node):
    op: str  # = += -= *= /=
    target: Node
    value: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class IncDec(Node):
    op: str  # ++ or --
    prefix: bool
    target: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class Index(Node):
    base: Node
    index: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class Deref(Node):
    operand: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class AddrOf(Node):
    operand: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class Call(Node):
    name: str
    args: tuple
    span: Optional[SourceSpan] = _span()


@dataclass
class Ternary(Node):
    cond: Node
    then: Node
    other: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class Cast(Node):
    ctype: CType
    operand: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class SizeOf(Node):
    ctype: CType
    span: Optional[SourceSpan] = _span()


BINARY_OPS = ("+", "-", "*", "/", "%", "<", "<=", ">", ">=", "==", "!=",
              "&&", "||", "&", "|", "<<", ">>")
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=")
COMPARISONS = ("<", "<=", ">", ">=", "==", "!=")
LOGICAL = ("&&", "||")

# -- statements --------------------------------------------------------------


@dataclass
class ExprStmt(Node):
    expr: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class Empty(Node):
    span: Optional[SourceSpan] = _span()


@dataclass
class Block(Node):
    stmts: tuple
    span: Optional[SourceSpan] = _span()


@dataclass
class If(Node):
    cond: Node
    then: Node
    other: Optional[Node] = None
    span: Optional[SourceSpan] = _span()


@dataclass
class While(Node):
    cond: Node
    body: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class DoWhile(Node):
    body: Node
    cond: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class For(Node):
    init: Optional[Node]
    cond: Optional[Node]
    step: Optional[Node]
    body: Node
    span: Optional[SourceSpan] = _span()


@dataclass
class Return(Node):
    value: Optional[Node] = None
    span: Optional[SourceSpan] = _span()


@dataclass
class VarDecl(Node):
    name: str
    ctype: CType
    dims: tuple = ()  # array dimensions, each an expression
    init: Optional[Node] = None
    is_static: bool = False
    span: Optional[SourceSpan] = _span()


# -- top level ---------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    name: str
    ctype: CType


@dataclass
class FunctionDef(Node):
    name: str
    return_type: CType
    params: tuple
    body: Block
    is_static: bool = False
    span: Optional[SourceSpan] = _span()


@dataclass
class Prototype(Node):
    name: str
    return_type: CType
    params: tuple
    is_static: bool = False
    span: Optional[SourceSpan] = _span()


@dataclass(frozen=True)
class MacroDef:
    name: str
    params: Optional[tuple]  # None for object-like macros
    replacement: tuple  # token texts
    body: str = field(default="", compare=False)  # replacement as written


@dataclass
class TranslationUnit(Node):
    globals: tuple = ()
    functions: tuple = ()
    prototypes: tuple = ()
    macros: tuple = field(default=(), compare=False)
    filename: str = field(default="<input>", compare=False)
    span: Optional[SourceSpan] = _span()

    def function(self, name: str) -> Optional[FunctionDef]:
        for fn in self.functions:
            if fn.name == name:
                return fn
        return None

    def global_decl(self, name: str) -> Optional[VarDecl]:
        for g in self.globals:
            if g.name == name:
                return g
        return None


# -- traversal ---------------------------------------------------------------

def children(node: Node) -> Iterator[Node]:
    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        value = getattr(node, f.name)
        if isinstance(value, Node):
            yield value
        elif isinstance(value, tuple):
            for item in value:
                if isinstance(item, Node):
                    yield item


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(list(children(n))))


def map_children(node: Node, fn: Callable[[Node], Node]) -> Node:
    changes = {}
    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        value = getattr(node, f.name)
        if isinstance(value, Node):
            new = fn(value)
            if new is not value:
                changes[f.name] = new
        elif isinstance(value, tuple) and any(isinstance(v, Node) for v in value):
            new = tuple(fn(v) if isinstance(v, Node) else v for v in value)
            if any(a is not b for a, b in zip(new, value)):
                changes[f.name] = new
    return dataclasses.replace(node, **changes) if changes else node


def transform(node: Node, fn: Callable[[Node], Node]) -> Node:
    """Bottom-up rebuild: ``fn`` sees each node after its children."""
    return fn(map_children(node, lambda c: transform(c, fn)))


def is_lvalue(e: Node) -> bool:
    return isinstance(e, (Var, Index, Deref))


# Names provided by the ambient runtime instead of a header.
BUILTIN_FUNCTIONS = frozenset({
    "printf", "sprintf", "putchar", "fflush", "malloc", "free", "memset",
    "strlen", "rand", "srand", "time",
})
BUILTIN_NAMES = frozenset({"NULL", "stdout"})

_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39, '"': 34,
            "a": 7, "b": 8, "f": 12, "v": 11, "?": 63}


def unescape(raw: str) -> bytes:
    """Decode the escape sequences of a string/char literal body."""
    out = bytearray()
    i = 0
    while i < len(raw):
        ch = raw[i]
        if ch != "\\" or i + 1 >= len(raw):
            out.append(ord(ch) & 0xFF)
            i += 1
            continue
        nxt = raw[i + 1]
        if nxt == "x":
            j = i + 2
            while j < len(raw) and raw[j] in "0123456789abcdefABCDEF":
                j += 1
            out.append(int(raw[i + 2:j] or "0", 16) & 0xFF)
            i = j
        elif nxt in "01234567":
            j = i + 1
            while j < len(raw) and j < i + 4 and raw[j] in "01234567":
                j += 1
            out.append(int(raw[i + 1:j], 8) & 0xFF)
            i = j
        else:
            out.append(_ESCAPES.get(nxt, ord(nxt) & 0xFF))
            i += 2
    return bytes(out)
