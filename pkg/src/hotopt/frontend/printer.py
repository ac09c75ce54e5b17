"""Canonical pretty-printer: 4-space indent, one statement per line.

Nested binary operators are always parenthesized, so the output re-parses to
the same tree regardless of precedence subtleties.
"""

from __future__ import annotations

from .syntax import (
    AddrOf, Assign, Binary, Block, Call, Cast, CharLit, CType, Deref, DoWhile,
    Empty, ExprStmt, For, FunctionDef, If, IncDec, Index, IntLit, Node,
    Prototype, Return, SizeOf, StrLit, Ternary, TranslationUnit, Unary, Var,
    VarDecl, While,
)

INDENT = "    "

_ATOMS = (IntLit, CharLit, StrLit, Var, Index, Call, SizeOf)


def _is_postfix(e) -> bool:
    return isinstance(e, _ATOMS) or (isinstance(e, IncDec) and not e.prefix)


def _wrap(e) -> str:
    return f"({expr_text(e)})"


def _operand(e) -> str:
    """Operand of a unary/prefix operator."""
    return expr_text(e) if _is_postfix(e) else _wrap(e)


def expr_text(e: Node) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, CharLit):
        return f"'{e.text}'"
    if isinstance(e, StrLit):
        return f'"{e.text}"'
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Binary):
        sides = []
        for side in (e.left, e.right):
            if isinstance(side, (Binary, Ternary, Assign)):
                sides.append(_wrap(side))
            else:
                sides.append(expr_text(side))
        return f"{sides[0]} {e.op} {sides[1]}"
    if isinstance(e, Unary):
        return e.op + _operand(e.operand)
    if isinstance(e, Deref):
        return "*" + _operand(e.operand)
    if isinstance(e, AddrOf):
        return "&" + _operand(e.operand)
    if isinstance(e, IncDec):
        if e.prefix:
            return e.op + _operand(e.target)
        return _operand(e.target) + e.op
    if isinstance(e, Index):
        base = expr_text(e.base) if _is_postfix(e.base) else _wrap(e.base)
        return f"{base}[{expr_text(e.index)}]"
    if isinstance(e, Call):
        return f"{e.name}({', '.join(expr_text(a) for a in e.args)})"
    if isinstance(e, Assign):
        return f"{expr_text(e.target)} {e.op} {expr_text(e.value)}"
    if isinstance(e, Ternary):
        cond = _wrap(e.cond) if isinstance(e.cond, (Ternary, Assign)) else expr_text(e.cond)
        other = _wrap(e.other) if isinstance(e.other, Assign) else expr_text(e.other)
        return f"{cond} ? {expr_text(e.then)} : {other}"
    if isinstance(e, Cast):
        inner = _wrap(e.operand) if isinstance(e.operand, (Binary, Ternary, Assign)) else expr_text(e.operand)
        return f"({type_text(e.ctype)}){inner}"
    if isinstance(e, SizeOf):
        return f"sizeof({type_text(e.ctype)})"
    raise TypeError(f"not an expression: {e!r}")


def type_text(t: CType) -> str:
    return t.c_text()


def declarator_text(name: str, t: CType) -> str:
    head = t.c_text()
    return f"{head}{name}" if t.pointer_depth else f"{head} {name}"


def decl_text(d: VarDecl) -> str:
    text = ("static " if d.is_static else "") + declarator_text(d.name, d.ctype)
    text += "".join(f"[{expr_text(x)}]" for x in d.dims)
    if d.init is not None:
        text += f" = {expr_text(d.init)}"
    return text + ";"


def ends_open(s) -> bool:
    """True if an ``else`` written after ``s`` would bind to an if inside it."""
    if isinstance(s, If):
        return s.other is None or ends_open(s.other)
    if isinstance(s, (While, For)):
        return ends_open(s.body)
    return False


class _Printer:
    def stmt(self, s, ind: str) -> list[str]:
        if isinstance(s, Block):
            return [ind + "{"] + self.body_lines(s, ind) + [ind + "}"]
        if isinstance(s, ExprStmt):
            return [ind + expr_text(s.expr) + ";"]
        if isinstance(s, Empty):
            return [ind + ";"]
        if isinstance(s, VarDecl):
            return [ind + decl_text(s)]
        if isinstance(s, Return):
            return [ind + ("return;" if s.value is None else f"return {expr_text(s.value)};")]
        if isinstance(s, If):
            return self.if_lines(s, ind)
        if isinstance(s, While):
            return self.with_body(ind, f"while ({expr_text(s.cond)})", s.body)
        if isinstance(s, DoWhile):
            tail = f"while ({expr_text(s.cond)});"
            if isinstance(s.body, Block):
                return [ind + "do {"] + self.body_lines(s.body, ind) + [ind + "} " + tail]
            return [ind + "do"] + self.stmt(s.body, ind + INDENT) + [ind + tail]
        if isinstance(s, For):
            head = "for (" + (expr_text(s.init) if s.init is not None else "") + ";"
            if s.cond is not None:
                head += " " + expr_text(s.cond)
            head += ";"
            if s.step is not None:
                head += " " + expr_text(s.step)
            return self.with_body(ind, head + ")", s.body)
        raise TypeError(f"not a statement: {s!r}")

    def body_lines(self, block: Block, ind: str) -> list[str]:
        out = []
        for s in block.stmts:
            out.extend(self.stmt(s, ind + INDENT))
        return out

    def with_body(self, ind: str, header: str, body) -> list[str]:
        if isinstance(body, Block):
            return [f"{ind}{header} {{"] + self.body_lines(body, ind) + [ind + "}"]
        return [ind + header] + self.stmt(body, ind + INDENT)

    def if_lines(self, s: If, ind: str) -> list[str]:
        then = s.then
        if s.other is not None and ends_open(then):
            # braces keep the else attached to the outer if
            then = Block((then,))
        lines = self.with_body(ind, f"if ({expr_text(s.cond)})", then)
        if s.other is None:
            return lines
        if isinstance(then, Block):
            lead = lines.pop() + " else"
        else:
            lead = ind + "else"
        if isinstance(s.other, If):
            sub = self.if_lines(s.other, ind)
            return lines + [lead + " " + sub[0][len(ind):]] + sub[1:]
        if isinstance(s.other, Block):
            return lines + [lead + " {"] + self.body_lines(s.other, ind) + [ind + "}"]
        return lines + [lead] + self.stmt(s.other, ind + INDENT)

    def function(self, fn: FunctionDef) -> list[str]:
        return self.with_body("", signature_text(fn), fn.body)


def signature_text(fn) -> str:
    params = ", ".join(declarator_text(p.name, p.ctype) for p in fn.params)
    head = "static " if fn.is_static else ""
    ret = fn.return_type.c_text()
    sep = "" if fn.return_type.pointer_depth else " "
    return f"{head}{ret}{sep}{fn.name}({params})"


def pretty_print(tu: TranslationUnit) -> str:
    p = _Printer()
    sections = []
    if tu.globals:
        sections.append([decl_text(g) for g in tu.globals])
    if tu.prototypes:
        sections.append([signature_text(pr) + ";" for pr in tu.prototypes])
    for fn in tu.functions:
        sections.append(p.function(fn))
    if not sections:
        return ""
    return "\n\n".join("\n".join(sec) for sec in sections) + "\n"


def stmt_text(s: Node, indent: str = "") -> str:
    if isinstance(s, FunctionDef):
        return "\n".join(_Printer().function(s)) + "\n"
    if isinstance(s, Prototype):
        return signature_text(s) + ";\n"
    return "\n".join(_Printer().stmt(s, indent)) + "\n"


def node_text(n: Node) -> str:
    """Source text for any node: expressions inline, statements as lines."""
    try:
        return expr_text(n)
    except TypeError:
        return stmt_text(n).rstrip("\n")
