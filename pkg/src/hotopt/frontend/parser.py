"""Recursive-descent parser for the C subset, plus name resolution."""

from __future__ import annotations

from typing import Optional

from ..errors import CSyntaxError, UnresolvedIdentifier, UnsupportedConstruct
from .lexer import Token
from .syntax import (
    BUILTIN_FUNCTIONS, BUILTIN_NAMES, AddrOf, Assign, Binary, Block, Call, Cast,
    CharLit, CType, Deref, DoWhile, Empty, ExprStmt, For, FunctionDef, If,
    IncDec, Index, IntLit, MacroDef, Param, Prototype, Return, SizeOf,
    SourceSpan, StrLit, Ternary, TranslationUnit, Unary, Var, VarDecl, While,
    children, unescape,
)

# binding power of binary operators; higher binds tighter
BINARY_PRECEDENCE = {
    "||": 1, "&&": 2, "|": 3, "&": 5,
    "==": 6, "!=": 6, "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8, "+": 9, "-": 9, "*": 10, "/": 10, "%": 10,
}
ASSIGN_OPS = ("=", "+=", "-=", "*=", "/=")

_TYPE_WORDS = {"int", "char", "void", "unsigned", "static", "register"}
_AMBIENT_TYPEDEFS = {"time_t": "int"}
_UNSUPPORTED_WORDS = {
    "struct", "union", "enum", "typedef", "switch", "case", "default", "goto",
    "break", "continue", "float", "double", "long", "short", "signed", "const",
    "volatile", "extern", "auto", "inline",
}
_UNSUPPORTED_PUNCT = {"^", "->", ".", "...", "%=", "&=", "|=", "^=", "<<=", ">>=",
                      "#", "##", ","}


class Parser:
    def __init__(self, tokens: list[Token], filename: str = "<input>"):
        self.toks = tokens
        self.pos = 0
        self.filename = tokens[0].span.file if tokens else filename

    # -- token helpers -------------------------------------------------------

    def peek(self, k: int = 0) -> Optional[Token]:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t is not None and t.text == text and t.kind in ("punctuator", "keyword")

    def next(self) -> Token:
        t = self.peek()
        if t is None:
            raise CSyntaxError("unexpected end of input", self._eof_span())
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t is None or t.text != text or t.kind not in ("punctuator", "keyword"):
            self._fail(expected=(text,))
        return self.next()

    def _eof_span(self) -> SourceSpan:
        if self.toks:
            s = self.toks[-1].span
            return SourceSpan(s.file, s.line_end, s.col_end, s.line_end, s.col_end)
        return SourceSpan(self.filename, 1, 1, 1, 1)

    def _fail(self, expected=(), what=None):
        t = self.peek()
        if t is None:
            raise CSyntaxError("unexpected end of input", self._eof_span(), expected)
        if (t.kind == "keyword" and t.text in _UNSUPPORTED_WORDS) or (
                t.kind == "punctuator" and t.text in _UNSUPPORTED_PUNCT):
            raise UnsupportedConstruct(f"'{t.text}' is outside the supported C subset", t.span)
        raise CSyntaxError(what or f"unexpected token '{t.text}'", t.span, expected)

    def _fin(self, node, start: Token):
        node.span = start.span.to(self.toks[self.pos - 1].span)
        return node

    # -- types ---------------------------------------------------------------

    def at_type_start(self) -> bool:
        t = self.peek()
        if t is None:
            return False
        if t.kind == "keyword":
            if t.text in _UNSUPPORTED_WORDS and t.text not in (
                    "switch", "case", "default", "goto", "break", "continue"):
                raise UnsupportedConstruct(f"'{t.text}' is outside the supported C subset", t.span)
            return t.text in _TYPE_WORDS
        return t.kind == "identifier" and t.text in _AMBIENT_TYPEDEFS

    def parse_specifiers(self) -> tuple[CType, bool]:
        is_static = register = False
        base = None
        unsigned = False
        start = self.peek()
        while True:
            t = self.peek()
            if t is None:
                break
            if t.kind == "keyword" and t.text == "static":
                is_static = True
            elif t.kind == "keyword" and t.text == "register":
                register = True
            elif t.kind == "keyword" and t.text == "unsigned":
                unsigned = True
            elif t.kind == "keyword" and t.text in ("int", "char", "void"):
                if base is not None:
                    raise CSyntaxError("multiple base types", t.span)
                base = t.text
            elif t.kind == "identifier" and t.text in _AMBIENT_TYPEDEFS and base is None and not unsigned:
                base = _AMBIENT_TYPEDEFS[t.text]
            elif t.kind == "keyword" and t.text in _UNSUPPORTED_WORDS:
                raise UnsupportedConstruct(f"'{t.text}' is outside the supported C subset", t.span)
            else:
                break
            self.pos += 1
        if base is None and not unsigned:
            raise CSyntaxError("expected a type", start.span if start else self._eof_span(),
                               ("int", "char", "void", "unsigned"))
        if unsigned:
            if base not in (None, "int"):
                raise UnsupportedConstruct(f"'unsigned {base}' is outside the supported C subset",
                                           start.span)
            base = "unsigned-int"
        return CType(base, 0, register), is_static

    def parse_pointer(self, ctype: CType) -> CType:
        depth = 0
        while self.at("*"):
            t = self.next()
            depth += 1
            if depth > 2:
                raise UnsupportedConstruct("pointer depth above 2", t.span)
        return CType(ctype.base, depth, ctype.is_register_hint)

    def parse_type_name(self) -> CType:
        ctype, is_static = self.parse_specifiers()
        if is_static or ctype.is_register_hint:
            self._fail(what="storage class in type name")
        return self.parse_pointer(ctype)

    # -- top level -----------------------------------------------------------

    def parse_unit(self) -> TranslationUnit:
        globals_, functions, protos = [], [], []
        while self.peek() is not None:
            start = self.peek()
            if not self.at_type_start():
                self._fail(expected=("declaration",))
            spec, is_static = self.parse_specifiers()
            ctype = self.parse_pointer(spec)
            name_tok = self.peek()
            if name_tok is None or name_tok.kind != "identifier":
                self._fail(expected=("identifier",))
            self.next()
            if self.at("("):
                params = self.parse_params()
                if self.at(";"):
                    self.next()
                    protos.append(self._fin(Prototype(name_tok.text, ctype.plain(), params,
                                                      is_static), start))
                    continue
                body = self.parse_block()
                functions.append(self._fin(FunctionDef(name_tok.text, ctype.plain(), params,
                                                       body, is_static), start))
                continue
            globals_.extend(self.parse_declarators(spec, is_static, start, ctype, name_tok))
        return TranslationUnit(tuple(globals_), tuple(functions), tuple(protos),
                               filename=self.filename)

    def parse_params(self) -> tuple:
        self.expect("(")
        params = []
        if self.at(")"):
            self.next()
            return ()
        if self.at("void") and self.at(")", 1):
            self.next()
            self.next()
            return ()
        while True:
            spec, is_static = self.parse_specifiers()
            if is_static:
                self._fail(what="'static' on a parameter")
            ctype = self.parse_pointer(spec)
            t = self.peek()
            if t is None or t.kind != "identifier":
                self._fail(expected=("identifier",))
            self.next()
            if self.at("["):
                raise UnsupportedConstruct("array parameters are outside the supported C subset",
                                           self.peek().span)
            if any(p.name == t.text for p in params):
                raise CSyntaxError(f"duplicate parameter '{t.text}'", t.span)
            params.append(Param(t.text, ctype))
            if self.at(","):
                self.next()
                continue
            self.expect(")")
            return tuple(params)

    def parse_declarators(self, spec: CType, is_static: bool, start: Token,
                          ctype: CType = None, name_tok: Token = None) -> list[VarDecl]:
        """Parse ``a, *b = e, c[N]`` up to and including the ';'."""
        decls = []
        first = True
        while True:
            if not first or ctype is None:
                ctype = self.parse_pointer(spec)
                name_tok = self.peek()
                if name_tok is None or name_tok.kind != "identifier":
                    self._fail(expected=("identifier",))
                self.next()
            first = False
            dims = []
            while self.at("["):
                self.next()
                dims.append(self.parse_ternary())
                self.expect("]")
            init = None
            if self.at("="):
                self.next()
                if self.at("{"):
                    raise UnsupportedConstruct("brace initializers are outside the supported C subset",
                                               self.peek().span)
                init = self.parse_assignment()
            decl = VarDecl(name_tok.text, ctype, tuple(dims), init, is_static)
            decl.span = name_tok.span.to(self.toks[self.pos - 1].span)
            decls.append(decl)
            if self.at(","):
                self.next()
                continue
            self.expect(";")
            return decls

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> Block:
        start = self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.peek() is None:
                self._fail(expected=("}",))
            stmts.extend(self.parse_statement_or_decl())
        self.next()
        return self._fin(Block(tuple(stmts)), start)

    def parse_statement_or_decl(self) -> list:
        if self.at_type_start():
            start = self.peek()
            spec, is_static = self.parse_specifiers()
            return self.parse_declarators(spec, is_static, start)
        return [self.parse_statement()]

    def parse_statement(self):
        t = self.peek()
        if t is None:
            self._fail()
        if t.kind == "punctuator" and t.text == "{":
            return self.parse_block()
        if t.kind == "punctuator" and t.text == ";":
            self.next()
            return self._fin(Empty(), t)
        if t.kind == "keyword":
            w = t.text
            if w == "if":
                self.next()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                then = self.parse_substatement()
                other = None
                if self.at("else"):
                    self.next()
                    other = self.parse_substatement()
                return self._fin(If(cond, then, other), t)
            if w == "while":
                self.next()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                body = self.parse_substatement()
                return self._fin(While(cond, body), t)
            if w == "do":
                self.next()
                body = self.parse_substatement()
                self.expect("while")
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                self.expect(";")
                return self._fin(DoWhile(body, cond), t)
            if w == "for":
                self.next()
                self.expect("(")
                if self.at_type_start():
                    raise UnsupportedConstruct("declarations in a for-init are outside the subset",
                                               self.peek().span)
                init = None if self.at(";") else self.parse_expr()
                self.expect(";")
                cond = None if self.at(";") else self.parse_expr()
                self.expect(";")
                step = None if self.at(")") else self.parse_expr()
                self.expect(")")
                body = self.parse_substatement()
                return self._fin(For(init, cond, step, body), t)
            if w == "return":
                self.next()
                value = None if self.at(";") else self.parse_expr()
                self.expect(";")
                return self._fin(Return(value), t)
            if w == "else":
                self._fail(what="'else' without 'if'")
            if w in _UNSUPPORTED_WORDS:
                raise UnsupportedConstruct(f"'{w}' is outside the supported C subset", t.span)
        expr = self.parse_expr()
        self.expect(";")
        return self._fin(ExprStmt(expr), t)

    def parse_substatement(self):
        if self.at_type_start():
            self._fail(what="declaration is not a statement")
        return self.parse_statement()

    # -- expressions ---------------------------------------------------------

    def parse_expr(self):
        e = self.parse_assignment()
        if self.at(","):
            raise UnsupportedConstruct("the comma operator is outside the supported C subset",
                                       self.peek().span)
        return e

    def parse_assignment(self):
        start = self.peek()
        left = self.parse_ternary()
        t = self.peek()
        if t is not None and t.kind == "punctuator" and t.text in ASSIGN_OPS:
            if not isinstance(left, (Var, Index, Deref)):
                raise CSyntaxError("assignment target is not an lvalue", t.span)
            self.next()
            value = self.parse_assignment()
            return self._fin(Assign(t.text, left, value), start)
        if t is not None and t.kind == "punctuator" and t.text in ("%=", "&=", "|=", "^=", "<<=", ">>="):
            raise UnsupportedConstruct(f"'{t.text}' is outside the supported C subset", t.span)
        return left

    def parse_ternary(self):
        start = self.peek()
        cond = self.parse_binary(1)
        if self.at("?"):
            self.next()
            then = self.parse_expr()
            self.expect(":")
            other = self.parse_ternary()
            return self._fin(Ternary(cond, then, other), start)
        return cond

    def parse_binary(self, min_prec: int):
        start = self.peek()
        left = self.parse_unary()
        while True:
            t = self.peek()
            if t is None or t.kind != "punctuator":
                return left
            if t.text == "^":
                raise UnsupportedConstruct("'^' is outside the supported C subset", t.span)
            prec = BINARY_PRECEDENCE.get(t.text)
            if prec is None or prec < min_prec:
                return left
            self.next()
            right = self.parse_binary(prec + 1)
            left = self._fin(Binary(t.text, left, right), start)

    def _at_cast(self) -> bool:
        if not self.at("("):
            return False
        t = self.peek(1)
        if t is None:
            return False
        if t.kind == "keyword":
            return t.text in ("int", "char", "void", "unsigned") or t.text in _UNSUPPORTED_WORDS
        return t.kind == "identifier" and t.text in _AMBIENT_TYPEDEFS

    def parse_unary(self):
        t = self.peek()
        if t is None:
            self._fail()
        if t.kind == "punctuator":
            if t.text in ("++", "--"):
                self.next()
                target = self.parse_unary()
                self._require_lvalue(target, t)
                return self._fin(IncDec(t.text, True, target), t)
            if t.text in ("-", "+", "!", "~"):
                self.next()
                return self._fin(Unary(t.text, self.parse_unary()), t)
            if t.text == "*":
                self.next()
                return self._fin(Deref(self.parse_unary()), t)
            if t.text == "&":
                self.next()
                operand = self.parse_unary()
                self._require_lvalue(operand, t)
                return self._fin(AddrOf(operand), t)
            if self._at_cast():
                self.next()
                ctype = self.parse_type_name()
                self.expect(")")
                return self._fin(Cast(ctype, self.parse_unary()), t)
        if t.kind == "keyword" and t.text == "sizeof":
            self.next()
            if not self._at_cast():
                raise UnsupportedConstruct("sizeof is supported on type names only", t.span)
            self.next()
            ctype = self.parse_type_name()
            self.expect(")")
            return self._fin(SizeOf(ctype), t)
        return self.parse_postfix()

    def _require_lvalue(self, e, tok):
        if not isinstance(e, (Var, Index, Deref)):
            raise CSyntaxError(f"operand of '{tok.text}' is not an lvalue", tok.span)

    def parse_postfix(self):
        start = self.peek()
        e = self.parse_primary()
        while True:
            if self.at("["):
                self.next()
                idx = self.parse_expr()
                self.expect("]")
                e = self._fin(Index(e, idx), start)
            elif self.at("("):
                if not isinstance(e, Var):
                    raise UnsupportedConstruct("calls through expressions are outside the subset",
                                               self.peek().span)
                self.next()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_assignment())
                        if self.at(","):
                            self.next()
                            continue
                        break
                self.expect(")")
                e = self._fin(Call(e.name, tuple(args)), start)
            elif self.at("++") or self.at("--"):
                t = self.next()
                self._require_lvalue(e, t)
                e = self._fin(IncDec(t.text, False, e), start)
            else:
                return e

    def parse_primary(self):
        t = self.peek()
        if t is None:
            self._fail(expected=("expression",))
        if t.kind == "integer-literal":
            self.next()
            return self._fin(IntLit(int(t.text)), t)
        if t.kind == "char-literal":
            self.next()
            raw = t.text[1:-1]
            data = unescape(raw)
            if len(data) != 1:
                raise CSyntaxError("character literal must hold one character", t.span)
            return self._fin(CharLit(raw, data[0]), t)
        if t.kind == "string-literal":
            self.next()
            return self._fin(StrLit(t.text[1:-1]), t)
        if t.kind == "identifier":
            self.next()
            return self._fin(Var(t.text), t)
        if t.kind == "punctuator" and t.text == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return e
        self._fail(expected=("expression",))


# -- resolution --------------------------------------------------------------

def resolve(tu: TranslationUnit) -> TranslationUnit:
    """Check the unit's invariants: unique function names, every name bound."""
    seen = set()
    for fn in tu.functions:
        if fn.name in seen:
            raise CSyntaxError(f"duplicate definition of function '{fn.name}'", fn.span)
        seen.add(fn.name)
    callables = seen | {p.name for p in tu.prototypes} | BUILTIN_FUNCTIONS
    global_names = {g.name for g in tu.globals} | BUILTIN_NAMES
    for g in tu.globals:
        for sub in (g.init, *g.dims):
            if sub is not None:
                _resolve_node(sub, [global_names], callables)
    for fn in tu.functions:
        scopes = [global_names, {p.name for p in fn.params}]
        _resolve_node(fn.body, scopes, callables, new_scope=False)
    return tu


def _resolve_node(node, scopes, callables, new_scope=True):
    if isinstance(node, Block):
        if new_scope:
            scopes = scopes + [set()]
        for s in node.stmts:
            _resolve_node(s, scopes, callables)
        return
    if isinstance(node, VarDecl):
        for sub in (*node.dims, node.init):
            if sub is not None:
                _resolve_node(sub, scopes, callables)
        scopes[-1].add(node.name)
        return
    if isinstance(node, Var):
        if not any(node.name in s for s in scopes):
            raise UnresolvedIdentifier(node.name, node.span)
        return
    if isinstance(node, Call):
        if node.name in callables:
            if any(node.name in s for s in scopes[1:]):
                raise UnsupportedConstruct(f"call through local '{node.name}'", node.span)
        else:
            raise UnresolvedIdentifier(node.name, node.span)
    for c in children(node):
        _resolve_node(c, scopes, callables)


def parse(tokens: list[Token], filename: str = "<input>",
          macros: tuple[MacroDef, ...] = ()) -> TranslationUnit:
    tu = Parser(tokens, filename).parse_unit()
    tu.macros = tuple(macros)
    return resolve(tu)
