from __future__ import annotations

from dataclasses import dataclass

from ..errors import IllegalCharacter, UnterminatedComment, UnterminatedString
from .syntax import SourceSpan

KEYWORDS = frozenset("""
    auto break case char const continue default do double else enum extern
    float for goto if inline int long register return short signed sizeof
    static struct switch typedef union unsigned void volatile while
""".split())

# longest first so a plain scan gives maximal munch
PUNCTUATORS = sorted("""
    <<= >>= ... -> ++ -- && || <= >= == != += -= *= /= %= &= |= ^= << >> ##
    { } [ ] ( ) ; , < > + - * / % & | ^ ! ~ ? : = . #
""".split(), key=len, reverse=True)

_PUNCT_START = frozenset(p[0] for p in PUNCTUATORS)
_WHITESPACE = " \t\n\r\f\v"


@dataclass(frozen=True)
class Token:
    kind: str  # identifier, integer-literal, string-literal, char-literal, punctuator, keyword
    text: str
    span: SourceSpan

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r})"


class _Cursor:
    def __init__(self, source: str, filename: str):
        self.src = source
        self.file = filename
        self.pos = 0
        self.line = 1
        self.col = 1

    def peek(self, k: int = 0) -> str:
        i = self.pos + k
        return self.src[i] if i < len(self.src) else ""

    def advance(self, n: int = 1):
        for _ in range(n):
            if self.src[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def here(self):
        return self.line, self.col

    def point(self) -> SourceSpan:
        return SourceSpan(self.file, self.line, self.col, self.line, self.col)


def _scan_quoted(cur: _Cursor, quote: str, start) -> str:
    cur.advance()  # opening quote
    begin = cur.pos
    while True:
        ch = cur.peek()
        if ch == "" or ch == "\n":
            raise UnterminatedString(
                "unterminated " + ("string" if quote == '"' else "character") + " literal",
                SourceSpan(cur.file, start[0], start[1], start[0], start[1]))
        if ch == "\\" and cur.peek(1) not in ("", "\n"):
            cur.advance(2)
            continue
        if ch == quote:
            body = cur.src[begin:cur.pos]
            cur.advance()
            return body
        cur.advance()


def tokenize(source: str, filename: str = "<input>") -> list[Token]:
    """Split C source into tokens, dropping whitespace and comments."""
    cur = _Cursor(source, filename)
    out: list[Token] = []
    while cur.pos < len(cur.src):
        ch = cur.peek()
        if ch in _WHITESPACE:
            cur.advance()
            continue
        start = cur.here()
        if ch == "/" and cur.peek(1) == "*":
            end = cur.src.find("*/", cur.pos + 2)
            if end < 0:
                raise UnterminatedComment(
                    "unterminated comment",
                    SourceSpan(filename, start[0], start[1], start[0], start[1]))
            cur.advance(end + 2 - cur.pos)
            continue
        if ch == "/" and cur.peek(1) == "/":
            while cur.peek() not in ("", "\n"):
                cur.advance()
            continue
        if ch.isascii() and (ch.isalpha() or ch == "_"):
            b = cur.pos
            while cur.peek().isascii() and (cur.peek().isalnum() or cur.peek() == "_"):
                cur.advance()
            text = cur.src[b:cur.pos]
            kind = "keyword" if text in KEYWORDS else "identifier"
            out.append(Token(kind, text, _span(filename, start, cur)))
            continue
        if ch.isascii() and ch.isdigit():
            b = cur.pos
            while cur.peek().isascii() and cur.peek().isdigit():
                cur.advance()
            nxt = cur.peek()
            if nxt.isascii() and (nxt.isalpha() or nxt == "_"):
                raise IllegalCharacter(f"malformed integer literal near {nxt!r}", cur.point())
            out.append(Token("integer-literal", cur.src[b:cur.pos], _span(filename, start, cur)))
            continue
        if ch == '"' or ch == "'":
            body = _scan_quoted(cur, ch, start)
            kind = "string-literal" if ch == '"' else "char-literal"
            out.append(Token(kind, ch + body + ch, _span(filename, start, cur)))
            continue
        if ch in _PUNCT_START:
            for p in PUNCTUATORS:
                if cur.src.startswith(p, cur.pos):
                    cur.advance(len(p))
                    out.append(Token("punctuator", p, _span(filename, start, cur)))
                    break
            continue
        raise IllegalCharacter(f"illegal character {ch!r}", cur.point())
    return out


def _span(filename, start, cur: _Cursor) -> SourceSpan:
    # tokens never span lines (no escaped newlines in the subset)
    return SourceSpan(filename, start[0], start[1], cur.line, cur.col - 1)
