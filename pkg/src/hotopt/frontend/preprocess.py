"""Minimal line-oriented preprocessor: #include, #define, #undef, #ifdef/#ifndef/#else/#endif.

Directive lines and lines in inactive conditional blocks become blank lines,
so line numbers in the output match the input.
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping, Union

from ..errors import (PreprocessError, RecursiveMacro, UnbalancedConditional,
                      UnterminatedComment)
from .syntax import MacroDef, SourceSpan

MAX_DEPTH = 16

_PIECE = re.compile(r'"(?:\\.|[^"\\\n])*"|\'(?:\\.|[^\'\\\n])*\'|[A-Za-z_]\w*|\d+|\s+|.', re.S)
_IDENT = re.compile(r"[A-Za-z_]\w*\Z")
_DEFINE = re.compile(r"#\s*define\s+([A-Za-z_]\w*)(\([^)]*\))?(.*)\Z", re.S)


def strip_comments(source: str, filename: str = "<input>") -> str:
    """Replace comments by a space (or their newlines) so positions stay put."""
    out = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch in "\"'":
            j = i + 1
            while j < n and source[j] != ch and source[j] != "\n":
                j += 2 if source[j] == "\\" else 1
            out.append(source[i:j + 1])
            i = j + 1
        elif source.startswith("/*", i):
            end = source.find("*/", i + 2)
            if end < 0:
                line = source.count("\n", 0, i) + 1
                col = i - (source.rfind("\n", 0, i) + 1) + 1
                raise UnterminatedComment("unterminated comment",
                                          SourceSpan(filename, line, col, line, col))
            body = source[i:end + 2]
            out.append(" " + "\n" * body.count("\n") if "\n" in body else " " * len(body))
            i = end + 2
        elif source.startswith("//", i):
            end = source.find("\n", i)
            end = n if end < 0 else end
            out.append(" " * (end - i))
            i = end
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _tokens_of(text: str) -> tuple:
    return tuple(p for p in _PIECE.findall(text) if not p.isspace())


def _normalize_predefined(predefined) -> dict[str, str]:
    if predefined is None:
        return {}
    if isinstance(predefined, Mapping):
        return {k: str(v) for k, v in predefined.items()}
    out = {}
    for item in predefined:
        name, _, value = item.partition("=")
        out[name.strip()] = value.strip()
    return out


class _Expander:
    def __init__(self, macros: dict[str, MacroDef], filename: str):
        self.macros = macros
        self.filename = filename

    def expand(self, text: str, lineno: int, depth: int = 0) -> str:
        out = []
        i = 0
        while i < len(text):
            m = _PIECE.match(text, i)
            piece = m.group()
            i = m.end()
            mac = self.macros.get(piece) if _IDENT.match(piece) else None
            if mac is None:
                out.append(piece)
                continue
            if mac.params is None:
                self._check_depth(depth, piece, lineno)
                out.append(self.expand(mac.body, lineno, depth + 1))
                continue
            j = i
            while j < len(text) and text[j].isspace():
                j += 1
            if j >= len(text) or text[j] != "(":
                out.append(piece)  # function-like macro name not followed by a call
                continue
            args, i = self._collect_args(text, j, lineno)
            if len(args) != len(mac.params) and not (len(mac.params) == 0 and args == [""]):
                raise PreprocessError(
                    f"macro {mac.name} expects {len(mac.params)} arguments, got {len(args)}",
                    SourceSpan(self.filename, lineno, 1, lineno, 1))
            self._check_depth(depth, piece, lineno)
            bound = dict(zip(mac.params, args))
            body = "".join(bound.get(p, p) if _IDENT.match(p) else p
                           for p in _PIECE.findall(mac.body))
            out.append(self.expand(body, lineno, depth + 1))
        return "".join(out)

    def _check_depth(self, depth, name, lineno):
        if depth >= MAX_DEPTH:
            raise RecursiveMacro(f"macro expansion of '{name}' exceeds depth {MAX_DEPTH}",
                                 SourceSpan(self.filename, lineno, 1, lineno, 1))

    def _collect_args(self, text, j, lineno):
        level = 0
        args, cur = [], []
        i = j + 1
        while i < len(text):
            m = _PIECE.match(text, i)
            p = m.group()
            i = m.end()
            if p == "(":
                level += 1
            elif p == ")":
                if level == 0:
                    args.append("".join(cur).strip())
                    return args, i
                level -= 1
            elif p == "," and level == 0:
                args.append("".join(cur).strip())
                cur = []
                continue
            cur.append(p)
        raise PreprocessError("unterminated macro argument list",
                              SourceSpan(self.filename, lineno, 1, lineno, 1))


def preprocess(source: str,
               predefined: Union[Iterable[str], Mapping[str, str], None] = None,
               filename: str = "<input>") -> tuple[str, list[MacroDef]]:
    """Expand macros and resolve conditionals.

    ``predefined`` names behave as if ``#define``d before the first line;
    ``NAME=VALUE`` strings (or a mapping) give them a replacement.
    """
    text = strip_comments(source, filename)
    macros: dict[str, MacroDef] = {}
    for name, value in _normalize_predefined(predefined).items():
        macros[name] = MacroDef(name, None, _tokens_of(value), value)
    recorded: list[MacroDef] = []
    expander = _Expander(macros, filename)
    # each entry: (enclosing block active, this branch active, saw #else, opening line)
    stack: list[list] = []
    out_lines = []

    def active() -> bool:
        return not stack or (stack[-1][0] and stack[-1][1])

    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped.startswith("#"):
            out_lines.append(expander.expand(line, lineno) if active() else "")
            continue
        out_lines.append("")
        directive = stripped[1:].strip()
        word = directive.split(None, 1)[0] if directive else ""
        rest = directive[len(word):].strip()
        here = SourceSpan(filename, lineno, 1, lineno, max(len(line), 1))
        if word in ("ifdef", "ifndef"):
            defined = rest.split()[0] in macros if rest else False
            stack.append([active(), defined if word == "ifdef" else not defined, False, lineno])
        elif word == "else":
            if not stack or stack[-1][2]:
                raise UnbalancedConditional("#else without matching #ifdef", here)
            stack[-1][1] = not stack[-1][1]
            stack[-1][2] = True
        elif word == "endif":
            if not stack:
                raise UnbalancedConditional("#endif without matching #ifdef", here)
            stack.pop()
        elif not active():
            continue
        elif word == "include":
            continue  # builtins are ambient
        elif word == "define":
            m = _DEFINE.match("#" + directive)
            if m is None:
                raise PreprocessError("malformed #define", here)
            name, params, body = m.group(1), m.group(2), m.group(3).strip()
            if params is not None:
                params = tuple(p.strip() for p in params[1:-1].split(",") if p.strip())
            mac = MacroDef(name, params, _tokens_of(body), body)
            macros[name] = mac
            recorded.append(mac)
        elif word == "undef":
            macros.pop(rest.split()[0] if rest else "", None)
        else:
            raise PreprocessError(f"unsupported directive #{word}", here)
    if stack:
        ln = stack[-1][3]
        raise UnbalancedConditional("unterminated #ifdef",
                                    SourceSpan(filename, ln, 1, ln, 1))
    return "\n".join(out_lines), recorded
