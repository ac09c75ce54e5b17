"""Lexing, preprocessing, parsing and printing of the supported C subset."""

from .lexer import Token, tokenize
from .parser import parse
from .preprocess import preprocess
from .printer import expr_text, pretty_print
from .syntax import SourceSpan, TranslationUnit


def parse_source(source: str, filename: str = "<input>", defines=None) -> TranslationUnit:
    """Preprocess, tokenize and parse ``source`` in one go."""
    text, macros = preprocess(source, defines, filename)
    return parse(tokenize(text, filename), filename, tuple(macros))


__all__ = ["Token", "tokenize", "parse", "preprocess", "pretty_print", "expr_text",
           "parse_source", "SourceSpan", "TranslationUnit"]
