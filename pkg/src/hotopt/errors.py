"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class HotoptError(Exception):
    """Base class; ``span`` is set when the error has a source position."""

    def __init__(self, message: str, span=None):
        self.span = span
        if span is not None:
            message = f"{span}: {message}"
        super().__init__(message)


# -- frontend ----------------------------------------------------------------

class FrontendError(HotoptError):
    pass


class LexError(FrontendError):
    pass


class UnterminatedString(LexError):
    pass


class UnterminatedComment(LexError):
    pass


class IllegalCharacter(LexError):
    pass


class PreprocessError(FrontendError):
    pass


class UnbalancedConditional(PreprocessError):
    pass


class RecursiveMacro(PreprocessError):
    pass


class CSyntaxError(FrontendError):
    def __init__(self, message: str, span=None, expected=()):
        self.expected = tuple(expected)
        if self.expected:
            message = f"{message} (expected one of: {', '.join(self.expected)})"
        super().__init__(message, span)


class UnresolvedIdentifier(FrontendError):
    def __init__(self, name: str, span=None):
        self.name = name
        super().__init__(f"unresolved identifier '{name}'", span)


class UnsupportedConstruct(FrontendError):
    pass


# -- rewriting ---------------------------------------------------------------

class RewriteError(HotoptError):
    pass


class PreconditionViolated(RewriteError):
    pass


class SpanMismatch(RewriteError):
    pass


class EarlyReturnUnsupported(RewriteError):
    pass


class NameCollision(RewriteError):
    pass


# -- interpreter -------------------------------------------------------------

class InterpError(HotoptError):
    pass


class OutOfBounds(InterpError):
    pass


class DivisionByZero(InterpError):
    pass


class StepLimitExceeded(InterpError):
    pass


class NullDeref(InterpError):
    pass


class UnknownEntry(InterpError):
    pass


class UseAfterFree(InterpError):
    pass


class BadFormat(InterpError):
    pass


class StackOverflow(InterpError):
    pass


# -- profile metrics ---------------------------------------------------------

class ProfileError(HotoptError):
    pass


class MalformedLine(ProfileError):
    def __init__(self, lineno: int, detail: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {detail}")


class UnknownEvent(ProfileError):
    def __init__(self, name: str, lineno: int | None = None):
        self.name = name
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}undeclared event '{name}'")


class MissingMeta(ProfileError):
    pass


class ZeroTotal(ProfileError):
    pass


class ZeroInstructions(ProfileError):
    pass
