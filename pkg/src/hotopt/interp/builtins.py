"""Runtime library available to every program without a header."""

from __future__ import annotations

import re

from ..errors import BadFormat, InterpError, OutOfBounds
from .memory import ESIZE, Ptr, Segment, check_ptr, fill_bytes, read_cstring, store, u32, w32, write_bytes


class Lcg:
    """The classic ANSI C example generator; fully determined by its seed."""

    MULTIPLIER = 1103515245
    INCREMENT = 12345

    def __init__(self, seed: int = 1):
        self.state = seed & 0xFFFFFFFF

    def srand(self, seed: int):
        self.state = seed & 0xFFFFFFFF

    def rand(self) -> int:
        self.state = (self.state * self.MULTIPLIER + self.INCREMENT) & 0xFFFFFFFF
        return (self.state // 65536) % 32768


_SPEC = re.compile(rb"%([-+ 0#]*)(\d*)([diucsx%])")


def format_c(fmt: bytes, args: list, span=None) -> bytes:
    """printf-style formatting for %d %i %u %c %s %x %% with flags and width."""
    out = bytearray()
    pos = 0
    argi = 0
    for m in _SPEC.finditer(fmt):
        literal = fmt[pos:m.start()]
        if b"%" in literal:
            bad = literal[literal.index(b"%"):][:4]
            raise BadFormat(f"unsupported conversion {bad!r}", span)
        out += literal
        pos = m.end()
        flags, width, conv = m.group(1).decode(), m.group(2).decode(), m.group(3).decode()
        if conv == "%":
            out += b"%"
            continue
        if argi >= len(args):
            raise BadFormat(f"missing argument for %{conv}", span)
        v = args[argi]
        argi += 1
        if conv == "s":
            if not isinstance(v, Ptr):
                raise BadFormat("%s needs a char pointer", span)
            text = read_cstring(v, span)
        else:
            if isinstance(v, Ptr):
                raise BadFormat(f"%{conv} given a pointer", span)
            if conv in "di":
                text = str(w32(v)).encode()
            elif conv == "u":
                text = str(u32(v)).encode()
            elif conv == "x":
                text = format(u32(v), "x").encode()
            else:
                text = bytes([v & 0xFF])
        n = int(width) if width else 0
        if len(text) < n:
            pad = n - len(text)
            if "-" in flags:
                text = text + b" " * pad
            elif "0" in flags and conv in "diux":
                sign = text[:1] if text[:1] == b"-" else b""
                text = sign + b"0" * pad + text[len(sign):]
            else:
                text = b" " * pad + text
        out += text
    tail = fmt[pos:]
    if b"%" in tail:
        raise BadFormat(f"unsupported conversion {tail[tail.index(b'%'):][:4]!r}", span)
    out += tail
    return bytes(out)


class Runtime:
    """Builtin implementations; one instance per program execution."""

    def __init__(self, seed: int, time_value: int):
        self.stdout = bytearray()
        self.rng = Lcg(seed)
        self.time_value = time_value
        self.next_sid = 1000

    # each builtin takes (args, hint, span); hint is the element kind for malloc

    def printf(self, args, hint, span):
        if not args or not isinstance(args[0], Ptr):
            raise BadFormat("printf needs a format string", span)
        text = format_c(read_cstring(args[0], span), args[1:], span)
        self.stdout += text
        return len(text)

    def sprintf(self, args, hint, span):
        if len(args) < 2 or not isinstance(args[1], Ptr):
            raise BadFormat("sprintf needs a buffer and a format string", span)
        text = format_c(read_cstring(args[1], span), args[2:], span)
        check_ptr(args[0], span)
        write_bytes(args[0], text + b"\0", span)
        return len(text)

    def putchar(self, args, hint, span):
        c = args[0] & 0xFF
        self.stdout.append(c)
        return c

    def fflush(self, args, hint, span):
        return 0

    def malloc(self, args, hint, span):
        nbytes = args[0]
        if isinstance(nbytes, Ptr) or nbytes < 0:
            raise InterpError(f"malloc of invalid size {nbytes!r}", span)
        kind = hint or "int"
        es = ESIZE[kind]
        self.next_sid += 1
        seg = Segment(-(-nbytes // es), kind, f"heap#{self.next_sid}", heap=True, sid=self.next_sid)
        return Ptr(seg, 0, es)

    def free(self, args, hint, span):
        p = args[0]
        if p == 0 and not isinstance(p, Ptr):
            return 0
        check_ptr(p, span)
        if not p.seg.heap or p.off != 0:
            raise InterpError("free of a pointer not returned by malloc", span)
        p.seg.freed = True
        return 0

    def memset(self, args, hint, span):
        p, value, n = args
        fill_bytes(p, value, n, span)
        return p

    def strlen(self, args, hint, span):
        return len(read_cstring(args[0], span))

    def rand(self, args, hint, span):
        return self.rng.rand()

    def srand(self, args, hint, span):
        self.rng.srand(args[0])
        return 0

    def time(self, args, hint, span):
        if args and isinstance(args[0], Ptr):
            store(args[0], self.time_value, span)
        return self.time_value


ARITY = {"printf": None, "sprintf": None, "putchar": 1, "fflush": 1, "malloc": 1,
         "free": 1, "memset": 3, "strlen": 1, "rand": 0, "srand": 1, "time": 1}


def check_arity(name: str, nargs: int, span=None):
    want = ARITY[name]
    if want is not None and nargs != want:
        raise InterpError(f"{name} takes {want} argument(s), got {nargs}", span)


__all__ = ["Lcg", "Runtime", "format_c", "check_arity", "OutOfBounds"]
