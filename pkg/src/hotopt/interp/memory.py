"""Segmented memory: every object is a Segment of same-typed cells.

Pointers address bytes inside one segment; a cell is ``esize`` bytes wide.
Scalar cells hold Python ints already reduced to their C type, pointer cells
hold a Ptr or the integer 0.
"""

from __future__ import annotations

from ..errors import NullDeref, OutOfBounds, UseAfterFree

ESIZE = {"int": 4, "uint": 4, "char": 1, "ptr": 8}


def w32(v: int) -> int:
    return ((v + 0x80000000) & 0xFFFFFFFF) - 0x80000000


def u32(v: int) -> int:
    return v & 0xFFFFFFFF


def w8(v: int) -> int:
    return ((v + 0x80) & 0xFF) - 0x80


_I64_MIN = -(1 << 63)
_I64_MAX = (1 << 63) - 1


def w64(v: int) -> int:
    if _I64_MIN <= v <= _I64_MAX:
        return v
    return ((v + (1 << 63)) & ((1 << 64) - 1)) - (1 << 63)


def _keep(v):
    return v


WRAP = {"int": w32, "uint": u32, "char": w8, "ptr": _keep}


def kind_of(ctype) -> str:
    """Cell kind for a value of the given CType."""
    if ctype.pointer_depth:
        return "ptr"
    return {"int": "int", "unsigned-int": "uint", "char": "char", "void": "int"}[ctype.base]


class Segment:
    __slots__ = ("cells", "kind", "esize", "name", "freed", "heap", "sid")

    def __init__(self, n: int, kind: str, name: str = "", heap: bool = False, sid: int = 0):
        self.cells = [0] * n
        self.kind = kind
        self.esize = ESIZE[kind]
        self.name = name
        self.freed = False
        self.heap = heap
        self.sid = sid

    @property
    def nbytes(self) -> int:
        return len(self.cells) * self.esize

    def __repr__(self):
        return f"<segment {self.name or self.sid} {self.kind}[{len(self.cells)}]>"


class Ptr:
    """Pointer into a segment.

    ``esize`` is the width of the pointed-to scalar; ``inner`` holds the
    remaining dimensions when pointing at rows of a multi-dimensional array.
    """

    __slots__ = ("seg", "off", "esize", "inner", "step")

    def __init__(self, seg: Segment, off: int, esize: int, inner: tuple = ()):
        self.seg = seg
        self.off = off
        self.esize = esize
        self.inner = inner
        step = esize
        for d in inner:
            step *= d
        self.step = step

    def moved(self, k: int) -> "Ptr":
        return Ptr(self.seg, self.off + k * self.step, self.esize, self.inner)

    def __eq__(self, other):
        return (isinstance(other, Ptr) and other.seg is self.seg and other.off == self.off)

    def __hash__(self):
        return hash((id(self.seg), self.off))

    def __repr__(self):
        return f"<ptr {self.seg!r}+{self.off}>"


def check_ptr(p, span=None):
    if p.__class__ is not Ptr:
        if p == 0:
            raise NullDeref("dereference of a null pointer", span)
        raise NullDeref(f"dereference of non-pointer value {p}", span)
    if p.seg.freed:
        raise UseAfterFree(f"access to freed {p.seg!r}", span)


def load(p, span=None):
    check_ptr(p, span)
    seg = p.seg
    es = seg.esize
    off = p.off
    if p.esize == es:
        q, r = divmod(off, es)
        if r or q < 0 or q >= len(seg.cells):
            raise OutOfBounds(f"read of {seg!r} at byte {off}", span)
        return seg.cells[q]
    if p.esize == 1 and seg.kind != "ptr":
        if off < 0 or off >= seg.nbytes:
            raise OutOfBounds(f"read of {seg!r} at byte {off}", span)
        q, r = divmod(off, es)
        return w8((seg.cells[q] >> (8 * r)) & 0xFF)
    raise OutOfBounds(f"{p.esize}-byte read from {seg!r} with {es}-byte cells", span)


def store(p, value, span=None):
    check_ptr(p, span)
    seg = p.seg
    es = seg.esize
    off = p.off
    if p.esize == es:
        q, r = divmod(off, es)
        if r or q < 0 or q >= len(seg.cells):
            raise OutOfBounds(f"write of {seg!r} at byte {off}", span)
        v = WRAP[seg.kind](value)
        seg.cells[q] = v
        return v
    if p.esize == 1 and seg.kind != "ptr":
        if off < 0 or off >= seg.nbytes:
            raise OutOfBounds(f"write of {seg!r} at byte {off}", span)
        set_byte(seg, off, value)
        return w8(value)
    raise OutOfBounds(f"{p.esize}-byte write to {seg!r} with {es}-byte cells", span)


def set_byte(seg: Segment, off: int, value: int):
    es = seg.esize
    q, r = divmod(off, es)
    mask = (1 << (8 * es)) - 1
    raw = seg.cells[q]
    if seg.kind == "ptr":
        if raw != 0 or value & 0xFF:
            raise OutOfBounds(f"byte write into pointer cell of {seg!r}")
        return
    raw &= mask
    raw = (raw & ~(0xFF << (8 * r))) | ((value & 0xFF) << (8 * r))
    seg.cells[q] = WRAP[seg.kind](raw)


def fill_bytes(p, value: int, n: int, span=None):
    """memset semantics over the bytes [p, p + n)."""
    check_ptr(p, span)
    seg = p.seg
    if n < 0 or p.off < 0 or p.off + n > seg.nbytes:
        raise OutOfBounds(f"memset of {n} bytes at byte {p.off} overruns {seg!r} "
                          f"({seg.nbytes} bytes)", span)
    es = seg.esize
    off = p.off
    end = off + n
    value &= 0xFF
    # whole cells at once where the range is aligned
    while off < end and off % es:
        set_byte(seg, off, value)
        off += 1
    whole = (end - off) // es
    if whole:
        if seg.kind == "ptr":
            if value:
                raise OutOfBounds(f"non-zero memset over pointer cells of {seg!r}", span)
            cell = 0
        else:
            cell = WRAP[seg.kind](int.from_bytes(bytes([value]) * es, "little"))
        q = off // es
        seg.cells[q:q + whole] = [cell] * whole
        off += whole * es
    while off < end:
        set_byte(seg, off, value)
        off += 1


def read_cstring(p, span=None) -> bytes:
    out = bytearray()
    off = 0
    while True:
        c = load(Ptr(p.seg, p.off + off, 1), span) if p.seg.esize != 1 else None
        if c is None:
            check_ptr(p, span)
            q = p.off + off
            if q < 0 or q >= len(p.seg.cells):
                raise OutOfBounds(f"unterminated string in {p.seg!r}", span)
            c = p.seg.cells[q]
        if c == 0:
            return bytes(out)
        out.append(c & 0xFF)
        off += 1


def write_bytes(p, data: bytes, span=None):
    for i, b in enumerate(data):
        store(Ptr(p.seg, p.off + i, 1), w8(b), span)
