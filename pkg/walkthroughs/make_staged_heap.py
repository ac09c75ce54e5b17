"""Regenerate fixtures/heap_opt{1,2,3}.c from heap.c (desk scale, DEBUG output on)."""

from importlib.resources import files
from pathlib import Path

from hotopt.frontend import parse_source, pretty_print
from hotopt.rewrite import STAGES, staged_variants

DEFINES = ["SMALL", "DEBUG"]


def staged_texts() -> list:
    src = (files("hotopt") / "fixtures" / "heap.c").read_text()
    tu = parse_source(src, "heap.c", DEFINES)
    texts = []
    for k, ((label, rules), (unit, report)) in enumerate(zip(STAGES, staged_variants(tu)), 1):
        applied = ", ".join(sorted({f.rule.value for f, _, _ in report.applied})) or "none"
        header = (f"/* heap.c, stage {k} ({label}): generated with -D {' -D '.join(DEFINES)}.\n"
                  f" * Rules applied in this stage: {applied}.\n"
                  f" * Regenerate with walkthroughs/make_staged_heap.py. */\n")
        texts.append(header + pretty_print(unit))
    return texts


if __name__ == "__main__":
    target = Path(str(files("hotopt") / "fixtures"))
    for k, text in enumerate(staged_texts(), 1):
        (target / f"heap_opt{k}.c").write_text(text)
        print(f"wrote heap_opt{k}.c")
