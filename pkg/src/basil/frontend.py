"""Annotated source files.

A .bppl file is a program with optional assertion blocks written as
{| ... |}. Blocks before the first program token form the precondition,
blocks after the last program token form the postcondition, and blocks
in between are checkpoints: claims about the state at the point where
they appear, checked against the proof trace.

Stripping replaces annotation characters with spaces (newlines kept),
so the program parser reports positions in the original file.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

from basil.assertions import Assertion, parse_assertion
from basil.assertions import nodes as A
from basil.syntax import parse
from basil.syntax.parser import ParseError
from basil.syntax.terms import Term


@dataclass(frozen=True)
class Annotation:
    line: int
    col: int
    assertion: Assertion


@dataclass(frozen=True)
class AnnotatedProgram:
    term: Term
    pre: Optional[Assertion]
    post: Optional[Assertion]
    checkpoints: Tuple[Annotation, ...]
    source: str


def _positions(text: str):
    line, col = 1, 1
    for ch in text:
        yield line, col
        if ch == "\n":
            line, col = line + 1, 1
        else:
            col += 1


def strip_annotations(text: str
                      ) -> Tuple[str, List[Tuple[int, int, str]]]:
    """Blank out {| ... |} blocks; return the cleaned text plus each
    block's position and body."""
    pos = list(_positions(text))
    out = list(text)
    blocks: List[Tuple[int, int, str]] = []
    i = 0
    while True:
        start = text.find("{|", i)
        if start < 0:
            break
        end = text.find("|}", start + 2)
        if end < 0:
            line, col = pos[start]
            raise ParseError("unterminated {| annotation", line, col)
        body_at = pos[start + 2]
        blocks.append((body_at[0], body_at[1], text[start + 2:end]))
        for j in range(start, end + 2):
            if out[j] != "\n":
                out[j] = " "
        i = end + 2
    return "".join(out), blocks


def _conjoin(parts: List[Assertion]) -> Optional[Assertion]:
    if not parts:
        return None
    out = parts[0]
    for p in parts[1:]:
        out = A.And(out, p)
    return out


def parse_annotated(text: str) -> AnnotatedProgram:
    clean, blocks = strip_annotations(text)
    anns = [Annotation(ln, col, parse_assertion(body, ln, col))
            for ln, col, body in blocks]

    stripped = [ch if not ch.isspace() else " " for ch in clean]
    first = next((i for i, c in enumerate("".join(stripped)) if c != " "),
                 None)
    if first is None:
        raise ParseError("file contains no program", 1, 1)
    last = len(clean) - 1
    while clean[last].isspace():
        last -= 1
    pos = list(_positions(text))
    prog_start = pos[first]
    prog_end = pos[last]

    def before_program(a: Annotation) -> bool:
        return (a.line, a.col) < prog_start

    def after_program(a: Annotation) -> bool:
        return (a.line, a.col) > prog_end

    pre = _conjoin([a.assertion for a in anns if before_program(a)])
    post = _conjoin([a.assertion for a in anns if after_program(a)])
    mid = tuple(a for a in anns
                if not before_program(a) and not after_program(a))
    term = parse(clean)
    return AnnotatedProgram(term, pre, post, mid, text)


def load_annotated(path: str) -> AnnotatedProgram:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_annotated(fh.read())
