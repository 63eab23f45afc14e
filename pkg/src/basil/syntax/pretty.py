"""Source rendering for terms, plus exact rational formatting.

pretty(parse(s)) round-trips to an equal AST whenever every literal in s
has a terminating decimal expansion; rationals like 2/3 print as a
quotient, which reparses as a division node with the same value.
"""

from __future__ import annotations

from fractions import Fraction

from basil.syntax.terms import (
    Builtin, BoolLit, For, Fst, If, Let, NatLit, Observe, ObserveFrom, Pair,
    RealLit, Ret, Sample, Score, Seq, Snd, Term, UnitLit, Var,
)

# operator -> (binding level, rendering); levels follow the grammar
_INFIX = {
    "or": 1, "and": 2,
    "=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6,
    "^": 8,
}


def format_fraction(fr: Fraction) -> str:
    """Exact text: terminating decimals as decimals, otherwise p/q."""
    if fr.denominator == 1:
        return str(fr.numerator)
    den = fr.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{fr.numerator}/{fr.denominator}"
    digits = max(twos, fives)
    scaled = fr.numerator * 10 ** digits // fr.denominator
    sign = "-" if scaled < 0 else ""
    text = str(abs(scaled)).rjust(digits + 1, "0")
    return f"{sign}{text[:-digits]}.{text[-digits:]}"


def format_number(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return format_fraction(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return repr(v)
    return str(v)


def pretty_expr(t: Term, need: int = 0) -> str:
    text, level = _expr(t)
    if level < need:
        return f"({text})"
    return text


def _expr(t: Term):
    if isinstance(t, UnitLit):
        return "()", 9
    if isinstance(t, BoolLit):
        return ("true" if t.b else "false"), 9
    if isinstance(t, NatLit):
        return str(t.n), 9
    if isinstance(t, RealLit):
        text = format_number(t.val)
        level = 9
        if t.val < 0:
            level = 7
        elif "/" in text:
            level = 6
        return text, level
    if isinstance(t, Var):
        return t.name, 9
    if isinstance(t, Pair):
        return f"({pretty_expr(t.fst)}, {pretty_expr(t.snd)})", 9
    if isinstance(t, Fst):
        return f"fst({pretty_expr(t.arg)})", 9
    if isinstance(t, Snd):
        return f"snd({pretty_expr(t.arg)})", 9
    if isinstance(t, If):
        return pretty(t), 0
    if isinstance(t, Builtin):
        return _builtin(t)
    # statements embedded in expression position only ever print
    # parenthesized
    return pretty(t), 0


def _builtin(t: Builtin):
    if t.fn == "not":
        return f"not {pretty_expr(t.args[0], 3)}", 3
    if t.fn == "neg":
        return f"-{pretty_expr(t.args[0], 7)}", 7
    lv = _INFIX.get(t.fn)
    if lv is not None and len(t.args) == 2:
        a, b = t.args
        if t.fn == "^":
            return f"{pretty_expr(a, 9)} ^ {pretty_expr(b, 7)}", 8
        if lv == 4:
            return f"{pretty_expr(a, 5)} {t.fn} {pretty_expr(b, 5)}", 4
        return f"{pretty_expr(a, lv)} {t.fn} {pretty_expr(b, lv + 1)}", lv
    args = ", ".join(pretty_expr(a) for a in t.args)
    return f"{t.fn}({args})", 9


def _branch(t: Term) -> str:
    text = pretty(t)
    if isinstance(t, Seq) or "\n" in text:
        inner = text.replace("\n", "\n  ")
        return f"(\n  {inner}\n)"
    return text


def pretty(t: Term) -> str:
    if isinstance(t, Seq):
        return f"{_branch(t.first)};\n{pretty(t.second)}"
    if isinstance(t, Let):
        rhs = _branch(t.bound)
        return f"let {t.name} = {rhs} in\n{pretty(t.body)}"
    if isinstance(t, Sample):
        return f"sample({pretty_expr(t.dist)})"
    if isinstance(t, Score):
        return f"score({pretty_expr(t.weight)})"
    if isinstance(t, Ret):
        return f"return {pretty_expr(t.value)}"
    if isinstance(t, Observe):
        return f"observe({pretty_expr(t.cond)})"
    if isinstance(t, ObserveFrom):
        return f"observe {pretty_expr(t.value)} from {pretty_expr(t.dist)}"
    if isinstance(t, For):
        items = ", ".join(pretty_expr(i) for i in t.items)
        return f"for {t.var} in [{items}] do {_branch(t.body)}"
    if isinstance(t, If):
        return (f"if {pretty_expr(t.cond)} then {_branch(t.then)} "
                f"else {_branch(t.els)}")
    return pretty_expr(t)
