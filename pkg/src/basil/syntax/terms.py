"""Term and type ASTs.

Terms split into a deterministic expression layer (literals, variables,
builtin applications, pairs, conditionals) and a probabilistic layer
(sample, score, return, let). Surface sugar (sequencing, observe,
observe-from, bounded for) has its own node classes and is removed by
``basil.syntax.sugar.desugar``.

All nodes are frozen dataclasses; source spans are excluded from equality
so that structural comparison is alpha-comparison for printed-and-reparsed
trees (printing preserves binder names).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


# ---------------------------------------------------------------------------
# types

class Type:
    pass


@dataclass(frozen=True)
class _Unit(Type):
    def __str__(self):
        return "unit"


@dataclass(frozen=True)
class _Nat(Type):
    def __str__(self):
        return "nat"


@dataclass(frozen=True)
class _Real(Type):
    def __str__(self):
        return "real"


@dataclass(frozen=True)
class _Bool(Type):
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class Prod(Type):
    fst: Type
    snd: Type

    def __str__(self):
        return f"({self.fst} * {self.snd})"


@dataclass(frozen=True)
class Prob(Type):
    carrier: Type

    def __str__(self):
        return f"prob({self.carrier})"


UNIT = _Unit()
NAT = _Nat()
REAL = _Real()
BOOL = _Bool()


# ---------------------------------------------------------------------------
# terms

@dataclass(frozen=True)
class Term:
    pass


def _span_field():
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class UnitLit(Term):
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Var(Term):
    name: str
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class NatLit(Term):
    n: int
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("natural literal must be nonnegative")


@dataclass(frozen=True)
class RealLit(Term):
    val: Fraction  # or a float, for values known only approximately
    span: Optional[Span] = _span_field()

    def __post_init__(self):
        if not isinstance(self.val, (Fraction, float)):
            object.__setattr__(self, "val", Fraction(self.val))


@dataclass(frozen=True)
class BoolLit(Term):
    b: bool
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Builtin(Term):
    """Application of a whitelisted measurable function or distribution
    constructor, e.g. Builtin("+", (a, b)) or Builtin("Bern", (p,))."""

    fn: str
    args: Tuple[Term, ...]
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Pair(Term):
    fst: Term
    snd: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Fst(Term):
    arg: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Snd(Term):
    arg: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class If(Term):
    cond: Term
    then: Term
    els: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Sample(Term):
    dist: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Score(Term):
    weight: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Ret(Term):
    value: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Let(Term):
    name: str
    bound: Term
    body: Term
    span: Optional[Span] = _span_field()


# surface sugar, eliminated by desugar()

@dataclass(frozen=True)
class Seq(Term):
    first: Term
    second: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class Observe(Term):
    cond: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class ObserveFrom(Term):
    value: Term
    dist: Term
    span: Optional[Span] = _span_field()


@dataclass(frozen=True)
class For(Term):
    var: str
    items: Tuple[Term, ...]
    body: Term
    span: Optional[Span] = _span_field()


SUGAR = (Seq, Observe, ObserveFrom, For)


def is_sugar_free(t: Term) -> bool:
    if isinstance(t, SUGAR):
        return False
    return all(is_sugar_free(c) for c in children(t))


def children(t: Term) -> Tuple[Term, ...]:
    """Direct subterms, in source order."""
    if isinstance(t, (UnitLit, Var, NatLit, RealLit, BoolLit)):
        return ()
    if isinstance(t, Builtin):
        return t.args
    if isinstance(t, Pair):
        return (t.fst, t.snd)
    if isinstance(t, (Fst, Snd)):
        return (t.arg,)
    if isinstance(t, If):
        return (t.cond, t.then, t.els)
    if isinstance(t, Sample):
        return (t.dist,)
    if isinstance(t, Score):
        return (t.weight,)
    if isinstance(t, Ret):
        return (t.value,)
    if isinstance(t, Let):
        return (t.bound, t.body)
    if isinstance(t, Seq):
        return (t.first, t.second)
    if isinstance(t, Observe):
        return (t.cond,)
    if isinstance(t, ObserveFrom):
        return (t.value, t.dist)
    if isinstance(t, For):
        return t.items + (t.body,)
    raise TypeError(f"not a Term: {t!r}")


def free_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset({t.name})
    if isinstance(t, Let):
        return free_vars(t.bound) | (free_vars(t.body) - {t.name})
    if isinstance(t, For):
        inner = free_vars(t.body) - {t.var}
        for item in t.items:
            inner |= free_vars(item)
        return frozenset(inner)
    out = frozenset()
    for c in children(t):
        out |= free_vars(c)
    return out


def subst_term(t: Term, name: str, replacement: Term) -> Term:
    """Capture-avoiding substitution of a variable by a term.

    Binders that shadow ``name`` stop the substitution; binders whose name
    occurs free in ``replacement`` are not renamed (callers substitute
    closed terms, which is all the unroller and the proof engine need) and
    trip an assertion instead of capturing silently.
    """
    if isinstance(t, Var):
        return replacement if t.name == name else t
    if isinstance(t, Let):
        bound = subst_term(t.bound, name, replacement)
        if t.name == name:
            return Let(t.name, bound, t.body, span=t.span)
        assert t.name not in free_vars(replacement), \
            f"substitution would capture {t.name}"
        return Let(t.name, bound, subst_term(t.body, name, replacement), span=t.span)
    if isinstance(t, For):
        items = tuple(subst_term(i, name, replacement) for i in t.items)
        if t.var == name:
            return For(t.var, items, t.body, span=t.span)
        assert t.var not in free_vars(replacement), \
            f"substitution would capture {t.var}"
        return For(t.var, items, subst_term(t.body, name, replacement), span=t.span)
    if isinstance(t, (UnitLit, NatLit, RealLit, BoolLit)):
        return t
    new = tuple(subst_term(c, name, replacement) for c in children(t))
    return _rebuild(t, new)


def _rebuild(t: Term, new: Tuple[Term, ...]) -> Term:
    if isinstance(t, (UnitLit, Var, NatLit, RealLit, BoolLit)):
        return t
    if isinstance(t, Let):
        return Let(t.name, new[0], new[1], span=t.span)
    if isinstance(t, For):
        return For(t.var, new[:-1], new[-1], span=t.span)
    if isinstance(t, Builtin):
        return Builtin(t.fn, new, span=t.span)
    if isinstance(t, Pair):
        return Pair(new[0], new[1], span=t.span)
    if isinstance(t, Fst):
        return Fst(new[0], span=t.span)
    if isinstance(t, Snd):
        return Snd(new[0], span=t.span)
    if isinstance(t, If):
        return If(new[0], new[1], new[2], span=t.span)
    if isinstance(t, Sample):
        return Sample(new[0], span=t.span)
    if isinstance(t, Score):
        return Score(new[0], span=t.span)
    if isinstance(t, Ret):
        return Ret(new[0], span=t.span)
    if isinstance(t, Seq):
        return Seq(new[0], new[1], span=t.span)
    if isinstance(t, Observe):
        return Observe(new[0], span=t.span)
    if isinstance(t, ObserveFrom):
        return ObserveFrom(new[0], new[1], span=t.span)
    raise TypeError(f"cannot rebuild {type(t).__name__}")
