"""Dual-judgment typechecker.

Terms are checked either as deterministic expressions (check_det) or as
probabilistic computations (check_prob). Random variables live in the
delta part of the context and are spelled with an uppercase initial;
deterministic metavariables (program parameters, quantifier binders in
assertions) live in gamma, are lowercase, and carry a set tag recording
which subset of their carrier they range over.

Random variables are visible inside deterministic expressions: a term
like Bern(X) with X a random real is well-typed deterministically, which
is what lets score arguments and distribution parameters mention earlier
samples.

Errors name the violated rule (PT-Sample, PT-Score, PT-Dirac, PT-Let,
PT-If, or the generic PT-Det for expression-level failures) and carry
the source position when the term has one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Tuple

from basil.syntax import builtins as bi
from basil.syntax.terms import (
    BOOL, Builtin, BoolLit, Fst, If, Let, NAT, NatLit, Pair, Prob, Prod,
    REAL, RealLit, Ret, Sample, Score, Snd, Span, SUGAR, Term, Type, UNIT,
    UnitLit, Var,
)


@dataclass(frozen=True)
class SetTag:
    """A named subset of a base type, used to tag metavariables."""

    name: str
    carrier: Type

    def contains(self, v) -> bool:
        if self.name == "real":
            return _is_number(v)
        if self.name == "pos":
            return _is_number(v) and v > 0
        if self.name == "unit_interval":
            return _is_number(v) and 0 <= v <= 1
        if self.name == "nat":
            return isinstance(v, Rational) and v.denominator == 1 and v >= 0
        if self.name == "bool":
            return isinstance(v, bool)
        return True


def _is_number(v) -> bool:
    return isinstance(v, (int, float, Fraction)) and not isinstance(v, bool)


R_SET = SetTag("real", REAL)
POS_SET = SetTag("pos", REAL)
UNIT_INTERVAL = SetTag("unit_interval", REAL)
NAT_SET = SetTag("nat", NAT)
BOOL_SET = SetTag("bool", BOOL)

SET_TAGS = {t.name: t for t in (R_SET, POS_SET, UNIT_INTERVAL, NAT_SET, BOOL_SET)}


class TypeError_(Exception):
    def __init__(self, msg: str, rule: str = "PT-Det", span: Optional[Span] = None):
        where = f"{span.line}:{span.col}: " if span else ""
        super().__init__(f"{where}[{rule}] {msg}")
        self.msg = msg
        self.rule = rule
        self.span = span


@dataclass
class TypingContext:
    """delta holds random variables, gamma holds tagged metavariables."""

    delta: Tuple[Tuple[str, Type], ...] = ()
    gamma: Tuple[Tuple[str, SetTag], ...] = ()

    def extend_delta(self, name: str, ty: Type) -> "TypingContext":
        return TypingContext(self.delta + ((name, ty),), self.gamma)

    def extend_gamma(self, name: str, tag: SetTag) -> "TypingContext":
        return TypingContext(self.delta, self.gamma + ((name, tag),))

    def delta_type(self, name: str) -> Optional[Type]:
        for n, ty in reversed(self.delta):
            if n == name:
                return ty
        return None

    def gamma_tag(self, name: str) -> Optional[SetTag]:
        for n, tag in reversed(self.gamma):
            if n == name:
                return tag
        return None


def _widen(ty: Type) -> Type:
    return REAL if ty == NAT else ty


def _fits(actual: Type, expected: Type) -> bool:
    return actual == expected or _widen(actual) == expected


def check_det(ctx: TypingContext, t: Term) -> Type:
    if isinstance(t, UnitLit):
        return UNIT
    if isinstance(t, NatLit):
        return NAT
    if isinstance(t, RealLit):
        return REAL
    if isinstance(t, BoolLit):
        return BOOL
    if isinstance(t, Var):
        ty = ctx.delta_type(t.name)
        if ty is not None:
            return ty
        tag = ctx.gamma_tag(t.name)
        if tag is not None:
            return tag.carrier
        raise TypeError_(f"unbound variable {t.name!r}", span=t.span)
    if isinstance(t, Pair):
        return Prod(check_det(ctx, t.fst), check_det(ctx, t.snd))
    if isinstance(t, (Fst, Snd)):
        inner = check_det(ctx, t.arg)
        if not isinstance(inner, Prod):
            raise TypeError_(f"projection applied to non-pair of type {inner}",
                             span=t.span)
        return inner.fst if isinstance(t, Fst) else inner.snd
    if isinstance(t, Builtin):
        sig = bi.lookup(t.fn)
        if sig is None:
            raise TypeError_(f"unknown function {t.fn!r}", span=t.span)
        if len(t.args) != len(sig.params):
            raise TypeError_(
                f"{t.fn} takes {len(sig.params)} argument(s), got {len(t.args)}",
                span=t.span)
        for arg, want in zip(t.args, sig.params):
            got = check_det(ctx, arg)
            if not _fits(got, want):
                raise TypeError_(
                    f"argument of {t.fn} has type {got}, expected {want}",
                    span=arg.span or t.span)
        return sig.result
    if isinstance(t, If):
        cty = check_det(ctx, t.cond)
        if cty != BOOL:
            raise TypeError_(f"if condition has type {cty}, expected bool",
                             rule="PT-If", span=t.span)
        a = check_det(ctx, t.then)
        b = check_det(ctx, t.els)
        if a == b:
            return a
        if _widen(a) == _widen(b):
            return _widen(a)
        raise TypeError_(f"if branches disagree: {a} vs {b}",
                         rule="PT-If", span=t.span)
    if isinstance(t, (Sample, Score, Ret, Let) + SUGAR):
        raise TypeError_(
            f"{type(t).__name__.lower()} is a probabilistic construct and "
            f"cannot appear inside a deterministic expression",
            rule="PT-Det", span=t.span)
    raise TypeError_(f"cannot type {type(t).__name__}", span=t.span)


def check_prob(ctx: TypingContext, t: Term) -> Type:
    if isinstance(t, SUGAR):
        from basil.syntax.sugar import desugar
        return check_prob(ctx, desugar(t))
    if isinstance(t, Sample):
        inner = check_det(ctx, t.dist)
        if not isinstance(inner, Prob):
            raise TypeError_(
                f"sample needs a distribution, got a value of type {inner}",
                rule="PT-Sample", span=t.span)
        return inner.carrier
    if isinstance(t, Score):
        inner = check_det(ctx, t.weight)
        if not _fits(inner, REAL):
            raise TypeError_(f"score weight has type {inner}, expected real",
                             rule="PT-Score", span=t.span)
        return UNIT
    if isinstance(t, Ret):
        return check_det(ctx, t.value)
    if isinstance(t, Let):
        if t.name != "_" and not t.name[0].isupper():
            raise TypeError_(
                f"let binds the random variable {t.name!r}; random variables "
                f"start with an uppercase letter",
                rule="PT-Let", span=t.span)
        bound_ty = check_prob(ctx, t.bound)
        inner_ctx = ctx if t.name == "_" else ctx.extend_delta(t.name, bound_ty)
        return check_prob(inner_ctx, t.body)
    if isinstance(t, If):
        cty = check_det(ctx, t.cond)
        if cty != BOOL:
            raise TypeError_(f"if condition has type {cty}, expected bool",
                             rule="PT-If", span=t.span)
        a = check_prob(ctx, t.then)
        b = check_prob(ctx, t.els)
        if a == b:
            return a
        if _widen(a) == _widen(b):
            return _widen(a)
        raise TypeError_(f"if branches disagree: {a} vs {b}",
                         rule="PT-If", span=t.span)
    raise TypeError_(
        f"expected a probabilistic computation, found a deterministic "
        f"{type(t).__name__.lower()}; wrap values in return",
        rule="PT-Dirac", span=t.span)


def typecheck(ctx: Optional[TypingContext], t: Term,
              judgment: str = "p") -> Type:
    """Check t under the requested judgment; "any" tries det first."""
    if ctx is None:
        ctx = TypingContext()
    if judgment == "d":
        return check_det(ctx, t)
    if judgment == "p":
        return check_prob(ctx, t)
    if judgment == "any":
        try:
            return check_det(ctx, t)
        except TypeError_:
            return check_prob(ctx, t)
    raise ValueError(f"unknown judgment {judgment!r}")
