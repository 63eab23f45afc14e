"""Assertion AST for the separation logic.

Naming convention, shared with the typechecker: uppercase names are
random variables (checked against Delta), lowercase names are
deterministic metavariables (checked against Gamma). The two namespaces
never collide, which is what keeps substitution simple: a conditioning
binder (lowercase) can never capture a random-variable name.

Scrutinee positions (the E of `E ~ pi` and friends) hold plain Terms
whose free variables are random variables; measure parameters hold
Terms over metavariables only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

from basil import dist
from basil.dist import DistExpr
from basil.syntax.check import SetTag
from basil.syntax.terms import (
    RealLit, Term, Type, Var, free_vars, subst_term,
)


class Assertion:
    __slots__ = ()


@dataclass(frozen=True)
class Top(Assertion):
    pass


@dataclass(frozen=True)
class TopOne(Assertion):
    """The multiplicative unit; shorthand for Score(1)."""


@dataclass(frozen=True)
class Bot(Assertion):
    pass


@dataclass(frozen=True)
class And(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Or(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Implies(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Star(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Wand(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class ForallDet(Assertion):
    name: str
    tag: SetTag
    body: Assertion


@dataclass(frozen=True)
class ExistsDet(Assertion):
    name: str
    tag: SetTag
    body: Assertion


@dataclass(frozen=True)
class ForallRV(Assertion):
    name: str
    space: Type
    body: Assertion


@dataclass(frozen=True)
class ExistsRV(Assertion):
    name: str
    space: Type
    body: Assertion


@dataclass(frozen=True)
class Dist(Assertion):
    """expr is distributed according to measure."""

    expr: Term
    measure: DistExpr


@dataclass(frozen=True)
class Expect(Assertion):
    """The expectation of expr equals value (and total mass is 1)."""

    expr: Term
    value: Term


@dataclass(frozen=True)
class Cov(Assertion):
    """Covariance of two random expressions compared against a bound."""

    left: Term
    right: Term
    op: str
    bound: Term

    def __post_init__(self):
        if self.op not in ("<", "<=", ">", ">=", "="):
            raise ValueError(f"bad comparison {self.op!r}")


@dataclass(frozen=True)
class Own(Assertion):
    expr: Term


@dataclass(frozen=True)
class Cond(Assertion):
    """binder <- expr ~ measure | body.

    The body holds in the space conditioned on expr taking the value
    named by binder; binder scopes over the body only. A tuple binder
    destructures a pair-valued scrutinee componentwise.
    """

    binder: Union[str, Tuple[str, ...]]
    expr: Term
    measure: DistExpr
    body: Assertion

    def binder_names(self) -> Tuple[str, ...]:
        if isinstance(self.binder, str):
            return (self.binder,)
        return tuple(self.binder)


@dataclass(frozen=True)
class Score(Assertion):
    """The likelihood proposition: total mass of the state equals weight."""

    weight: Term


@dataclass(frozen=True)
class NormConst(Assertion):
    """Some positive total mass exists; shorthand for exists k>0. <k>."""


@dataclass(frozen=True)
class Triple(Assertion):
    """{pre} program {binder. post}; consumed only at top level."""

    pre: Assertion
    program: Term
    binder: str
    post: Assertion


def expand_shorthand(a: Assertion) -> Assertion:
    """One layer of definitional expansion for the two abbreviations."""
    from basil.syntax.check import POS_SET
    if isinstance(a, NormConst):
        return ExistsDet("k", POS_SET, Score(Var("k")))
    if isinstance(a, TopOne):
        return Score(RealLit(1))
    return a


def conjuncts(a: Assertion) -> Tuple[Assertion, ...]:
    """Flatten a Star tree into its leaves, left to right."""
    if isinstance(a, Star):
        return conjuncts(a.left) + conjuncts(a.right)
    return (a,)


def star(parts) -> Assertion:
    parts = tuple(parts)
    if not parts:
        return TopOne()
    out = parts[0]
    for p in parts[1:]:
        out = Star(out, p)
    return out


def free_rvs(a: Assertion) -> set:
    """Free random-variable names (uppercase by convention, but this
    collects every free name in scrutinee positions minus bound ones)."""
    if isinstance(a, (Top, TopOne, Bot, NormConst)):
        return set()
    if isinstance(a, (And, Or, Implies, Star, Wand)):
        return free_rvs(a.left) | free_rvs(a.right)
    if isinstance(a, (ForallDet, ExistsDet)):
        return free_rvs(a.body)
    if isinstance(a, (ForallRV, ExistsRV)):
        return free_rvs(a.body) - {a.name}
    if isinstance(a, Dist):
        return set(free_vars(a.expr))
    if isinstance(a, Expect):
        return set(free_vars(a.expr))
    if isinstance(a, Cov):
        return set(free_vars(a.left)) | set(free_vars(a.right))
    if isinstance(a, Own):
        return set(free_vars(a.expr))
    if isinstance(a, Cond):
        return set(free_vars(a.expr)) | free_rvs(a.body)
    if isinstance(a, Score):
        return set()
    if isinstance(a, Triple):
        return free_rvs(a.pre) | (free_rvs(a.post) - {a.binder})
    raise TypeError(f"free_rvs: {type(a).__name__}")


def subst(a: Assertion, target: str, replacement: Term) -> Assertion:
    """Capture-avoiding substitution of a random expression for a free
    random-variable name. Measure parameters mention metavariables only,
    so they are never rewritten; conditioning binders live in the other
    namespace and cannot capture."""
    def se(t: Term) -> Term:
        return subst_term(t, target, replacement) if target in free_vars(t) else t

    if isinstance(a, (Top, TopOne, Bot, NormConst, Score)):
        return a
    if isinstance(a, (And, Or, Implies, Star, Wand)):
        return type(a)(subst(a.left, target, replacement),
                       subst(a.right, target, replacement))
    if isinstance(a, (ForallDet, ExistsDet)):
        return type(a)(a.name, a.tag, subst(a.body, target, replacement))
    if isinstance(a, (ForallRV, ExistsRV)):
        if a.name == target:
            return a
        if a.name in free_vars(replacement):
            fresh = _fresh(a.name, free_vars(replacement) | free_rvs(a.body))
            body = subst(a.body, a.name, Var(fresh))
            return type(a)(fresh, a.space, subst(body, target, replacement))
        return type(a)(a.name, a.space, subst(a.body, target, replacement))
    if isinstance(a, Dist):
        return Dist(se(a.expr), a.measure)
    if isinstance(a, Expect):
        return Expect(se(a.expr), a.value)
    if isinstance(a, Cov):
        return Cov(se(a.left), se(a.right), a.op, a.bound)
    if isinstance(a, Own):
        return Own(se(a.expr))
    if isinstance(a, Cond):
        return Cond(a.binder, se(a.expr), a.measure,
                    subst(a.body, target, replacement))
    if isinstance(a, Triple):
        post = a.post if a.binder == target else subst(
            a.post, target, replacement)
        return Triple(subst(a.pre, target, replacement),
                      a.program, a.binder, post)
    raise TypeError(f"subst: {type(a).__name__}")


def subst_det(a: Assertion, target: str, replacement: Term) -> Assertion:
    """Substitute for a deterministic metavariable: rewrites measure
    parameters, likelihood weights, expectation values, and any det-expr
    position, respecting the binders that scope metavariables."""
    def se(t: Term) -> Term:
        return subst_term(t, target, replacement) if target in free_vars(t) else t

    def sm(m: DistExpr) -> DistExpr:
        return dist.subst_param_terms(m, target, replacement)

    if isinstance(a, (Top, TopOne, Bot, NormConst)):
        return a
    if isinstance(a, (And, Or, Implies, Star, Wand)):
        return type(a)(subst_det(a.left, target, replacement),
                       subst_det(a.right, target, replacement))
    if isinstance(a, (ForallDet, ExistsDet)):
        if a.name == target:
            return a
        return type(a)(a.name, a.tag, subst_det(a.body, target, replacement))
    if isinstance(a, (ForallRV, ExistsRV)):
        return type(a)(a.name, a.space, subst_det(a.body, target, replacement))
    if isinstance(a, Dist):
        return Dist(se(a.expr), sm(a.measure))
    if isinstance(a, Expect):
        return Expect(se(a.expr), se(a.value))
    if isinstance(a, Cov):
        return Cov(se(a.left), se(a.right), a.op, se(a.bound))
    if isinstance(a, Own):
        return Own(se(a.expr))
    if isinstance(a, Cond):
        if target in a.binder_names():
            return Cond(a.binder, se(a.expr), sm(a.measure), a.body)
        return Cond(a.binder, se(a.expr), sm(a.measure),
                    subst_det(a.body, target, replacement))
    if isinstance(a, Score):
        return Score(se(a.weight))
    if isinstance(a, Triple):
        return Triple(subst_det(a.pre, target, replacement), a.program,
                      a.binder, subst_det(a.post, target, replacement))
    raise TypeError(f"subst_det: {type(a).__name__}")


def _fresh(base: str, taken) -> str:
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"
