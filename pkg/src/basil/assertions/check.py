"""Well-formedness of assertions.

Reuses the term typechecker: scrutinees are checked with the full
context (random variables in Delta, metavariables in Gamma), while
measure parameters, likelihood weights, and expectation values must be
deterministic over Gamma alone. Rule names in errors follow the
T-prefix convention so failures can be traced to a specific judgment.
"""

from __future__ import annotations

from typing import Optional

from basil import dist
from basil.assertions import nodes as A
from basil.syntax.check import (
    BOOL_SET, NAT_SET, R_SET, SetTag, TypeError_, TypingContext, check_det,
)
from basil.syntax.terms import (
    BOOL, NAT, Prod, REAL, Term, Type,
)


def _gamma_only(ctx: TypingContext) -> TypingContext:
    return TypingContext((), ctx.gamma)


def _check_param(ctx: TypingContext, p, rule: str) -> None:
    if isinstance(p, Term):
        check_det(_gamma_only(ctx), p)


def check_measure(ctx: TypingContext, m: dist.DistExpr,
                  rule: str = "T-Meas") -> Optional[Type]:
    """Parameters must be deterministic over Gamma; returns the space the
    measure lives on when that is structurally evident."""
    for p in dist.params_of(m):
        _check_param(ctx, p, rule)
    if isinstance(m, (dist.Bern, dist.Unif, dist.Normal, dist.Beta,
                      dist.Gamma, dist.Exp, dist.LebesgueNonNeg)):
        return REAL
    if isinstance(m, dist.Poisson):
        return REAL
    if isinstance(m, dist.Dirac):
        _check_param(ctx, m.v, rule)
        return None
    if isinstance(m, dist.DiscreteTable):
        for v, w in m.rows:
            _check_param(ctx, v, rule)
            _check_param(ctx, w, rule)
        return None
    if isinstance(m, dist.Product):
        lt = check_measure(ctx, m.left, rule)
        rt = check_measure(ctx, m.right, rule)
        if lt is None or rt is None:
            return None
        return Prod(lt, rt)
    if isinstance(m, dist.Weighted):
        inner = ctx
        for name in dist._binder_names(m):
            inner = inner.extend_gamma(name, R_SET)
        check_det(_gamma_only(inner), m.density)
        return check_measure(ctx, m.base, rule)
    if isinstance(m, dist.Scaled):
        _check_param(ctx, m.k, rule)
        return check_measure(ctx, m.base, rule)
    return None


def _tag_for(ty: Type) -> SetTag:
    if ty == NAT:
        return NAT_SET
    if ty == BOOL:
        return BOOL_SET
    if ty == REAL:
        return R_SET
    return SetTag("space", ty)


def _widen(ty: Type) -> Type:
    return REAL if ty == NAT else ty


def typecheck_assertion(ctx: Optional[TypingContext], a: A.Assertion) -> None:
    """Raise TypeError_ naming the violated judgment; None on success."""
    if ctx is None:
        ctx = TypingContext()
    if isinstance(a, (A.Top, A.TopOne, A.Bot, A.NormConst)):
        return
    if isinstance(a, (A.And, A.Or, A.Implies, A.Star, A.Wand)):
        typecheck_assertion(ctx, a.left)
        typecheck_assertion(ctx, a.right)
        return
    if isinstance(a, (A.ForallDet, A.ExistsDet)):
        typecheck_assertion(ctx.extend_gamma(a.name, a.tag), a.body)
        return
    if isinstance(a, (A.ForallRV, A.ExistsRV)):
        typecheck_assertion(ctx.extend_delta(a.name, a.space), a.body)
        return
    if isinstance(a, A.Dist):
        try:
            ety = check_det(ctx, a.expr)
        except TypeError_ as e:
            raise TypeError_(f"scrutinee: {e.msg}", rule="T-RandExpr") from None
        mty = check_measure(ctx, a.measure)
        if mty is not None and _widen(ety) != _widen(mty):
            raise TypeError_(
                f"expression of type {ety} against a measure on {mty}",
                rule="T-Dist")
        return
    if isinstance(a, A.Expect):
        try:
            ety = check_det(ctx, a.expr)
            vty = check_det(_gamma_only(ctx), a.value)
        except TypeError_ as e:
            raise TypeError_(e.msg, rule="T-Expect", span=e.span) from None
        if _widen(ety) != REAL:
            raise TypeError_(f"expectation of a {ety} expression",
                             rule="T-Expect")
        if _widen(vty) != REAL:
            raise TypeError_(f"expected value has type {vty}", rule="T-Expect")
        return
    if isinstance(a, A.Cov):
        for side in (a.left, a.right):
            ety = check_det(ctx, side)
            if _widen(ety) != REAL:
                raise TypeError_(f"covariance of a {ety} expression",
                                 rule="T-Cov")
        bty = check_det(_gamma_only(ctx), a.bound)
        if _widen(bty) != REAL:
            raise TypeError_(f"covariance bound has type {bty}", rule="T-Cov")
        return
    if isinstance(a, A.Own):
        try:
            check_det(ctx, a.expr)
        except TypeError_ as e:
            raise TypeError_(f"own: {e.msg}", rule="T-Own") from None
        return
    if isinstance(a, A.Cond):
        try:
            ety = check_det(ctx, a.expr)
        except TypeError_ as e:
            raise TypeError_(f"scrutinee: {e.msg}", rule="T-Conditioning") from None
        mty = check_measure(ctx, a.measure)
        if mty is not None and _widen(ety) != _widen(mty):
            raise TypeError_(
                f"conditioning a {ety} expression on a measure over {mty}",
                rule="T-Conditioning")
        names = a.binder_names()
        inner = ctx
        if len(names) == 1:
            inner = inner.extend_gamma(names[0], _tag_for(ety))
        else:
            parts = _components(ety, len(names))
            if parts is None:
                raise TypeError_(
                    f"binder ({', '.join(names)}) destructures a {ety} value",
                    rule="T-Conditioning")
            for n, ty in zip(names, parts):
                inner = inner.extend_gamma(n, _tag_for(ty))
        typecheck_assertion(inner, a.body)
        return
    if isinstance(a, A.Score):
        try:
            wty = check_det(_gamma_only(ctx), a.weight)
        except TypeError_ as e:
            raise TypeError_(e.msg, rule="T-Likelihood", span=e.span) from None
        if _widen(wty) != REAL:
            raise TypeError_(f"likelihood has type {wty}", rule="T-Likelihood")
        return
    if isinstance(a, A.Triple):
        from basil.syntax.check import check_prob
        typecheck_assertion(ctx, a.pre)
        rty = check_prob(ctx, a.program)
        typecheck_assertion(ctx.extend_delta(a.binder, rty), a.post)
        return
    raise TypeError_(f"unknown assertion {type(a).__name__}", rule="T-Hoare")


def _components(ty: Type, n: int):
    parts = []
    while isinstance(ty, Prod) and len(parts) < n - 1:
        parts.append(ty.fst)
        ty = ty.snd
    parts.append(ty)
    return parts if len(parts) == n else None
