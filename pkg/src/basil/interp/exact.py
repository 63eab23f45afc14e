"""Exact enumeration over programs whose sample sites all have finite
support: sums the trace integral symbolically in rational arithmetic."""

from __future__ import annotations

from fractions import Fraction
from typing import List, Tuple

from basil import dist
from basil.interp.base import (
    Estimate, NotFiniteSupport, PosteriorEstimate, Query, QueryEstimate,
    identity_query, require_core,
)
from basil.syntax.evaluate import EvalError, eval_det
from basil.syntax.terms import If, Let, Ret, Sample, Score, Term


def enumerate_table(program: Term, env=None) -> List[Tuple[object, object]]:
    """Unnormalized posterior as (return value, mass) rows; masses are
    exact whenever every weight along the way is rational."""
    require_core(program, "enumerate_exact")
    rows = _enum(program, dict(env or {}))
    merged = {}
    order = []
    for v, w in rows:
        if v not in merged:
            merged[v] = w
            order.append(v)
        else:
            merged[v] = merged[v] + w
    return [(v, merged[v]) for v in order]


def _enum(t: Term, env) -> List[Tuple[object, object]]:
    if isinstance(t, Ret):
        return [(eval_det(t.value, env), Fraction(1))]
    if isinstance(t, Sample):
        d = eval_det(t.dist, env)
        if not isinstance(d, dist.DistExpr):
            raise EvalError(f"sample applied to non-distribution {d!r}")
        rows = dist.finite_support(d, env)
        if rows is None:
            raise NotFiniteSupport(
                f"{dist.render(d)} has no finite support; use the "
                f"quadrature or monte-carlo oracle")
        return [(v, w) for v, w in rows]
    if isinstance(t, Score):
        w = eval_det(t.weight, env)
        if w < 0:
            w = Fraction(0)
        return [(None, w)]
    if isinstance(t, Let):
        out = []
        for v, w in _enum(t.bound, env):
            if w == 0:
                continue
            inner = dict(env)
            if t.name != "_":
                inner[t.name] = v
            for r, w2 in _enum(t.body, inner):
                out.append((r, w * w2))
        return out
    if isinstance(t, If):
        c = eval_det(t.cond, env)
        return _enum(t.then if c else t.els, env)
    raise EvalError(f"cannot enumerate {type(t).__name__}")


def enumerate_exact(program: Term, queries=None, env=None) -> PosteriorEstimate:
    queries = tuple(queries) if queries else (identity_query(),)
    table = enumerate_table(program, env)
    normconst = sum(w for _, w in table)
    out = []
    for q in queries:
        if normconst == 0:
            out.append(QueryEstimate(q.expr, None, None))
            continue
        acc = Fraction(0)
        for v, w in table:
            acc += _as_frac(q.eval(v, env)) * _as_frac(w)
        out.append(QueryEstimate(q.expr, acc / _as_frac(normconst), 0.0))
    return PosteriorEstimate(
        mode="exact",
        normconst=Estimate(normconst, 0.0),
        queries=tuple(out),
    )


def _as_frac(v):
    if isinstance(v, bool):
        return Fraction(1 if v else 0)
    if isinstance(v, float):
        return v
    return Fraction(v)
