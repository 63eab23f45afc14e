"""Quadrature oracle: trace integrals with at most two continuous sample
sites evaluated by nested adaptive Simpson; discrete sites are summed.

The walk is continuation-passing: integrating a statement means
integrating its weight against the continuation that runs the rest of
the program, which is exactly the shape of the let-rule's integral."""

from __future__ import annotations

from basil import dist
from basil.interp.base import (
    DimensionTooHigh, Estimate, PosteriorEstimate, QueryEstimate,
    identity_query, require_core,
)
from basil.numerics import adaptive_simpson
from basil.syntax.evaluate import EvalError, eval_det
from basil.syntax.terms import If, Let, Ret, Sample, Score, Term

_MAX_CONTINUOUS = 2


def quadrature_posterior(program: Term, queries=None, env=None,
                         tol: float = 1e-10) -> PosteriorEstimate:
    """Normalizing constant and posterior expectations, each computed to
    an absolute integration tolerance well inside the reported 1e-8."""
    require_core(program, "quadrature_posterior")
    queries = tuple(queries) if queries else (identity_query(),)
    base_env = dict(env or {})

    def mass_k(v, _env, _depth):
        return 1.0

    normconst = _run(program, base_env, mass_k, 0, tol)
    out = []
    for q in queries:
        if normconst <= 0:
            out.append(QueryEstimate(q.expr, None, None))
            continue

        def query_k(v, _env, _depth, q=q):
            return float(q.eval(v, env))

        raw = _run(program, base_env, query_k, 0, tol)
        out.append(QueryEstimate(q.expr, raw / normconst, 0.0))
    return PosteriorEstimate(
        mode="quadrature",
        normconst=Estimate(float(normconst), 0.0),
        queries=tuple(out),
    )


def _run(t: Term, env, k, depth: int, tol: float):
    """∫ weight(t) × k(value of t) over t's randomness, continuing with
    the environment extended by t's bindings."""
    if isinstance(t, Ret):
        return k(eval_det(t.value, env), env, depth)
    if isinstance(t, Score):
        w = eval_det(t.weight, env)
        if w < 0:
            w = 0
        if w == 0:
            return 0
        return w * k(None, env, depth)
    if isinstance(t, If):
        c = eval_det(t.cond, env)
        return _run(t.then if c else t.els, env, k, depth, tol)
    if isinstance(t, Let):
        def bind_k(v, env2, d2):
            inner = env2
            if t.name != "_":
                inner = dict(env2)
                inner[t.name] = v
            return _run(t.body, inner, k, d2, tol)

        return _run(t.bound, env, bind_k, depth, tol)
    if isinstance(t, Sample):
        d = eval_det(t.dist, env)
        if not isinstance(d, dist.DistExpr):
            raise EvalError(f"sample applied to non-distribution {d!r}")
        rows = dist.truncated_support(d, 1e-15, env)
        if rows is not None:
            total = 0
            for v, w in rows:
                if w == 0:
                    continue
                total += w * k(v, env, depth)
            return total
        if not dist.is_continuous(d):
            raise EvalError(f"cannot integrate over {dist.render(d)}")
        if depth >= _MAX_CONTINUOUS:
            raise DimensionTooHigh(
                f"program has more than {_MAX_CONTINUOUS} continuous "
                f"sample sites on one path")
        lo, hi = dist.quad_bounds(d, env)

        def g(x: float) -> float:
            w = float(dist.density(d, x, env))
            if w == 0.0:
                return 0.0
            return w * k(x, env, depth + 1)

        return adaptive_simpson(g, lo, hi, tol=tol / (10.0 ** depth))
    raise EvalError(f"cannot integrate {type(t).__name__}")
