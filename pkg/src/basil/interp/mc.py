"""Likelihood-weighting Monte Carlo oracle.

Traces are drawn from the program's own priors; score statements
multiply into an importance weight. Randomness comes from one Philox
counter-based stream per static sample site, keyed by (seed, site), with
the trace index selecting the row — so run i, site j sees the same
uniform regardless of how many traces run or in what order, and parallel
splits of the trace range would reproduce bit-for-bit.

Programs are compiled to closures once; the per-trace loop then does no
AST dispatch."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import List, Optional

import numpy as np

from basil import dist
from basil.interp.base import (
    AllZeroWeights, Estimate, PosteriorEstimate, QueryEstimate,
    WeightedTrace, identity_query, require_core,
)
from basil.syntax import builtins as bi
from basil.syntax.evaluate import EvalError
from basil.syntax.terms import (
    BoolLit, Builtin, Fst, If, Let, NatLit, Pair, RealLit, Ret, Sample,
    Score, Snd, Term, UnitLit, Var,
)


class _State:
    __slots__ = ("env", "uniforms", "trace_i", "weight", "log")

    def __init__(self):
        self.env = {}
        self.uniforms = None
        self.trace_i = 0
        self.weight = 1.0
        self.log = None


def _to_float(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, tuple):
        return tuple(_to_float(c) for c in v)
    return v


def compile_expr(t: Term):
    if isinstance(t, UnitLit):
        return lambda env: None
    if isinstance(t, RealLit):
        c = float(t.val)
        return lambda env: c
    if isinstance(t, NatLit):
        c = t.n
        return lambda env: c
    if isinstance(t, BoolLit):
        c = t.b
        return lambda env: c
    if isinstance(t, Var):
        name = t.name
        def var_fn(env):
            try:
                return env[name]
            except KeyError:
                raise EvalError(f"unbound variable {name!r}") from None
        return var_fn
    if isinstance(t, Pair):
        a, b = compile_expr(t.fst), compile_expr(t.snd)
        return lambda env: (a(env), b(env))
    if isinstance(t, Fst):
        a = compile_expr(t.arg)
        return lambda env: a(env)[0]
    if isinstance(t, Snd):
        a = compile_expr(t.arg)
        return lambda env: a(env)[1]
    if isinstance(t, If):
        c = compile_expr(t.cond)
        a, b = compile_expr(t.then), compile_expr(t.els)
        return lambda env: a(env) if c(env) else b(env)
    if isinstance(t, Builtin):
        sig = bi.lookup(t.fn)
        if sig is None:
            raise EvalError(f"unknown function {t.fn!r}")
        args = [compile_expr(a) for a in t.args]
        if sig.kind == "dist":
            name = t.fn
            return lambda env: dist.make_ground(name, [a(env) for a in args])
        fn = sig.fn
        if len(args) == 1:
            a0 = args[0]
            return lambda env: fn(a0(env))
        if len(args) == 2:
            a0, a1 = args
            return lambda env: fn(a0(env), a1(env))
        return lambda env: fn(*[a(env) for a in args])
    raise EvalError(f"cannot compile {type(t).__name__} as an expression")


class _Compiler:
    def __init__(self):
        self.n_sites = 0

    def stmt(self, t: Term):
        if isinstance(t, Ret):
            f = compile_expr(t.value)
            return lambda st: f(st.env)
        if isinstance(t, Score):
            f = compile_expr(t.weight)
            def score_fn(st):
                w = f(st.env)
                st.weight *= float(w) if w > 0 else 0.0
                return None
            return score_fn
        if isinstance(t, Sample):
            idx = self.n_sites
            self.n_sites += 1
            dfn = compile_expr(t.dist)
            def sample_fn(st):
                d = dfn(st.env)
                u = st.uniforms[idx][st.trace_i]
                return _to_float(dist.sample_from_uniform(d, u))
            return sample_fn
        if isinstance(t, Let):
            bound = self.stmt(t.bound)
            body = self.stmt(t.body)
            name = t.name
            def let_fn(st):
                v = bound(st)
                if name != "_":
                    st.env[name] = v
                    if st.log is not None:
                        st.log.append((name, v))
                return body(st)
            return let_fn
        if isinstance(t, If):
            c = compile_expr(t.cond)
            a, b = self.stmt(t.then), self.stmt(t.els)
            return lambda st: a(st) if c(st.env) else b(st)
        raise EvalError(f"cannot compile {type(t).__name__} as a statement")


def _site_uniforms(seed: int, site: int, n: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=[int(seed) & (2 ** 63 - 1), site])
    gen = np.random.Generator(np.random.Philox(ss))
    u = gen.random(n)
    return np.clip(u, 1e-16, 1.0 - 1e-16)


def _prepare(program: Term, env):
    main = _Compiler()
    run = main.stmt(program)
    base = {k: _to_float(v) for k, v in (env or {}).items()}
    return run, main.n_sites, base


def importance_run(program: Term, queries=None, n: int = 10000,
                   seed: int = 0, env=None) -> PosteriorEstimate:
    if n < 1:
        raise ValueError("need at least one trace")
    require_core(program, "importance_run")
    queries = tuple(queries) if queries else (identity_query(),)
    run, n_sites, base = _prepare(program, env)
    uniforms = [_site_uniforms(seed, i, n) for i in range(n_sites)]

    weights = np.empty(n, dtype=np.float64)
    rets: List[object] = [None] * n
    st = _State()
    st.uniforms = uniforms
    for i in range(n):
        st.env = dict(base)
        st.weight = 1.0
        st.trace_i = i
        rets[i] = run(st)
        weights[i] = st.weight

    wsum = float(weights.sum())
    if wsum == 0.0:
        raise AllZeroWeights(
            f"all {n} traces have zero weight (seed {seed})")
    normconst = wsum / n
    norm_se = float(weights.std(ddof=1)) / math.sqrt(n)

    out = []
    for q in queries:
        qfn = compile_expr(q.term)
        vals = np.empty(n, dtype=np.float64)
        qenv = dict(base)
        for i in range(n):
            qenv[q.binder] = rets[i]
            v = qfn(qenv)
            vals[i] = float(v)
        mean = float(np.dot(weights, vals)) / wsum
        resid = vals - mean
        se = math.sqrt(float(np.dot(weights * weights, resid * resid))) / wsum
        out.append(QueryEstimate(q.expr, mean, se))
    return PosteriorEstimate(
        mode="monte-carlo",
        normconst=Estimate(normconst, norm_se),
        queries=tuple(out),
        n=n,
        seed=seed,
    )


def trace_stream(program: Term, n: int, seed: int = 0,
                 env=None) -> List[WeightedTrace]:
    """The raw weighted traces, mainly for tests and debugging; the
    estimates in importance_run are exactly the statistics of this list."""
    require_core(program, "trace_stream")
    run, n_sites, base = _prepare(program, env)
    uniforms = [_site_uniforms(seed, i, n) for i in range(n_sites)]
    st = _State()
    st.uniforms = uniforms
    out = []
    for i in range(n):
        st.env = dict(base)
        st.weight = 1.0
        st.trace_i = i
        st.log = []
        ret = run(st)
        out.append(WeightedTrace(tuple(st.log), st.weight, ret))
    return out
