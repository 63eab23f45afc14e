"""Desugaring pass: rewrite the four surface conveniences into core terms.

    M ; N                  -->  let _ = M in N
    observe(C)             -->  score(if C then 1 else 0)
    observe E from D(args) -->  score(density_D(E, args))
    for x in [e1,..,en] do M -->  M[e1/x] ; ... ; M[en/x]   (return () if empty)

The pass is idempotent: running it on core terms is the identity.
Spans of introduced nodes point back at the sugar they came from.
"""

from __future__ import annotations

from fractions import Fraction

from basil.syntax import builtins as bi
from basil.syntax.terms import (
    Builtin, For, If, Let, Observe, ObserveFrom, RealLit, Ret, Score, Seq,
    Term, UnitLit, _rebuild, children, subst_term,
)
from basil.syntax.parser import ParseError


def desugar(t: Term) -> Term:
    kids = tuple(desugar(c) for c in children(t))
    t = _rebuild(t, kids)
    if isinstance(t, Seq):
        return Let("_", t.first, t.second, span=t.span)
    if isinstance(t, Observe):
        one = RealLit(Fraction(1), span=t.span)
        zero = RealLit(Fraction(0), span=t.span)
        return Score(If(t.cond, one, zero, span=t.span), span=t.span)
    if isinstance(t, ObserveFrom):
        d = t.dist
        if not isinstance(d, Builtin) or d.fn not in bi.DENSITY_OF:
            sp = t.span
            raise ParseError(
                f"observe ... from needs a known distribution family, got "
                f"{getattr(d, 'fn', type(d).__name__)!r}",
                sp.line if sp else 0, sp.col if sp else 0)
        dens = bi.DENSITY_OF[d.fn]
        return Score(Builtin(dens, (t.value,) + d.args, span=t.span), span=t.span)
    if isinstance(t, For):
        if not t.items:
            return Ret(UnitLit(span=t.span), span=t.span)
        steps = [subst_term(t.body, t.var, item) for item in t.items]
        body = steps[-1]
        for step in reversed(steps[:-1]):
            body = Let("_", step, body, span=t.span)
        return body
    return t
