"""Evaluation of deterministic expressions to Python values.

Values are Fraction (exact rationals), float, bool, None for unit,
tuples for pairs, and ground distribution objects for applied
distribution constructors. Arithmetic stays in Fraction as long as both
operands are rational; transcendental functions drop to float.
"""

from __future__ import annotations

from typing import Mapping

from basil.syntax import builtins as bi
from basil.syntax.terms import (
    Builtin, BoolLit, Fst, If, NatLit, Pair, RealLit, Snd, Term, UnitLit, Var,
)


class EvalError(Exception):
    pass


def eval_det(t: Term, env: Mapping[str, object] = None):
    env = env or {}
    if isinstance(t, UnitLit):
        return None
    if isinstance(t, NatLit):
        return t.n
    if isinstance(t, RealLit):
        return t.val
    if isinstance(t, BoolLit):
        return t.b
    if isinstance(t, Var):
        if t.name in env:
            return env[t.name]
        raise EvalError(f"unbound variable {t.name!r}")
    if isinstance(t, Pair):
        return (eval_det(t.fst, env), eval_det(t.snd, env))
    if isinstance(t, Fst):
        return _project(eval_det(t.arg, env), 0)
    if isinstance(t, Snd):
        return _project(eval_det(t.arg, env), 1)
    if isinstance(t, If):
        c = eval_det(t.cond, env)
        if not isinstance(c, bool):
            raise EvalError(f"if condition evaluated to non-boolean {c!r}")
        return eval_det(t.then, env) if c else eval_det(t.els, env)
    if isinstance(t, Builtin):
        sig = bi.lookup(t.fn)
        if sig is None:
            raise EvalError(f"unknown function {t.fn!r}")
        vals = [eval_det(a, env) for a in t.args]
        if sig.kind == "dist":
            from basil import dist
            return dist.make_ground(t.fn, vals)
        try:
            return sig.fn(*vals)
        except (ZeroDivisionError, ValueError, OverflowError) as e:
            raise EvalError(f"{t.fn} failed: {e}") from e
    raise EvalError(
        f"{type(t).__name__} is not a deterministic expression")


def _project(v, idx: int):
    if not isinstance(v, tuple) or len(v) != 2:
        raise EvalError(f"projection applied to non-pair {v!r}")
    return v[idx]


def _lit(v) -> Term:
    if isinstance(v, bool):
        return BoolLit(v)
    if v is None:
        return UnitLit()
    from fractions import Fraction
    if isinstance(v, (int, Fraction)):
        return RealLit(Fraction(v))
    raise EvalError(f"cannot embed {v!r} as a literal")


def fold_constants(t: Term) -> Term:
    """Simplify a deterministic expression by exact partial evaluation.

    Fully-literal builtin applications are computed (only when the result
    stays rational or boolean), if-branches with a literal condition are
    taken, and the usual unit laws for + and * are applied. The result is
    equal to the input on every environment.
    """
    from basil.syntax.terms import _rebuild, children
    kids = tuple(fold_constants(c) for c in children(t))
    t = _rebuild(t, kids)
    if isinstance(t, If) and isinstance(t.cond, BoolLit):
        return t.then if t.cond.b else t.els
    if isinstance(t, Fst) and isinstance(t.arg, Pair):
        return t.arg.fst
    if isinstance(t, Snd) and isinstance(t.arg, Pair):
        return t.arg.snd
    if not isinstance(t, Builtin):
        return t
    if all(isinstance(a, (RealLit, NatLit, BoolLit)) for a in t.args):
        sig = bi.lookup(t.fn)
        if sig is not None and sig.kind == "fn":
            try:
                v = sig.fn(*[eval_det(a) for a in t.args])
            except (EvalError, ZeroDivisionError, ValueError, OverflowError):
                return t
            if isinstance(v, float):
                return t
            return _lit(v)
    if t.fn == "*":
        a, b = t.args
        if _is_lit(a, 0) or _is_lit(b, 0):
            return RealLit(0)
        if _is_lit(a, 1):
            return b
        if _is_lit(b, 1):
            return a
    if t.fn == "+":
        a, b = t.args
        if _is_lit(a, 0):
            return b
        if _is_lit(b, 0):
            return a
    if t.fn == "-" and len(t.args) == 2 and _is_lit(t.args[1], 0):
        return t.args[0]
    if t.fn in ("/", "^") and _is_lit(t.args[1], 1):
        return t.args[0]
    return t


def _is_lit(t: Term, v) -> bool:
    return isinstance(t, RealLit) and t.val == v
