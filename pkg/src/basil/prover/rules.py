"""Rule metadata and the small semantic toolkit the engine leans on.

The checks in here answer yes/no questions about assertions and
measures (is this conjunct affine, are these two measures equal, what
is the exact mean of this expression under that distribution) without
doing any search. The search lives in engine.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from basil import dist
from basil.assertions import (
    Assertion, Cond, Cov, Dist, Expect, NormConst, Own, Score, Star,
    TopOne, conjuncts, star,
)
from basil.syntax import fold_constants
from basil.syntax.evaluate import EvalError, eval_det
from basil.syntax.terms import Builtin, Pair, RealLit, Term, Var

Num = Union[int, Fraction, float]


@dataclass(frozen=True)
class Rule:
    name: str
    kind: str  # "hoare" or "entail"
    about: str


RULE_DB: Dict[str, Rule] = {r.name: r for r in [
    Rule("H-Sample", "hoare", "bind a fresh variable to a closed prior"),
    Rule("H-CondSample", "hoare",
         "sample whose parameters read earlier variables; introduces a"
         " conditioning context"),
    Rule("H-Score", "hoare", "multiply the current measure by a weight"),
    Rule("H-CondScore", "hoare", "score applied inside a conditioning body"),
    Rule("H-Observe", "hoare", "score by the indicator of a predicate"),
    Rule("H-CondObserve", "hoare",
         "observation inside a conditioning body"),
    Rule("H-Return", "hoare", "name the program's result"),
    Rule("H-Let", "hoare", "sequence two statements"),
    Rule("H-Frame", "hoare", "untouched conjuncts pass through"),
    Rule("H-Cons", "hoare", "weaken/rewrite the state between statements"),
    Rule("H-BoundedFor", "hoare", "unroll a loop over a literal list"),
    Rule("E-∗-Ident", "entail", "drop or introduce the unit ⟨1⟩"),
    Rule("E-∗-Comm", "entail", "reorder conjuncts"),
    Rule("E-∗-Assoc", "entail", "flatten nested ∗"),
    Rule("E-∗-Weak", "entail", "drop an affine conjunct"),
    Rule("E-∗-Cong", "entail", "rewrite under ∗"),
    Rule("E-True", "entail", "anything entails ⊤"),
    Rule("E-False", "entail", "⊥ entails anything"),
    Rule("E-∧-Elim", "entail", "use one side of a conjunction"),
    Rule("E-∧-Intro", "entail", "prove both sides against the same state"),
    Rule("E-∨-Intro", "entail", "prove one side of a disjunction"),
    Rule("E-NormConst", "entail",
         "abstract a positive constant weight to NormConst; merge copies"),
    Rule("E-Bayes", "entail",
         "turn a conditioning context with a likelihood body into a"
         " reweighted joint"),
    Rule("E-Likelihood", "entail",
         "replace a conditioned distribution fact by its total mass"),
    Rule("E-Score-Mult", "entail", "multiply constant weights"),
    Rule("E-PairMerge", "entail",
         "combine independent facts into a product over the pair"),
    Rule("E-Marginal", "entail",
         "project a finite joint onto a function of its components"),
    Rule("E-Joint", "entail",
         "flatten a finite conditioning context into a joint table"),
    Rule("E-Expect", "entail", "discharge an expectation from a Dist fact"),
    Rule("E-Cov", "entail", "discharge a covariance bound from a joint"),
    Rule("E-MeasEq", "entail",
         "replace a measure by an equal or normalized form"),
]}


# ---------------------------------------------------------------------------
# Star-ACI canonical form


def canonical(a: Assertion) -> Assertion:
    """Flatten ∗, drop redundant units, sort conjuncts by rendering.

    Two assertions equal up to associativity, commutativity, and the
    ⟨1⟩ unit of ∗ canonicalize to the same tree.
    """
    parts = []
    for c in conjuncts(a):
        if isinstance(c, Star):  # pragma: no cover - conjuncts flattens
            continue
        if isinstance(c, Cond):
            c = Cond(c.binder, c.expr, c.measure, canonical(c.body))
        parts.append(c)
    kept = [c for c in parts if not _is_unit(c)]
    if not kept:
        return TopOne()
    from basil.assertions import render_assertion
    kept.sort(key=render_assertion)
    return star(kept)


def _is_unit(c: Assertion) -> bool:
    if isinstance(c, TopOne):
        return True
    return (isinstance(c, Score)
            and const_value(c.weight) == Fraction(1))


def aci_equal(a: Assertion, b: Assertion) -> bool:
    return canonical(a) == canonical(b)


# ---------------------------------------------------------------------------
# Numeric evaluation of closed deterministic terms


def const_eval(t: Term, env: Optional[Dict[str, Num]] = None) -> Num:
    """Evaluate a deterministic term, exactly when the operations allow.

    Raises EvalError on free variables without bindings.
    """
    return eval_det(fold_constants(t), env or {})


def const_value(t: Term) -> Optional[Num]:
    try:
        return const_eval(t)
    except (EvalError, ZeroDivisionError, ValueError, OverflowError):
        return None


def nums_close(x: Num, y: Num, tol: float = 1e-9) -> bool:
    if isinstance(x, tuple) or isinstance(y, tuple):
        return (isinstance(x, tuple) and isinstance(y, tuple)
                and len(x) == len(y)
                and all(nums_close(p, q, tol) for p, q in zip(x, y)))
    if not isinstance(x, float) and not isinstance(y, float):
        return Fraction(x) == Fraction(y)
    return math.isclose(float(x), float(y), rel_tol=tol, abs_tol=1e-12)


# ---------------------------------------------------------------------------
# Affine conjuncts (safe to drop under ∗)


def is_affine(a: Assertion) -> bool:
    """True when the conjunct holds of some mass-1 sub-state.

    Such conjuncts can be weakened away without disturbing the total
    mass bookkeeping of the remaining ones.
    """
    if isinstance(a, (TopOne, Own, Expect, Cov)):
        return True
    if isinstance(a, Score):
        return const_value(a.weight) == Fraction(1)
    if isinstance(a, Dist):
        return measure_is_probability(a.measure)
    if isinstance(a, Cond):
        return all(is_affine(c) for c in conjuncts(a.body)) \
            and measure_is_probability(a.measure)
    if isinstance(a, Star):
        return all(is_affine(c) for c in conjuncts(a))
    return False


def measure_is_probability(m: dist.DistExpr) -> bool:
    try:
        total = dist.total_mass(m)
    except Exception:
        return False
    if total is dist.UNKNOWN or total is None:
        return False
    if total == math.inf:
        return False
    return nums_close(total, 1, tol=1e-12)


# ---------------------------------------------------------------------------
# Measure equality


def measure_equal(m1: dist.DistExpr, m2: dist.DistExpr) -> bool:
    s1, s2 = dist.simplify(m1), dist.simplify(m2)
    if s1 == s2:
        return True
    if _param_shape_equal(s1, s2):
        return True
    r1, r2 = ground_rows(s1), ground_rows(s2)
    if r1 is not None and r2 is not None:
        return _rows_equal(r1, r2)
    return False


def _param_shape_equal(a: dist.DistExpr, b: dist.DistExpr) -> bool:
    """Same constructor with numerically equal ground parameters."""
    if a.__class__ is not b.__class__:
        return False
    if isinstance(a, dist.NAMED_FAMILIES):
        pa, pb = dist.params_of(a), dist.params_of(b)
        return len(pa) == len(pb) and all(
            _term_num_equal(x, y) for x, y in zip(pa, pb))
    if isinstance(a, dist.Dirac):
        return _term_num_equal(a.v, b.v)
    if isinstance(a, dist.Product):
        return (_param_shape_equal(a.left, b.left)
                and _param_shape_equal(a.right, b.right))
    if isinstance(a, dist.Scaled):
        return (_term_num_equal(a.k, b.k)
                and _param_shape_equal(a.base, b.base))
    if isinstance(a, dist.LebesgueNonNeg):
        return True
    return False


def _term_num_equal(x, y) -> bool:
    vx = const_value(x) if isinstance(x, Term) else x
    vy = const_value(y) if isinstance(y, Term) else y
    if vx is None or vy is None:
        # open parameters: equal only as identical terms
        return isinstance(x, Term) and isinstance(y, Term) and x == y
    return nums_close(vx, vy)


def ground_rows(m: dist.DistExpr) -> Optional[List[Tuple[Num, Num]]]:
    try:
        rows = dist.finite_support(m)
    except Exception:
        return None
    if rows is None:
        return None
    out = []
    for v, w in rows:
        vv = const_value(v) if isinstance(v, Term) else v
        ww = const_value(w) if isinstance(w, Term) else w
        if vv is None or ww is None:
            return None
        out.append((vv, ww))
    return out


def _rows_equal(r1, r2) -> bool:
    def norm(rows):
        agg: Dict = {}
        for v, w in rows:
            key = _row_key(v)
            agg[key] = agg.get(key, Fraction(0)) + w
        return {k: w for k, w in agg.items() if w != 0}

    n1, n2 = norm(r1), norm(r2)
    if set(n1) != set(n2):
        return False
    return all(nums_close(n1[k], n2[k]) for k in n1)


def _row_key(v):
    if isinstance(v, tuple):
        return tuple(_row_key(x) for x in v)
    if isinstance(v, float):
        return ("f", round(v, 12))
    return ("q", Fraction(v))


# ---------------------------------------------------------------------------
# Exact moments of an expression under a Dist fact


def pattern_env(pattern: Term, value) -> Optional[Dict[str, Num]]:
    """Bind the variables of a Var/Pair pattern to a support point."""
    if isinstance(pattern, Var):
        return {pattern.name: value}
    if isinstance(pattern, Pair):
        if not isinstance(value, tuple) or len(value) != 2:
            return None
        left = pattern_env(pattern.fst, value[0])
        right = pattern_env(pattern.snd, value[1])
        if left is None or right is None:
            return None
        overlap = set(left) & set(right)
        if any(left[k] != right[k] for k in overlap):
            return None
        left.update(right)
        return left
    return None


def exact_expectation(pattern: Term, m: dist.DistExpr,
                      expr: Term) -> Optional[Num]:
    """E[expr] where pattern ~ m, by direct summation or closed moments.

    Returns None when no exact (or ground numeric) route exists. The
    measure must be a probability for the result to be an expectation;
    callers check that separately.
    """
    rows = ground_rows(m)
    if rows is not None:
        total = sum(w for _, w in rows)
        if total == 0:
            return None
        acc = None
        for v, w in rows:
            env = pattern_env(pattern, v)
            if env is None:
                return None
            try:
                val = const_eval(expr, env)
            except (EvalError, ZeroDivisionError, ValueError):
                return None
            term = w * _as_number(val)
            acc = term if acc is None else acc + term
        return acc / total if acc is not None else None
    if isinstance(pattern, Var):
        shape = _moment_shape(expr, pattern.name)
        if shape is None:
            return None
        try:
            mom = dist.moments(m)
        except Exception:
            return None
        if mom is dist.UNKNOWN or mom is None:
            return None
        if shape == 1:
            return mom.mean
        return mom.variance + mom.mean * mom.mean
    return None


def _as_number(v) -> Num:
    if isinstance(v, bool):
        return int(v)
    return v


def _moment_shape(expr: Term, name: str) -> Optional[int]:
    expr = fold_constants(expr)
    if expr == Var(name):
        return 1
    if isinstance(expr, Builtin) and expr.fn == "*" \
            and expr.args[0] == Var(name) and expr.args[1] == Var(name):
        return 2
    if isinstance(expr, Builtin) and expr.fn == "^" \
            and expr.args[0] == Var(name) \
            and const_value(expr.args[1]) == 2:
        return 2
    return None
