"""Shared result shapes, error types, and query plumbing for the oracles."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple

from basil.syntax.evaluate import eval_det
from basil.syntax.parser import parse_expr
from basil.syntax.terms import Term, Var, free_vars
from basil.syntax.terms import is_sugar_free


class NotFiniteSupport(Exception):
    """A sample site draws from a measure without finite support."""


class DimensionTooHigh(Exception):
    """More continuous sample sites than the quadrature oracle integrates."""


class AllZeroWeights(Exception):
    """Every sampled trace scored to zero; the posterior is undefined
    as far as this run can tell."""


@dataclass(frozen=True)
class WeightedTrace:
    env: Tuple[Tuple[str, object], ...]
    weight: float
    ret: object


@dataclass(frozen=True)
class Estimate:
    est: object          # Fraction for exact results, float otherwise
    se: Optional[float]  # 0.0 in exact/quadrature modes, None when undefined


@dataclass(frozen=True)
class QueryEstimate:
    expr: str
    est: object
    se: Optional[float]


@dataclass(frozen=True)
class Query:
    """A deterministic expression over the program's return value.

    The return value is bound to `binder` (default "ret") while the
    expression is evaluated, so "fst(ret)" extracts the first component
    of a pair-valued program.
    """

    expr: str
    term: Term = field(compare=False)
    binder: str = "ret"

    @staticmethod
    def parse(text: str, binder: str = "ret") -> "Query":
        term = parse_expr(text)
        unknown = free_vars(term) - {binder}
        if unknown:
            raise ValueError(
                f"query {text!r} mentions {sorted(unknown)}; only "
                f"{binder!r} is in scope")
        return Query(text, term, binder)

    def eval(self, ret, env=None):
        local = dict(env or {})
        local[self.binder] = ret
        return eval_det(self.term, local)


def identity_query(binder: str = "ret") -> Query:
    return Query(binder, Var(binder), binder)


def make_queries(texts, binder: str = "ret"):
    if not texts:
        return (identity_query(binder),)
    return tuple(Query.parse(t, binder) for t in texts)


@dataclass(frozen=True)
class PosteriorEstimate:
    mode: str  # "exact" | "quadrature" | "monte-carlo"
    normconst: Estimate
    queries: Tuple[QueryEstimate, ...]
    n: Optional[int] = None
    seed: Optional[int] = None

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "normconst": {"est": _num(self.normconst.est),
                          "se": _num(self.normconst.se)},
            "queries": [{"expr": q.expr, "est": _num(q.est), "se": _num(q.se)}
                        for q in self.queries],
            "n": self.n,
            "seed": self.seed,
        }


def _num(v):
    if v is None:
        return None
    if isinstance(v, Fraction):
        return float(v)
    return float(v)


def require_core(t: Term, who: str):
    if not is_sugar_free(t):
        raise ValueError(f"{who} expects a desugared term; run desugar first")
