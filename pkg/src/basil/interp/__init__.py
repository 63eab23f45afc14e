"""Numeric posterior oracles: exact enumeration over finite supports,
nested adaptive quadrature for low-dimensional continuous programs, and
likelihood-weighting Monte Carlo for everything else.

All three consume desugared core terms and report the same
PosteriorEstimate shape, so results can be cross-checked mechanically.
"""

from basil.interp.base import (
    AllZeroWeights, DimensionTooHigh, Estimate, NotFiniteSupport,
    PosteriorEstimate, Query, QueryEstimate, WeightedTrace, identity_query,
    make_queries,
)
from basil.interp.exact import enumerate_exact, enumerate_table
from basil.interp.quad import quadrature_posterior
from basil.interp.mc import importance_run, trace_stream

__all__ = [
    "AllZeroWeights", "DimensionTooHigh", "Estimate", "NotFiniteSupport",
    "PosteriorEstimate", "Query", "QueryEstimate", "WeightedTrace",
    "identity_query", "make_queries", "enumerate_exact", "enumerate_table",
    "quadrature_posterior", "importance_run", "trace_stream",
]
