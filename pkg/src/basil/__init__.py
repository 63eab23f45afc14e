"""basil: a verifier and inference workbench for a small Bayesian PPL.

The language has sample, score, return and let; observation is hard or soft
conditioning encoded through score. The workbench typechecks programs,
derives posteriors symbolically with a separation-logic proof engine,
cross-checks every symbolic answer against independent numeric oracles, and
brute-force-checks the logic's entailment rules on finite probability models.
"""

__version__ = "0.1.0"
