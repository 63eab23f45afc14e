"""Finite probability models for brute-force checking of the logic."""

from .model import (
    MAX_ATOMS,
    DominationError,
    FinModelError,
    FiniteModel,
    FiniteRV,
    FiniteSpace,
    ZeroMass,
    coord_rv,
    disintegrate,
    disintegrate_atoms,
    indep_combine,
    kripke_leq,
    pushforward,
    scale_by_likelihood,
    unit_model,
)
from .sat import EnumerationCap, SatCaps, satisfies
from .suites import (
    DEFAULT_TRIALS,
    RULE_SUITES,
    Counterexample,
    Pass,
    check_entailment,
    run_suite,
)

__all__ = [
    "MAX_ATOMS",
    "DominationError",
    "FinModelError",
    "FiniteModel",
    "FiniteRV",
    "FiniteSpace",
    "ZeroMass",
    "coord_rv",
    "disintegrate",
    "disintegrate_atoms",
    "indep_combine",
    "kripke_leq",
    "pushforward",
    "scale_by_likelihood",
    "unit_model",
    "EnumerationCap",
    "SatCaps",
    "satisfies",
    "DEFAULT_TRIALS",
    "RULE_SUITES",
    "Counterexample",
    "Pass",
    "check_entailment",
    "run_suite",
]
