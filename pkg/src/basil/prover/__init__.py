"""Symbolic posterior derivation over separating assertions."""

from basil.prover.engine import (
    Fail, Stuck, entail, query_expectation, strongest_post, verify,
)
from basil.prover.rules import RULE_DB, aci_equal, canonical
from basil.prover.trace import (
    ALL_RULES, ENTAIL_RULES, HOARE_RULES, ProofStep, ProofTrace,
)

__all__ = [
    "verify", "strongest_post", "entail", "query_expectation",
    "Stuck", "Fail", "ProofStep", "ProofTrace",
    "RULE_DB", "canonical", "aci_equal",
    "ALL_RULES", "ENTAIL_RULES", "HOARE_RULES",
]
