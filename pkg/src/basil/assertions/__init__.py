"""Assertion language: AST, well-formedness, substitution, parsing,
and rendering."""

from basil.assertions.nodes import (
    And, Assertion, Bot, Cond, Cov, Dist, ExistsDet, ExistsRV, Expect,
    ForallDet, ForallRV, Implies, NormConst, Or, Own, Score, Star, Top,
    TopOne, Triple, Wand,
    conjuncts, expand_shorthand, free_rvs, star, subst, subst_det,
)
from basil.assertions.check import check_measure, typecheck_assertion
from basil.assertions.parse import ASSERTION_STOPS, parse_assertion
from basil.assertions.render import render_assertion

__all__ = [
    "And", "Assertion", "Bot", "Cond", "Cov", "Dist", "ExistsDet",
    "ExistsRV", "Expect", "ForallDet", "ForallRV", "Implies", "NormConst",
    "Or", "Own", "Score", "Star", "Top", "TopOne", "Triple", "Wand",
    "conjuncts", "expand_shorthand", "free_rvs", "star", "subst",
    "subst_det", "check_measure", "typecheck_assertion",
    "ASSERTION_STOPS", "parse_assertion", "render_assertion",
]
