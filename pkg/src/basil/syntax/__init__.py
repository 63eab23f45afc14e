"""Abstract syntax, parser, desugarer and typechecker for the surface language."""

from basil.syntax.terms import (
    Span, Type, UNIT, NAT, REAL, BOOL, Prod, Prob,
    Term, UnitLit, Var, NatLit, RealLit, BoolLit, Builtin, Pair, Fst, Snd,
    If, Sample, Score, Ret, Let, Seq, Observe, ObserveFrom, For,
    is_sugar_free, free_vars, subst_term,
)
from basil.syntax.parser import parse, parse_expr, ParseError
from basil.syntax.sugar import desugar
from basil.syntax.check import (
    TypingContext, SetTag, TypeError_, typecheck, check_det, check_prob,
    R_SET, POS_SET, UNIT_INTERVAL, NAT_SET, BOOL_SET,
)
from basil.syntax.pretty import pretty, pretty_expr, format_fraction
from basil.syntax.evaluate import eval_det, fold_constants, EvalError

__all__ = [
    "Span", "Type", "UNIT", "NAT", "REAL", "BOOL", "Prod", "Prob",
    "Term", "UnitLit", "Var", "NatLit", "RealLit", "BoolLit", "Builtin",
    "Pair", "Fst", "Snd", "If", "Sample", "Score", "Ret", "Let",
    "Seq", "Observe", "ObserveFrom", "For",
    "is_sugar_free", "free_vars", "subst_term",
    "parse", "parse_expr", "ParseError", "desugar",
    "TypingContext", "SetTag", "TypeError_", "typecheck",
    "check_det", "check_prob",
    "R_SET", "POS_SET", "UNIT_INTERVAL", "NAT_SET", "BOOL_SET",
    "pretty", "pretty_expr", "format_fraction",
    "eval_det", "fold_constants", "EvalError",
]
