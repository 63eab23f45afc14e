"""Whitelist registry of builtin measurable functions.

The language never quantifies over functions; every function symbol a
program may apply is listed here with its arity, its type signature, and
a ground evaluator. Distribution constructors are part of the same
registry (their evaluators are installed by basil.dist to avoid an import
cycle) so that the typechecker sees a single namespace.

Evaluators keep Fraction arguments rational whenever the operation is
rational-closed; transcendental functions return floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Tuple

from basil.syntax.terms import BOOL, Prob, REAL, Type


@dataclass(frozen=True)
class BuiltinSig:
    name: str
    params: Tuple[Type, ...]
    result: Type
    fn: Optional[Callable]
    kind: str = "fn"          # "fn" | "dist"


def _num(x):
    if isinstance(x, bool):
        raise TypeError("boolean where a number was expected")
    if not isinstance(x, (int, float, Fraction)):
        raise TypeError(f"not a number: {x!r}")
    return x


def _add(a, b):
    return _num(a) + _num(b)


def _sub(a, b):
    return _num(a) - _num(b)


def _mul(a, b):
    return _num(a) * _num(b)


def _div(a, b):
    b = _num(b)
    if b == 0:
        raise ZeroDivisionError("division by zero in program expression")
    return _num(a) / b if not (isinstance(a, int) and isinstance(b, int)) \
        else Fraction(a, b)


def _neg(a):
    return -_num(a)


def _pow(a, b):
    a, b = _num(a), _num(b)
    if isinstance(b, (int, Fraction)) and Fraction(b).denominator == 1:
        return a ** int(b)
    return float(a) ** float(b)


def _exp(a):
    return math.exp(_num(a))


def _log(a):
    a = _num(a)
    if a <= 0:
        raise ValueError("log of a nonpositive number")
    return math.log(a)


def _sqrt(a):
    a = _num(a)
    if a < 0:
        raise ValueError("sqrt of a negative number")
    return math.sqrt(a)


def _indicator(b):
    return Fraction(1) if b else Fraction(0)


_SQRT_2PI = math.sqrt(2.0 * math.pi)


def bern_pmf(x, p):
    if x == 1:
        return p
    if x == 0:
        return 1 - p
    return Fraction(0)


def normal_pdf(x, mean, sd):
    sd = float(sd)
    if sd <= 0:
        raise ValueError("normal sd must be positive")
    z = (float(x) - float(mean)) / sd
    return math.exp(-0.5 * z * z) / (sd * _SQRT_2PI)


def unif_pdf(x, a, b):
    if not a < b:
        raise ValueError("uniform bounds must satisfy a < b")
    if a <= x <= b:
        return 1 / (b - a) if isinstance(b - a, Fraction) else 1.0 / float(b - a)
    return Fraction(0)


def beta_pdf(x, a, b):
    a, b = float(a), float(b)
    if a <= 0 or b <= 0:
        raise ValueError("beta parameters must be positive")
    x = float(x)
    if x < 0 or x > 1:
        return 0.0
    if x == 0.0:
        return 0.0 if a > 1 else (b if a == 1 else math.inf)
    if x == 1.0:
        return 0.0 if b > 1 else (a if b == 1 else math.inf)
    lg = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    return math.exp(lg + (a - 1) * math.log(x) + (b - 1) * math.log(1 - x))


def gamma_pdf(x, shape, scale):
    shape, scale = float(shape), float(scale)
    if shape <= 0 or scale <= 0:
        raise ValueError("gamma parameters must be positive")
    x = float(x)
    if x < 0:
        return 0.0
    if x == 0.0:
        return 0.0 if shape > 1 else (1.0 / scale if shape == 1 else math.inf)
    return math.exp((shape - 1) * math.log(x) - x / scale
                    - math.lgamma(shape) - shape * math.log(scale))


def poisson_pmf(k, rate):
    rate = float(rate)
    if rate <= 0:
        raise ValueError("poisson rate must be positive")
    kf = float(k)
    if kf < 0 or kf != int(kf):
        return 0.0
    k = int(kf)
    return math.exp(k * math.log(rate) - rate - math.lgamma(k + 1))


def exp_pdf(x, rate):
    rate = float(rate)
    if rate <= 0:
        raise ValueError("exponential rate must be positive")
    x = float(x)
    return rate * math.exp(-rate * x) if x >= 0 else 0.0


def dirac_pmf(x, c):
    return Fraction(1) if x == c else Fraction(0)


R = REAL
B = BOOL

REGISTRY: dict[str, BuiltinSig] = {}


def _register(name, params, result, fn, kind="fn"):
    REGISTRY[name] = BuiltinSig(name, tuple(params), result, fn, kind)


_register("+", (R, R), R, _add)
_register("-", (R, R), R, _sub)
_register("*", (R, R), R, _mul)
_register("/", (R, R), R, _div)
_register("^", (R, R), R, _pow)
_register("neg", (R,), R, _neg)
_register("=", (R, R), B, lambda a, b: _num(a) == _num(b))
_register("<", (R, R), B, lambda a, b: _num(a) < _num(b))
_register("<=", (R, R), B, lambda a, b: _num(a) <= _num(b))
_register(">", (R, R), B, lambda a, b: _num(a) > _num(b))
_register(">=", (R, R), B, lambda a, b: _num(a) >= _num(b))
_register("and", (B, B), B, lambda a, b: a and b)
_register("or", (B, B), B, lambda a, b: a or b)
_register("not", (B,), B, lambda a: not a)
_register("min", (R, R), R, lambda a, b: min(_num(a), _num(b)))
_register("max", (R, R), R, lambda a, b: max(_num(a), _num(b)))
_register("abs", (R,), R, lambda a: abs(_num(a)))
_register("exp", (R,), R, _exp)
_register("log", (R,), R, _log)
_register("sqrt", (R,), R, _sqrt)
_register("ind", (B,), R, _indicator)

# named densities, used by the observe-from desugaring
_register("bern_pmf", (R, R), R, bern_pmf)
_register("normal_pdf", (R, R, R), R, normal_pdf)
_register("unif_pdf", (R, R, R), R, unif_pdf)
_register("beta_pdf", (R, R, R), R, beta_pdf)
_register("gamma_pdf", (R, R, R), R, gamma_pdf)
_register("poisson_pmf", (R, R), R, poisson_pmf)
_register("exp_pdf", (R, R), R, exp_pdf)
_register("dirac_pmf", (R, R), R, dirac_pmf)

# distribution constructors; applications of these are interpreted by
# the evaluator through basil.dist.make_ground
_register("Bern", (R,), Prob(R), None, kind="dist")
_register("Unif", (R, R), Prob(R), None, kind="dist")
_register("Normal", (R, R), Prob(R), None, kind="dist")
_register("Beta", (R, R), Prob(R), None, kind="dist")
_register("Gamma", (R, R), Prob(R), None, kind="dist")
_register("Poisson", (R,), Prob(R), None, kind="dist")
_register("Exp", (R,), Prob(R), None, kind="dist")
_register("Dirac", (R,), Prob(R), None, kind="dist")

# family name -> density builtin, for observe E from Fam(...)
DENSITY_OF = {
    "Bern": "bern_pmf",
    "Unif": "unif_pdf",
    "Normal": "normal_pdf",
    "Beta": "beta_pdf",
    "Gamma": "gamma_pdf",
    "Poisson": "poisson_pmf",
    "Exp": "exp_pdf",
    "Dirac": "dirac_pmf",
}


def lookup(name: str) -> Optional[BuiltinSig]:
    return REGISTRY.get(name)


def is_dist_constructor(name: str) -> bool:
    sig = REGISTRY.get(name)
    return sig is not None and sig.kind == "dist"
