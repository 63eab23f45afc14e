"""Symbolic distribution expressions and the measure algebra over them.

A DistExpr is a syntax tree for a sigma-finite measure: the named
probability families, point masses, finite tables, the Lebesgue measure
on the nonnegative half-line, independent products, density reweighting
(Weighted) and positive scaling (Scaled). Parameters are stored as exact
rationals, floats, or open deterministic terms, so both Bern(0.3) and
Bern(x) with a quantified x are first-class.

The operations that matter downstream:

  density          pointwise density against the family's base measure
  total_mass       exact where possible, quadrature fallback, inf, Unknown
  normalize        factor a measure into (probability measure, constant)
  conjugate_update closed-form posterior updates for the three standard
                   prior/likelihood pairs
  moments          closed-form mean and variance
  expect           expectation of an expression under the normalization

Unknown is a value, not an error: measures the algebra cannot reduce stay
symbolic and the callers decide what to do with them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from basil.numerics import adaptive_simpson
from basil.syntax import builtins as bi
from basil.syntax.evaluate import EvalError, eval_det, fold_constants
from basil.syntax.pretty import format_number, pretty_expr
from basil.syntax.terms import (
    BoolLit, Builtin, If, NatLit, Pair, RealLit, Term, UnitLit, Var,
    free_vars, subst_term,
)


class _Unknown:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Unknown"


UNKNOWN = _Unknown()


class NoDensity(Exception):
    pass


class NoRule(Exception):
    pass


class NotNormalizable(Exception):
    """Raised by normalize when the mass is 0, infinite, or Unknown.

    equivalent, when set, is the sigma-finite measure the input is equal
    to even though it cannot be scaled to a probability (e.g. the
    Lebesgue half-line measure).
    """

    def __init__(self, mass, equivalent: Optional["DistExpr"] = None):
        super().__init__(f"total mass {mass} is not a positive finite number")
        self.mass = mass
        self.equivalent = equivalent


Param = Union[Fraction, float, int, Term]


def _canon_param(p):
    if isinstance(p, bool):
        return p
    if isinstance(p, int):
        return Fraction(p)
    if isinstance(p, Term) and not isinstance(p, (RealLit, NatLit, BoolLit)):
        # fold so that e.g. a literal 3/4 from the assertion parser and a
        # pre-evaluated 0.75 from the prover compare equal
        p = fold_constants(p)
    if isinstance(p, RealLit):
        return p.val
    if isinstance(p, NatLit):
        return Fraction(p.n)
    if isinstance(p, BoolLit):
        return p.b
    return p


def _canon_value(v):
    """Outcome values: numbers, bool, None (unit), pairs as tuples."""
    if isinstance(v, UnitLit):
        return None
    if isinstance(v, Pair):
        return (_canon_value(v.fst), _canon_value(v.snd))
    if isinstance(v, tuple):
        return tuple(_canon_value(c) for c in v)
    return _canon_param(v)


def _pnum(p, env=None):
    """Numeric value of a parameter; EvalError when it is open."""
    if isinstance(p, Term):
        return eval_det(p, env)
    return p


def _pterm(p) -> Term:
    if isinstance(p, Term):
        return p
    if isinstance(p, bool):
        return BoolLit(p)
    if isinstance(p, float):
        return RealLit(Fraction(p))
    return RealLit(Fraction(p))


class DistExpr:
    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Bern(DistExpr):
    p: Param

    def __post_init__(self):
        object.__setattr__(self, "p", _canon_param(self.p))
        try:
            v = _pnum(self.p)
        except EvalError:
            return
        if not 0 <= v <= 1:
            raise ValueError(f"Bern parameter {v} outside [0, 1]")


@dataclass(frozen=True)
class Unif(DistExpr):
    a: Param
    b: Param

    def __post_init__(self):
        object.__setattr__(self, "a", _canon_param(self.a))
        object.__setattr__(self, "b", _canon_param(self.b))
        try:
            lo, hi = _pnum(self.a), _pnum(self.b)
        except EvalError:
            return
        if not lo < hi:
            raise ValueError(f"Unif needs a < b, got [{lo}, {hi}]")


@dataclass(frozen=True)
class Normal(DistExpr):
    mean: Param
    sd: Param

    def __post_init__(self):
        object.__setattr__(self, "mean", _canon_param(self.mean))
        object.__setattr__(self, "sd", _canon_param(self.sd))
        try:
            sd = _pnum(self.sd)
        except EvalError:
            return
        if not sd > 0:
            raise ValueError(f"Normal needs sd > 0, got {sd}")


@dataclass(frozen=True)
class Beta(DistExpr):
    a: Param
    b: Param

    def __post_init__(self):
        object.__setattr__(self, "a", _canon_param(self.a))
        object.__setattr__(self, "b", _canon_param(self.b))
        try:
            a, b = _pnum(self.a), _pnum(self.b)
        except EvalError:
            return
        if not (a > 0 and b > 0):
            raise ValueError(f"Beta needs positive parameters, got ({a}, {b})")


@dataclass(frozen=True)
class Gamma(DistExpr):
    """Shape/scale parameterization: mean is shape * scale."""

    shape: Param
    scale: Param

    def __post_init__(self):
        object.__setattr__(self, "shape", _canon_param(self.shape))
        object.__setattr__(self, "scale", _canon_param(self.scale))
        try:
            k, th = _pnum(self.shape), _pnum(self.scale)
        except EvalError:
            return
        if not (k > 0 and th > 0):
            raise ValueError(f"Gamma needs positive parameters, got ({k}, {th})")


@dataclass(frozen=True)
class Poisson(DistExpr):
    rate: Param

    def __post_init__(self):
        object.__setattr__(self, "rate", _canon_param(self.rate))
        try:
            r = _pnum(self.rate)
        except EvalError:
            return
        if not r > 0:
            raise ValueError(f"Poisson needs rate > 0, got {r}")


@dataclass(frozen=True)
class Exp(DistExpr):
    rate: Param

    def __post_init__(self):
        object.__setattr__(self, "rate", _canon_param(self.rate))
        try:
            r = _pnum(self.rate)
        except EvalError:
            return
        if not r > 0:
            raise ValueError(f"Exp needs rate > 0, got {r}")


@dataclass(frozen=True)
class Dirac(DistExpr):
    v: object

    def __post_init__(self):
        object.__setattr__(self, "v", _canon_value(self.v))


def _value_key(v):
    if v is None:
        return (0,)
    if isinstance(v, bool):
        return (1, v)
    if isinstance(v, (int, float, Fraction)):
        return (2, float(v))
    if isinstance(v, tuple):
        return (3,) + tuple(_value_key(c) for c in v)
    return (4, repr(v))


@dataclass(frozen=True)
class DiscreteTable(DistExpr):
    rows: Tuple[Tuple[object, object], ...]

    def __post_init__(self):
        merged = {}
        for v, w in self.rows:
            v = _canon_value(v)
            w = _canon_param(w)
            if isinstance(w, Term):
                raise ValueError("DiscreteTable weights must be numeric")
            if w < 0:
                raise ValueError(f"negative weight {w} in DiscreteTable")
            merged[v] = merged.get(v, Fraction(0)) + w
        rows = tuple(sorted(((v, w) for v, w in merged.items() if w > 0),
                            key=lambda r: _value_key(r[0])))
        if not rows:
            raise ValueError("DiscreteTable needs at least one positive weight")
        object.__setattr__(self, "rows", rows)


@dataclass(frozen=True)
class LebesgueNonNeg(DistExpr):
    pass


LEB = LebesgueNonNeg()


@dataclass(frozen=True)
class Product(DistExpr):
    left: DistExpr
    right: DistExpr


@dataclass(frozen=True)
class Weighted(DistExpr):
    """Reweighting of base by the density term, a function of binder.

    binder is a single name or a pair of names (for product bases); the
    density may mention deterministic metavariables freely but no other
    random structure.
    """

    density: Term
    base: DistExpr
    binder: Union[str, Tuple[str, ...]] = "x"


@dataclass(frozen=True)
class Scaled(DistExpr):
    k: Param
    base: DistExpr

    def __post_init__(self):
        object.__setattr__(self, "k", _canon_param(self.k))
        try:
            k = _pnum(self.k)
        except EvalError:
            return
        if not k > 0:
            raise ValueError(f"Scaled needs a positive factor, got {k}")


NAMED_FAMILIES = (Bern, Unif, Normal, Beta, Gamma, Poisson, Exp)
_CONTINUOUS = (Unif, Normal, Beta, Gamma, Exp)

PROBABILITY = "probability"
UNNORMALIZED = "unnormalized-finite"
INFINITE = "sigma-finite-infinite"


@dataclass(frozen=True)
class SymbolicMeasure:
    body: DistExpr
    normalized: str = UNNORMALIZED


def as_measure(d) -> SymbolicMeasure:
    if isinstance(d, SymbolicMeasure):
        return d
    if isinstance(d, NAMED_FAMILIES) or isinstance(d, Dirac):
        return SymbolicMeasure(d, PROBABILITY)
    if isinstance(d, LebesgueNonNeg):
        return SymbolicMeasure(d, INFINITE)
    if isinstance(d, Product):
        l, r = as_measure(d.left), as_measure(d.right)
        if l.normalized == PROBABILITY and r.normalized == PROBABILITY:
            return SymbolicMeasure(d, PROBABILITY)
        if INFINITE in (l.normalized, r.normalized):
            return SymbolicMeasure(d, INFINITE)
        return SymbolicMeasure(d, UNNORMALIZED)
    if isinstance(d, DiscreteTable):
        mass = sum(w for _, w in d.rows)
        return SymbolicMeasure(d, PROBABILITY if mass == 1 else UNNORMALIZED)
    return SymbolicMeasure(d, UNNORMALIZED)


# ---------------------------------------------------------------------
# construction from programs

_GROUND_MAKERS = {
    "Bern": lambda v: Bern(v[0]),
    "Unif": lambda v: Unif(v[0], v[1]),
    "Normal": lambda v: Normal(v[0], v[1]),
    "Beta": lambda v: Beta(v[0], v[1]),
    "Gamma": lambda v: Gamma(v[0], v[1]),
    "Poisson": lambda v: Poisson(v[0]),
    "Exp": lambda v: Exp(v[0]),
    "Dirac": lambda v: Dirac(v[0]),
}


def make_ground(name: str, vals) -> DistExpr:
    maker = _GROUND_MAKERS.get(name)
    if maker is None:
        raise EvalError(f"unknown distribution constructor {name!r}")
    return maker(list(vals))


def from_constructor_term(t: Term) -> DistExpr:
    """Lift an applied constructor like Bern(x) into a DistExpr, keeping
    open parameters symbolic."""
    if not (isinstance(t, Builtin) and bi.is_dist_constructor(t.fn)):
        raise NoRule(f"not a distribution constructor: {pretty_expr(t)}")
    return _GROUND_MAKERS[t.fn](list(t.args))


def params_of(d: DistExpr) -> Tuple:
    if isinstance(d, Bern):
        return (d.p,)
    if isinstance(d, Unif):
        return (d.a, d.b)
    if isinstance(d, Normal):
        return (d.mean, d.sd)
    if isinstance(d, Beta):
        return (d.a, d.b)
    if isinstance(d, Gamma):
        return (d.shape, d.scale)
    if isinstance(d, Poisson):
        return (d.rate,)
    if isinstance(d, Exp):
        return (d.rate,)
    return ()


def subst_params(d: DistExpr, env) -> DistExpr:
    """Evaluate open parameters under env, returning a ground measure."""
    if isinstance(d, NAMED_FAMILIES):
        vals = [_pnum(p, env) for p in params_of(d)]
        return type(d)(*vals)
    if isinstance(d, Dirac):
        v = d.v
        return Dirac(eval_det(v, env) if isinstance(v, Term) else v)
    if isinstance(d, Product):
        return Product(subst_params(d.left, env), subst_params(d.right, env))
    if isinstance(d, Weighted):
        binders = _binder_names(d)
        dens = d.density
        for name, val in (env or {}).items():
            if name not in binders and name in free_vars(dens):
                dens = subst_term(dens, name, _pterm(val))
        return Weighted(fold_constants(dens), subst_params(d.base, env), d.binder)
    if isinstance(d, Scaled):
        return Scaled(_pnum(d.k, env), subst_params(d.base, env))
    return d


def subst_param_terms(d: DistExpr, name: str, t: Term) -> DistExpr:
    """Substitute a term for a free variable inside a measure's parameter
    expressions, without evaluating anything."""
    def sp(p):
        if isinstance(p, Term) and name in free_vars(p):
            return fold_constants(subst_term(p, name, t))
        return p

    if isinstance(d, NAMED_FAMILIES):
        return type(d)(*[sp(p) for p in params_of(d)])
    if isinstance(d, Dirac):
        return Dirac(sp(d.v))
    if isinstance(d, DiscreteTable):
        return DiscreteTable(tuple((sp(v), sp(w)) for v, w in d.rows))
    if isinstance(d, Product):
        return Product(subst_param_terms(d.left, name, t),
                       subst_param_terms(d.right, name, t))
    if isinstance(d, Weighted):
        dens = d.density
        if name not in _binder_names(d):
            dens = sp(dens)
        return Weighted(dens, subst_param_terms(d.base, name, t), d.binder)
    if isinstance(d, Scaled):
        return Scaled(sp(d.k), subst_param_terms(d.base, name, t))
    return d


def free_param_vars(d: DistExpr) -> set:
    """Free variable names in a measure's parameter expressions."""
    out = set()
    if isinstance(d, NAMED_FAMILIES):
        for p in params_of(d):
            if isinstance(p, Term):
                out |= free_vars(p)
    elif isinstance(d, Dirac):
        if isinstance(d.v, Term):
            out |= free_vars(d.v)
    elif isinstance(d, DiscreteTable):
        for v, w in d.rows:
            for p in (v, w):
                if isinstance(p, Term):
                    out |= free_vars(p)
    elif isinstance(d, Product):
        out = free_param_vars(d.left) | free_param_vars(d.right)
    elif isinstance(d, Weighted):
        out = free_vars(d.density) - set(_binder_names(d))
        out |= free_param_vars(d.base)
    elif isinstance(d, Scaled):
        out = free_param_vars(d.base)
        if isinstance(d.k, Term):
            out |= free_vars(d.k)
    return out


def is_ground(d: DistExpr) -> bool:
    try:
        subst_params(d, {})
    except EvalError:
        return False
    return True


def _binder_names(w: Weighted) -> Tuple[str, ...]:
    return (w.binder,) if isinstance(w.binder, str) else tuple(w.binder)


# ---------------------------------------------------------------------
# rendering

def _fmt_param(p) -> str:
    if isinstance(p, Term):
        return pretty_expr(p)
    return format_number(p)


def format_value(v) -> str:
    if v is None:
        return "()"
    if isinstance(v, tuple):
        return "(" + ", ".join(format_value(c) for c in v) + ")"
    return format_number(v)


def render(d: DistExpr) -> str:
    if isinstance(d, NAMED_FAMILIES):
        name = type(d).__name__
        args = ", ".join(_fmt_param(p) for p in params_of(d))
        return f"{name}({args})"
    if isinstance(d, Dirac):
        inner = pretty_expr(d.v) if isinstance(d.v, Term) else format_value(d.v)
        return f"Dirac({inner})"
    if isinstance(d, DiscreteTable):
        rows = ", ".join(f"{format_value(v)}: {format_number(w)}"
                         for v, w in d.rows)
        return f"DiscreteTable({rows})"
    if isinstance(d, LebesgueNonNeg):
        return "Leb[0,∞)"
    if isinstance(d, Product):
        return f"{_render_factor(d.left)} ⊗ {_render_factor(d.right)}"
    if isinstance(d, Weighted):
        binders = _binder_names(d)
        if binders == ("x",):
            return f"Weighted({pretty_expr(d.density)}, {render(d.base)})"
        names = binders[0] if len(binders) == 1 else "(" + ", ".join(binders) + ")"
        return f"Weighted({pretty_expr(d.density)}, {render(d.base)}, {names})"
    if isinstance(d, Scaled):
        return f"Scaled({_fmt_param(d.k)}, {render(d.base)})"
    raise TypeError(f"not a DistExpr: {d!r}")


def _render_factor(d: DistExpr) -> str:
    text = render(d)
    if isinstance(d, (Product, Weighted, Scaled)):
        return f"({text})"
    return text


# ---------------------------------------------------------------------
# density

_DENSITY_FN = {
    Bern: "bern_pmf",
    Unif: "unif_pdf",
    Normal: "normal_pdf",
    Beta: "beta_pdf",
    Gamma: "gamma_pdf",
    Poisson: "poisson_pmf",
    Exp: "exp_pdf",
}


def density(d: DistExpr, x, env=None):
    """Density of d at x against its base measure (Lebesgue for the
    continuous families, counting for the discrete ones).

    Returns a number when everything is ground, otherwise a simplified
    deterministic term in the measure's open metavariables.
    """
    t = density_term(d, _pterm(_canon_value(x)))
    t = _simplify_density(t)
    try:
        return eval_det(t, env)
    except EvalError:
        return t


def density_term(d: DistExpr, x: Term) -> Term:
    fname = _DENSITY_FN.get(type(d))
    if fname is not None:
        return Builtin(fname, (x,) + tuple(_pterm(p) for p in params_of(d)))
    if isinstance(d, Dirac):
        raise NoDensity("Dirac has no density against the Lebesgue base; "
                        "treat it as a one-row table instead")
    if isinstance(d, DiscreteTable):
        val = _canon_value(eval_det(x)) if _is_closed(x) else None
        if val is None:
            raise NoDensity("DiscreteTable density needs a closed point")
        for v, w in d.rows:
            if _values_equal(v, val):
                return _pterm(w)
        return RealLit(0)
    if isinstance(d, LebesgueNonNeg):
        return Builtin("ind", (Builtin(">=", (x, RealLit(0))),))
    if isinstance(d, Product):
        if not isinstance(x, Pair):
            raise NoDensity("Product density needs a pair point")
        return Builtin("*", (density_term(d.left, x.fst),
                             density_term(d.right, x.snd)))
    if isinstance(d, Weighted):
        return Builtin("*", (_apply_density(d, x), density_term(d.base, x)))
    if isinstance(d, Scaled):
        return Builtin("*", (_pterm(d.k), density_term(d.base, x)))
    raise NoDensity(f"no density for {render(d)}")


def _apply_density(w: Weighted, x: Term) -> Term:
    names = _binder_names(w)
    if len(names) == 1:
        return subst_term(w.density, names[0], x)
    if not isinstance(x, Pair):
        raise NoDensity("pair binder needs a pair point")
    out = subst_term(w.density, names[0], x.fst)
    return subst_term(out, names[1], x.snd)


def _is_closed(t: Term) -> bool:
    return not free_vars(t)


def _values_equal(a, b) -> bool:
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(_values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, tuple) or isinstance(b, tuple):
        return False
    if a is None or b is None:
        return a is None and b is None
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b and isinstance(a, bool) == isinstance(b, bool)
    return a == b


def _simplify_density(t: Term) -> Term:
    """fold_constants plus the pointwise pmf identities that keep symbolic
    densities readable: bern_pmf(1, p) = p and bern_pmf(0, p) = 1 - p."""
    from basil.syntax.terms import _rebuild, children
    kids = tuple(_simplify_density(c) for c in children(t))
    t = fold_constants(_rebuild(t, kids))
    if isinstance(t, Builtin) and t.fn == "bern_pmf":
        point, p = t.args
        if isinstance(point, RealLit) and not isinstance(p, (RealLit, NatLit)):
            if point.val == 1:
                return p
            if point.val == 0:
                return fold_constants(Builtin("-", (RealLit(1), p)))
    return t


# ---------------------------------------------------------------------
# finite support

def finite_support(d: DistExpr, env=None) -> Optional[List[Tuple[object, object]]]:
    """(value, weight) rows when the measure is purely atomic with
    finitely many atoms, in canonical value order; None otherwise."""
    if isinstance(d, Bern):
        p = _pnum(d.p, env)
        return [(Fraction(0), 1 - _exactify(p)), (Fraction(1), _exactify(p))]
    if isinstance(d, Dirac):
        v = d.v
        if isinstance(v, Term):
            v = eval_det(v, env)
        return [(_canon_value(v), Fraction(1))]
    if isinstance(d, DiscreteTable):
        return list(d.rows)
    if isinstance(d, Product):
        l = finite_support(d.left, env)
        r = finite_support(d.right, env)
        if l is None or r is None:
            return None
        rows = [((va, vb), wa * wb) for va, wa in l for vb, wb in r]
        return sorted(rows, key=lambda t: _value_key(t[0]))
    if isinstance(d, Weighted):
        base = finite_support(d.base, env)
        if base is None:
            return None
        out = []
        for v, w in base:
            f = _weight_at(d, v, env)
            if f < 0:
                f = 0
            out.append((v, w * _exactify(f)))
        return out
    if isinstance(d, Scaled):
        base = finite_support(d.base, env)
        if base is None:
            return None
        k = _pnum(d.k, env)
        return [(v, _exactify(k) * w) for v, w in base]
    return None


def _weight_at(w: Weighted, v, env):
    names = _binder_names(w)
    local = dict(env or {})
    if len(names) == 1:
        local[names[0]] = v
    else:
        if not isinstance(v, tuple) or len(v) != len(names):
            raise NoDensity("pair binder applied to non-pair value")
        local.update(zip(names, v))
    return eval_det(w.density, local)


def _exactify(x):
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    return x


def is_finite_support(d: DistExpr) -> bool:
    try:
        return finite_support(d) is not None
    except EvalError:
        return False


def truncated_support(d: DistExpr, tol: float = 1e-15,
                      env=None) -> Optional[List[Tuple[object, object]]]:
    """Finite support, or a truncation of a countable one (Poisson) whose
    dropped tail has mass below tol."""
    fs = finite_support(d, env)
    if fs is not None:
        return fs
    if isinstance(d, Poisson):
        lam = float(_pnum(d.rate, env))
        rows = []
        cum = 0.0
        pmf = math.exp(-lam)
        k = 0
        while cum < 1.0 - tol and k < 100000:
            rows.append((Fraction(k), pmf))
            cum += pmf
            k += 1
            pmf *= lam / k
        return rows
    if isinstance(d, Weighted):
        base = truncated_support(d.base, tol, env)
        if base is None:
            return None
        return [(v, w * max(0, _weight_at(d, v, env))) for v, w in base]
    if isinstance(d, Scaled):
        base = truncated_support(d.base, tol, env)
        if base is None:
            return None
        k = _pnum(d.k, env)
        return [(v, k * w) for v, w in base]
    return None


# ---------------------------------------------------------------------
# quadrature support

def quad_bounds(d: DistExpr, env=None) -> Tuple[float, float]:
    """Effective support interval for the continuous families: the region
    outside it carries mass far below quadrature tolerance."""
    if isinstance(d, Unif):
        return float(_pnum(d.a, env)), float(_pnum(d.b, env))
    if isinstance(d, Beta):
        return 0.0, 1.0
    if isinstance(d, Normal):
        m, s = float(_pnum(d.mean, env)), float(_pnum(d.sd, env))
        return m - 12.0 * s, m + 12.0 * s
    if isinstance(d, Exp):
        r = float(_pnum(d.rate, env))
        return 0.0, 45.0 / r
    if isinstance(d, Gamma):
        k, th = float(_pnum(d.shape, env)), float(_pnum(d.scale, env))
        hi = th * (k + 45.0 * math.sqrt(k) + 45.0)
        return 0.0, hi
    if isinstance(d, (Weighted, Scaled)):
        return quad_bounds(d.base, env)
    raise NoDensity(f"no quadrature bounds for {render(d)}")


def is_continuous(d: DistExpr) -> bool:
    if isinstance(d, _CONTINUOUS):
        return True
    if isinstance(d, (Weighted, Scaled)):
        return is_continuous(d.base)
    return False


# ---------------------------------------------------------------------
# total mass and normalization

@dataclass(frozen=True)
class Reduced:
    """Outcome of rewriting a Weighted measure to something closed-form.

    measure: the normalized probability measure when mass is finite and
    positive; for infinite mass, the sigma-finite equivalent when one is
    recognized (None otherwise). exact is False when the mass came from
    quadrature rather than algebra.
    """

    measure: Optional[DistExpr]
    mass: object
    exact: bool = True


def total_mass(m, env=None):
    d = m.body if isinstance(m, SymbolicMeasure) else m
    d = simplify(d)
    if isinstance(d, NAMED_FAMILIES) or isinstance(d, Dirac):
        return Fraction(1)
    if isinstance(d, DiscreteTable):
        return sum(w for _, w in d.rows)
    if isinstance(d, LebesgueNonNeg):
        return math.inf
    if isinstance(d, Scaled):
        try:
            k = _pnum(d.k, env)
        except EvalError:
            return UNKNOWN
        inner = total_mass(d.base, env)
        if inner is UNKNOWN:
            return UNKNOWN
        return math.inf if inner == math.inf else _exactify(k) * inner
    if isinstance(d, Product):
        l = total_mass(d.left, env)
        r = total_mass(d.right, env)
        if UNKNOWN in (l, r):
            return UNKNOWN
        if math.inf in (l, r):
            return math.inf
        return l * r
    if isinstance(d, Weighted):
        red = reduce_weighted(d, env)
        if red is not None:
            return red.mass
        return UNKNOWN
    return UNKNOWN


def symbolic_total_mass(w: Weighted) -> Optional[Term]:
    """Total mass of a Weighted measure as a term in its open
    metavariables; defined when the base has finite symbolic support.

    This is what turns the reweighted Bern(x) of a conditioned flip into
    the plain likelihood x."""
    rows = _symbolic_support(w.base)
    if rows is None:
        return None
    total: Term = RealLit(0)
    for v_term, w_term in rows:
        f = _apply_density(w, v_term)
        total = Builtin("+", (total, Builtin("*", (f, w_term))))
    return _simplify_density(total)


def _symbolic_support(d: DistExpr) -> Optional[List[Tuple[Term, Term]]]:
    if isinstance(d, Bern):
        p = _pterm(d.p)
        return [(RealLit(0), fold_constants(Builtin("-", (RealLit(1), p)))),
                (RealLit(1), p)]
    if isinstance(d, Dirac):
        v = d.v if isinstance(d.v, Term) else _pterm(d.v)
        return [(v, RealLit(1))]
    if isinstance(d, DiscreteTable):
        return [(_pterm(v), _pterm(w)) for v, w in d.rows]
    if isinstance(d, Product):
        l, r = _symbolic_support(d.left), _symbolic_support(d.right)
        if l is None or r is None:
            return None
        return [(Pair(va, vb), Builtin("*", (wa, wb)))
                for va, wa in l for vb, wb in r]
    return None


def normalize(m, env=None) -> Tuple[SymbolicMeasure, object]:
    """Factor a measure as (probability measure, positive constant).

    Raises NotNormalizable when the mass is zero, infinite, or Unknown;
    the exception carries the recognized sigma-finite equivalent when
    there is one (the reweighted exponential that is really the Lebesgue
    half-line measure, for instance).
    """
    d = m.body if isinstance(m, SymbolicMeasure) else m
    d = simplify(d)
    if isinstance(d, NAMED_FAMILIES) or isinstance(d, Dirac):
        return SymbolicMeasure(d, PROBABILITY), Fraction(1)
    if isinstance(d, LebesgueNonNeg):
        raise NotNormalizable(math.inf, equivalent=d)
    if isinstance(d, DiscreteTable):
        mass = sum(w for _, w in d.rows)
        if mass <= 0:
            raise NotNormalizable(mass)
        table = DiscreteTable(tuple((v, w / mass) for v, w in d.rows))
        return SymbolicMeasure(table, PROBABILITY), mass
    if isinstance(d, Scaled):
        k = _pnum(d.k, env)
        inner, mass = normalize(d.base, env)
        return inner, _exactify(k) * mass
    if isinstance(d, Product):
        l, lk = normalize(d.left, env)
        r, rk = normalize(d.right, env)
        return SymbolicMeasure(Product(l.body, r.body), PROBABILITY), lk * rk
    if isinstance(d, Weighted):
        red = reduce_weighted(d, env)
        if red is None:
            raise NotNormalizable(UNKNOWN)
        if red.mass == math.inf:
            raise NotNormalizable(math.inf, equivalent=red.measure)
        if red.mass == 0 or (isinstance(red.mass, float) and red.mass <= 0):
            raise NotNormalizable(red.mass)
        return SymbolicMeasure(red.measure, PROBABILITY), red.mass
    raise NotNormalizable(UNKNOWN)


def reduce_weighted(w: Weighted, env=None) -> Optional[Reduced]:
    """Try, in order: finite-support tabulation, the Beta factor match,
    the three conjugate closed forms, the exponential-tilt and
    uniform-slice recognizers, then 1-D quadrature."""
    try:
        rows = finite_support(w, env)
    except EvalError:
        rows = None
    if rows is not None:
        mass = sum(wt for _, wt in rows)
        if mass == 0:
            return Reduced(None, Fraction(0))
        table = DiscreteTable(tuple((v, wt / mass) for v, wt in rows))
        return Reduced(table, mass)

    try:
        base = subst_params(w.base, env)
        dens = w.density
        if env:
            binders = _binder_names(w)
            for name, val in env.items():
                if name not in binders and name in free_vars(dens):
                    dens = subst_term(dens, name, _pterm(val))
        dens = _simplify_density(dens)
    except EvalError:
        return None
    binder = _binder_names(w)[0] if isinstance(w.binder, str) else None
    if binder is None:
        return None

    for matcher in (_match_beta, _match_normal, _match_gamma_poisson,
                    _match_exponential, _match_uniform_slice):
        red = matcher(dens, binder, base)
        if red is not None:
            return red

    if is_continuous(base) and is_ground(base):
        lo, hi = quad_bounds(base)
        f = _numeric_density(Weighted(dens, base, binder))
        mass = adaptive_simpson(f, lo, hi, tol=1e-9)
        if mass <= 0:
            return Reduced(None, 0.0, exact=False)
        return Reduced(Scaled(1.0 / mass, Weighted(dens, base, binder)),
                       mass, exact=False)
    return None


def _numeric_density(d: DistExpr):
    def f(x: float) -> float:
        return float(density(d, x))
    return f


def _factors(t: Term) -> List[Term]:
    if isinstance(t, Builtin) and t.fn == "*":
        return _factors(t.args[0]) + _factors(t.args[1])
    return [t]


def _beta_fn(a, b):
    """B(a, b), exact for positive integer arguments."""
    if (isinstance(a, Fraction) and a.denominator == 1
            and isinstance(b, Fraction) and b.denominator == 1):
        return Fraction(math.factorial(a.numerator - 1)
                        * math.factorial(b.numerator - 1),
                        math.factorial(a.numerator + b.numerator - 1))
    return math.exp(math.lgamma(float(a)) + math.lgamma(float(b))
                    - math.lgamma(float(a) + float(b)))


def _match_beta(dens: Term, binder: str, base: DistExpr) -> Optional[Reduced]:
    if isinstance(base, Unif):
        try:
            if _pnum(base.a) != 0 or _pnum(base.b) != 1:
                return None
        except EvalError:
            return None
        a0, b0 = Fraction(1), Fraction(1)
    elif isinstance(base, Beta):
        try:
            a0, b0 = _exactify(_pnum(base.a)), _exactify(_pnum(base.b))
        except EvalError:
            return None
    else:
        return None
    const = Fraction(1)
    da = Fraction(0)
    db = Fraction(0)
    for f in _factors(dens):
        got = _beta_factor(f, binder)
        if got is None:
            return None
        c, xa, xb = got
        const *= _exactify(c)
        da += xa
        db += xb
    if const <= 0:
        return Reduced(None, Fraction(0))
    a1, b1 = a0 + da, b0 + db
    if not (a1 > 0 and b1 > 0):
        return None
    mass = const * _beta_fn(a1, b1) / _beta_fn(a0, b0)
    return Reduced(Beta(a1, b1), mass)


def _beta_factor(f: Term, binder: str):
    """(constant, x-exponent, (1-x)-exponent) for one factor, or None."""
    if isinstance(f, RealLit):
        return f.val, Fraction(0), Fraction(0)
    if isinstance(f, Var) and f.name == binder:
        return Fraction(1), Fraction(1), Fraction(0)
    if _is_one_minus(f, binder):
        return Fraction(1), Fraction(0), Fraction(1)
    if isinstance(f, Builtin) and f.fn == "^":
        b, e = f.args
        if not (isinstance(e, RealLit) and e.val.denominator == 1 and e.val >= 0):
            return None
        n = e.val
        if isinstance(b, Var) and b.name == binder:
            return Fraction(1), n, Fraction(0)
        if _is_one_minus(b, binder):
            return Fraction(1), Fraction(0), n
        return None
    if isinstance(f, Builtin) and f.fn == "bern_pmf":
        point, p = f.args
        if isinstance(point, RealLit) and isinstance(p, Var) and p.name == binder:
            if point.val == 1:
                return Fraction(1), Fraction(1), Fraction(0)
            if point.val == 0:
                return Fraction(1), Fraction(0), Fraction(1)
        return None
    return None


def _is_one_minus(t: Term, binder: str) -> bool:
    return (isinstance(t, Builtin) and t.fn == "-" and len(t.args) == 2
            and isinstance(t.args[0], RealLit) and t.args[0].val == 1
            and isinstance(t.args[1], Var) and t.args[1].name == binder)


def _match_normal(dens: Term, binder: str, base: DistExpr) -> Optional[Reduced]:
    if not isinstance(base, Normal) or not is_ground(base):
        return None
    const = Fraction(1)
    obs = None
    for f in _factors(dens):
        if isinstance(f, RealLit):
            const *= f.val
            continue
        if isinstance(f, Builtin) and f.fn == "normal_pdf" and obs is None:
            a, b, s = f.args
            if not (isinstance(s, RealLit) and s.val > 0):
                return None
            if isinstance(a, Var) and a.name == binder and isinstance(b, RealLit):
                obs = (b.val, s.val)
                continue
            if isinstance(b, Var) and b.name == binder and isinstance(a, RealLit):
                obs = (a.val, s.val)
                continue
        return None
    if obs is None:
        return None
    x, sd = obs
    post, k = conjugate_update(base, ObservationSpec("Normal", x, (sd,)))
    return Reduced(post, float(const) * k, exact=False)


def _match_gamma_poisson(dens: Term, binder: str,
                         base: DistExpr) -> Optional[Reduced]:
    if not isinstance(base, Gamma) or not is_ground(base):
        return None
    const = Fraction(1)
    obs = None
    for f in _factors(dens):
        if isinstance(f, RealLit):
            const *= f.val
            continue
        if isinstance(f, Builtin) and f.fn == "poisson_pmf" and obs is None:
            point, rate = f.args
            if (isinstance(point, RealLit) and point.val.denominator == 1
                    and point.val >= 0 and isinstance(rate, Var)
                    and rate.name == binder):
                obs = point.val.numerator
                continue
        return None
    if obs is None:
        return None
    post, k = conjugate_update(base, ObservationSpec("Poisson", obs, ()))
    mass = const * k if isinstance(k, Fraction) else float(const) * k
    return Reduced(post, mass, exact=isinstance(mass, Fraction))


def _match_exponential(dens: Term, binder: str,
                       base: DistExpr) -> Optional[Reduced]:
    """c * exp(a*x) against Exp(rate): the tilted measure is
    c*rate/(rate-a) * Exp(rate-a) when a < rate and c*rate * Leb when
    a = rate; heavier tilts have infinite mass."""
    if not isinstance(base, Exp) or not is_ground(base):
        return None
    rate = _exactify(_pnum(base.rate))
    const = Fraction(1)
    a = None
    for f in _factors(dens):
        if isinstance(f, RealLit):
            const *= f.val
            continue
        if isinstance(f, Builtin) and f.fn == "exp" and a is None:
            coef = _linear_coef(f.args[0], binder)
            if coef is not None:
                a = coef
                continue
        return None
    if a is None:
        return None
    if a == rate:
        scale = const * rate
        equiv = LEB if scale == 1 else Scaled(scale, LEB)
        return Reduced(equiv, math.inf)
    if a > rate:
        return Reduced(None, math.inf)
    new_rate = rate - a
    return Reduced(Exp(new_rate), const * rate / new_rate)


def _linear_coef(t: Term, binder: str):
    """a such that t = a * binder, or None."""
    if isinstance(t, Var) and t.name == binder:
        return Fraction(1)
    if isinstance(t, Builtin) and t.fn == "*" and len(t.args) == 2:
        l, r = t.args
        if isinstance(l, RealLit) and isinstance(r, Var) and r.name == binder:
            return l.val
        if isinstance(r, RealLit) and isinstance(l, Var) and l.name == binder:
            return r.val
    if isinstance(t, Builtin) and t.fn == "neg":
        inner = _linear_coef(t.args[0], binder)
        return None if inner is None else -inner
    return None


def _indicator_upper_bound(f: Term, binder: str):
    """If f is the indicator of {binder <= b} (as an if-expression or a
    bare comparison), return b as a Fraction."""
    if isinstance(f, If):
        then_one = isinstance(f.then, RealLit) and f.then.val == 1
        else_zero = isinstance(f.els, RealLit) and f.els.val == 0
        if then_one and else_zero:
            f = f.cond
        else:
            return None
    if isinstance(f, Builtin) and f.fn in ("<=", "<"):
        lhs, rhs = f.args
        if (isinstance(lhs, Var) and lhs.name == binder
                and isinstance(rhs, RealLit) and rhs.val > 0):
            return rhs.val
    return None


def _match_uniform_slice(dens: Term, binder: str,
                         base: DistExpr) -> Optional[Reduced]:
    """unif_pdf(x, a, b) against Leb[0,∞) carves out Unif(a, b) with
    mass exactly 1 (for 0 <= a < b); an indicator of {x <= b} carves out
    Unif(0, b) with mass b."""
    if not isinstance(base, LebesgueNonNeg):
        return None
    const = Fraction(1)
    bounds = None
    mass_per_unit = Fraction(1)
    for f in _factors(dens):
        if isinstance(f, RealLit):
            const *= f.val
            continue
        if isinstance(f, Builtin) and f.fn == "unif_pdf" and bounds is None:
            point, a, b = f.args
            if (isinstance(point, Var) and point.name == binder
                    and isinstance(a, RealLit) and isinstance(b, RealLit)
                    and 0 <= a.val < b.val):
                bounds = (a.val, b.val)
                continue
        if bounds is None:
            cut = _indicator_upper_bound(f, binder)
            if cut is not None:
                bounds = (Fraction(0), cut)
                mass_per_unit = cut
                continue
        return None
    if bounds is None:
        return None
    return Reduced(Unif(bounds[0], bounds[1]), const * mass_per_unit)


# ---------------------------------------------------------------------
# conjugate updates

@dataclass(frozen=True)
class ObservationSpec:
    """One observation: the likelihood family, the observed value, and
    the family's known nuisance parameters (the Normal likelihood's sd)."""

    family: str
    value: object
    nuisance: Tuple = ()


def conjugate_update(prior: DistExpr, obs: ObservationSpec):
    if isinstance(prior, Beta) and obs.family == "Bern":
        a, b = _exactify(_pnum(prior.a)), _exactify(_pnum(prior.b))
        v = _exactify(obs.value)
        if v == 1:
            return Beta(a + 1, b), a / (a + b)
        if v == 0:
            return Beta(a, b + 1), b / (a + b)
        raise NoRule(f"Bern observation must be 0 or 1, got {obs.value}")
    if isinstance(prior, Gamma) and obs.family == "Poisson":
        k, th = _exactify(_pnum(prior.shape)), _exactify(_pnum(prior.scale))
        x = int(obs.value)
        if x < 0 or x != obs.value:
            raise NoRule(f"Poisson observation must be a natural, got {obs.value}")
        post = Gamma(k + x, th / (th + 1))
        rising = Fraction(1)
        for i in range(x):
            rising *= k + i
        coeff = rising / math.factorial(x)
        if isinstance(k, Fraction) and k.denominator == 1 and isinstance(th, Fraction):
            mass = coeff * th ** x / (th + 1) ** (k.numerator + x)
        else:
            mass = float(coeff) * float(th) ** x / float(th + 1) ** (float(k) + x)
        return post, mass
    if isinstance(prior, Normal) and obs.family == "Normal":
        if len(obs.nuisance) != 1:
            raise NoRule("Normal likelihood needs its sd as nuisance")
        m0, s0 = float(_pnum(prior.mean)), float(_pnum(prior.sd))
        x, s = float(obs.value), float(obs.nuisance[0])
        prec = 1.0 / (s0 * s0) + 1.0 / (s * s)
        mean = (m0 / (s0 * s0) + x / (s * s)) / prec
        sd = math.sqrt(1.0 / prec)
        marg_sd = math.sqrt(s0 * s0 + s * s)
        k = bi.REGISTRY["normal_pdf"].fn(x, m0, marg_sd)
        return Normal(mean, sd), float(k)
    raise NoRule(f"no conjugate rule for ({type(prior).__name__}, {obs.family})")


# ---------------------------------------------------------------------
# moments and expectations

@dataclass(frozen=True)
class Moments:
    mean: object
    variance: object


def moments(d: DistExpr, env=None):
    d = simplify(d)
    try:
        if isinstance(d, Bern):
            p = _exactify(_pnum(d.p, env))
            return Moments(p, p * (1 - p))
        if isinstance(d, Unif):
            a, b = _exactify(_pnum(d.a, env)), _exactify(_pnum(d.b, env))
            return Moments((a + b) / 2, (b - a) ** 2 / 12)
        if isinstance(d, Normal):
            m, s = _pnum(d.mean, env), _pnum(d.sd, env)
            return Moments(_exactify(m), _exactify(s) ** 2)
        if isinstance(d, Beta):
            a, b = _exactify(_pnum(d.a, env)), _exactify(_pnum(d.b, env))
            return Moments(a / (a + b), a * b / ((a + b) ** 2 * (a + b + 1)))
        if isinstance(d, Gamma):
            k, th = _exactify(_pnum(d.shape, env)), _exactify(_pnum(d.scale, env))
            return Moments(k * th, k * th ** 2)
        if isinstance(d, Poisson):
            r = _exactify(_pnum(d.rate, env))
            return Moments(r, r)
        if isinstance(d, Exp):
            r = _exactify(_pnum(d.rate, env))
            return Moments(1 / r, 1 / r ** 2)
        if isinstance(d, Dirac):
            v = d.v
            if isinstance(v, Term):
                v = eval_det(v, env)
            if not isinstance(v, (int, float, Fraction)) or isinstance(v, bool):
                return UNKNOWN
            return Moments(_exactify(v), Fraction(0))
        if isinstance(d, DiscreteTable):
            return _table_moments(d.rows)
        if isinstance(d, Scaled):
            return moments(d.base, env)
        if isinstance(d, Weighted):
            red = reduce_weighted(d, env)
            if red is None or red.measure is None or red.mass in (0, math.inf):
                return UNKNOWN
            if isinstance(red.measure, Scaled):
                return _quad_moments(d, env, red.mass)
            return moments(red.measure, env)
    except EvalError:
        return UNKNOWN
    return UNKNOWN


def _table_moments(rows):
    mass = sum(w for _, w in rows)
    if mass == 0:
        return UNKNOWN
    vals = []
    for v, w in rows:
        if not isinstance(v, (int, float, Fraction)) or isinstance(v, bool):
            return UNKNOWN
        vals.append((_exactify(v), w))
    mean = sum(v * w for v, w in vals) / mass
    var = sum((v - mean) ** 2 * w for v, w in vals) / mass
    return Moments(mean, var)


def _quad_moments(d: DistExpr, env, mass):
    lo, hi = quad_bounds(d, env)
    f = _numeric_density(subst_params(d, env) if env else d)
    mean = adaptive_simpson(lambda x: x * f(x), lo, hi, tol=1e-9) / float(mass)
    second = adaptive_simpson(lambda x: x * x * f(x), lo, hi, tol=1e-9) / float(mass)
    return Moments(mean, second - mean * mean)


def expect(d: DistExpr, fn: Term, binder="x", env=None):
    """E[fn(X)] under the normalization of d; UNKNOWN when the measure
    cannot be normalized or integrated."""
    names = (binder,) if isinstance(binder, str) else tuple(binder)
    try:
        rows = truncated_support(d, 1e-15, env)
    except EvalError:
        rows = None
    if rows is not None:
        mass = sum(w for _, w in rows)
        if mass == 0:
            return UNKNOWN
        acc = Fraction(0)
        for v, w in rows:
            local = dict(env or {})
            if len(names) == 1:
                local[names[0]] = v
            else:
                if not isinstance(v, tuple):
                    return UNKNOWN
                local.update(zip(names, v))
            acc += _exactify(eval_det(fn, local)) * _exactify(w)
        return acc / _exactify(mass)
    if len(names) != 1:
        return UNKNOWN
    if is_continuous(d) and is_ground(d):
        mass = total_mass(d, env)
        if mass is UNKNOWN or mass in (0, math.inf):
            return UNKNOWN
        lo, hi = quad_bounds(d, env)
        pdf = _numeric_density(d)

        def g(x: float) -> float:
            local = dict(env or {})
            local[names[0]] = x
            return float(eval_det(fn, local)) * pdf(x)

        return adaptive_simpson(g, lo, hi, tol=1e-9) / float(mass)
    return UNKNOWN


# ---------------------------------------------------------------------
# structural simplification

def simplify(d: DistExpr) -> DistExpr:
    """Flatten nested Scaled and Weighted layers and drop unit weights;
    never changes the measure (and therefore never its total mass)."""
    if isinstance(d, Scaled):
        base = simplify(d.base)
        k = d.k
        if isinstance(base, Scaled):
            try:
                k = _exactify(_pnum(k)) * _exactify(_pnum(base.k))
                base = base.base
            except EvalError:
                pass
        try:
            if _pnum(k) == 1:
                return base
        except EvalError:
            pass
        if isinstance(base, DiscreteTable):
            try:
                kv = _exactify(_pnum(k))
                return DiscreteTable(tuple((v, kv * w) for v, w in base.rows))
            except EvalError:
                pass
        return Scaled(k, base)
    if isinstance(d, Weighted):
        base = simplify(d.base)
        dens = _simplify_density(d.density)
        if isinstance(dens, RealLit):
            if dens.val == 1:
                return base
            if dens.val > 0:
                return simplify(Scaled(dens.val, base))
        if isinstance(base, Weighted) and _binder_arity(base) == _binder_arity(d):
            inner = base.density
            outer_names = _binder_names(d)
            inner_names = _binder_names(base)
            for old, new in zip(inner_names, outer_names):
                if old != new:
                    inner = subst_term(inner, old, Var(new))
            merged = fold_constants(Builtin("*", (inner, dens)))
            return simplify(Weighted(merged, base.base, d.binder))
        if isinstance(base, Scaled):
            return simplify(Scaled(base.k, Weighted(dens, base.base, d.binder)))
        return Weighted(dens, base, d.binder)
    if isinstance(d, Product):
        return Product(simplify(d.left), simplify(d.right))
    if isinstance(d, DiscreteTable):
        return _canonical_table(d)
    return d


def _canonical_table(d: DiscreteTable) -> DistExpr:
    """Rewrite probability tables that are really a named family: a
    single unit-mass row is a point mass, a {0,1} table is a coin."""
    rows = [(v, w) for v, w in d.rows if not (
        isinstance(w, (int, Fraction)) and w == 0)]
    if not rows:
        return d
    total = Fraction(0)
    for _, w in rows:
        if not isinstance(w, (int, Fraction)):
            return d
        total += w
    if total != 1:
        return d
    if len(rows) == 1:
        return Dirac(rows[0][0])
    keys = set()
    p_one = Fraction(0)
    for v, w in rows:
        if not isinstance(v, (int, Fraction)) or v not in (0, 1):
            return d
        keys.add(Fraction(v))
        if v == 1:
            p_one = Fraction(w)
    if keys == {Fraction(0), Fraction(1)}:
        return Bern(p_one)
    return d


def _binder_arity(w: Weighted) -> int:
    return 1 if isinstance(w.binder, str) else len(w.binder)


# ---------------------------------------------------------------------
# sampling and pushforward

def sample_from_uniform(d: DistExpr, u: float, env=None):
    """Inverse-CDF transform of one uniform draw; keeps the map monotone
    per family so counter-based streams stay reproducible."""
    from scipy import special

    if isinstance(d, Bern):
        p = _pnum(d.p, env)
        return Fraction(1) if u < p else Fraction(0)
    if isinstance(d, Unif):
        a, b = _pnum(d.a, env), _pnum(d.b, env)
        return float(a) + (float(b) - float(a)) * u
    if isinstance(d, Normal):
        m, s = _pnum(d.mean, env), _pnum(d.sd, env)
        return float(m) + float(s) * float(special.ndtri(u))
    if isinstance(d, Beta):
        a, b = _pnum(d.a, env), _pnum(d.b, env)
        return float(special.betaincinv(float(a), float(b), u))
    if isinstance(d, Gamma):
        k, th = _pnum(d.shape, env), _pnum(d.scale, env)
        return float(special.gammaincinv(float(k), u)) * float(th)
    if isinstance(d, Exp):
        r = _pnum(d.rate, env)
        return -math.log1p(-u) / float(r)
    if isinstance(d, Poisson):
        lam = float(_pnum(d.rate, env))
        cum = 0.0
        pmf = math.exp(-lam)
        k = 0
        while True:
            cum += pmf
            if u < cum or k > 100000:
                return Fraction(k)
            k += 1
            pmf *= lam / k
    if isinstance(d, Dirac):
        v = d.v
        return eval_det(v, env) if isinstance(v, Term) else v
    if isinstance(d, DiscreteTable):
        mass = sum(w for _, w in d.rows)
        target = u * float(mass)
        cum = 0.0
        for v, w in d.rows:
            cum += float(w)
            if target < cum:
                return v
        return d.rows[-1][0]
    raise NoDensity(f"cannot sample {render(d)} from a single uniform")


def pushforward(d: DistExpr, fn: Term, binder="x", env=None) -> Optional[DistExpr]:
    """Image measure under a deterministic map; exact for finite supports,
    identity maps pass through, anything else is None."""
    names = (binder,) if isinstance(binder, str) else tuple(binder)
    if isinstance(fn, Var) and len(names) == 1 and fn.name == names[0]:
        return d
    if (isinstance(fn, Pair) and len(names) == 2
            and isinstance(fn.fst, Var) and fn.fst.name == names[0]
            and isinstance(fn.snd, Var) and fn.snd.name == names[1]):
        return d
    try:
        rows = finite_support(d, env)
    except EvalError:
        rows = None
    if rows is None:
        return None
    mapped = []
    for v, w in rows:
        local = dict(env or {})
        if len(names) == 1:
            local[names[0]] = v
        else:
            if not isinstance(v, tuple):
                return None
            local.update(zip(names, v))
        mapped.append((eval_det(fn, local), w))
    return DiscreteTable(tuple(mapped))
