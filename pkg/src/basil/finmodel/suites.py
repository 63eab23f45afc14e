"""Brute-force law checking over random finite models.

Each suite draws random configurations and tests one family of laws:
the measure-combination monoid, the Kripke order, disintegration, and
the entailment rules of the assertion logic. Weights are rationals with
denominator at most 720, so every comparison is exact. Trials are
independent; trial i derives its RNG stream from (seed, i), so a suite
is reproducible and could be fanned out across workers.

A failing trial is captured as a Counterexample that serializes to JSON
for regression capture.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from basil.assertions import nodes as A
from basil.assertions.render import render_assertion
from basil.dist import DiscreteTable
from basil.syntax.terms import Builtin, If, RealLit, Term, Var

from .model import (
    FiniteModel,
    FiniteRV,
    FiniteSpace,
    coord_rv,
    disintegrate,
    disintegrate_atoms,
    indep_combine,
    kripke_leq,
    pushforward,
    unit_model,
)
from .sat import SatCaps, satisfies

_DENOMS = (1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 16, 18, 20, 24, 36, 48,
           60, 72, 120, 144, 180, 240, 360, 720)

# enumeration caps in force for the current run_suite call; suites are
# single-threaded, so a module slot beats threading a parameter through
# every fixture builder
_ACTIVE_CAPS: Optional[SatCaps] = None


def _sat(gamma, D, m, a, rng=None, caps=None):
    return satisfies(gamma, D, m, a, rng=rng,
                     caps=caps if caps is not None else _ACTIVE_CAPS)


def _frac(rng: random.Random, lo: int = 0, hi: int = 2) -> Fraction:
    den = rng.choice(_DENOMS)
    return Fraction(rng.randint(lo * den, hi * den), den)


def _pos_frac(rng: random.Random, hi: int = 2) -> Fraction:
    den = rng.choice(_DENOMS)
    return Fraction(rng.randint(1, hi * den), den)


def _trial_rng(seed, index: int) -> random.Random:
    return random.Random(f"{seed}:{index}")


@dataclass
class Pass:
    suite: str
    trials: int

    @property
    def ok(self) -> bool:
        return True

    def to_json(self) -> dict:
        return {"suite": self.suite, "result": "pass",
                "trials": self.trials}


@dataclass
class Counterexample:
    suite: str
    trial: int
    space: Optional[FiniteSpace]
    model: Optional[FiniteModel]
    rvs: Dict[str, FiniteRV] = field(default_factory=dict)
    gamma: Dict[str, object] = field(default_factory=dict)
    assertion: str = ""
    side: str = "rhs"

    @property
    def ok(self) -> bool:
        return False

    def to_json(self) -> dict:
        space = ([[str(v) for v in c] for c in self.space.coords]
                 if self.space else [])
        partition = ([sorted(b) for b in self.model.blocks]
                     if self.model else [])
        weights = ([str(w) for w in self.model.weights]
                   if self.model else [])
        rvs = {name: [str(v) for v in rv.values]
               for name, rv in self.rvs.items()}
        return {"space": space, "partition": partition,
                "weights": weights, "rvs": rvs,
                "assertion": self.assertion, "side": self.side}


# ----------------------------------------------------------------
# random generators

def rand_space(rng: random.Random, max_coords: int = 2,
               max_vals: int = 3) -> FiniteSpace:
    coords = tuple(
        tuple(Fraction(i) for i in range(rng.randint(2, max_vals)))
        for _ in range(rng.randint(1, max_coords)))
    return FiniteSpace(coords)


def rand_blocks(rng: random.Random, n: int,
                max_blocks: Optional[int] = None) -> Tuple[frozenset, ...]:
    k = rng.randint(1, min(n, max_blocks or n))
    homes = [rng.randrange(k) for _ in range(n)]
    for j in range(k):
        if j not in homes:
            homes[rng.randrange(n)] = j
    groups: Dict[int, set] = {}
    for atom, j in enumerate(homes):
        groups.setdefault(j, set()).add(atom)
    return tuple(frozenset(g) for g in groups.values())


def rand_model(rng: random.Random, space: FiniteSpace,
               blocks: Optional[Sequence[frozenset]] = None,
               total: Optional[Fraction] = None,
               max_blocks: Optional[int] = None) -> FiniteModel:
    if blocks is None:
        blocks = rand_blocks(rng, space.n_atoms, max_blocks)
    weights = [_frac(rng) for _ in blocks]
    if sum(weights) == 0:
        weights[rng.randrange(len(weights))] = _pos_frac(rng)
    if total is not None:
        s = sum(weights)
        weights = [w * total / s for w in weights]
    return FiniteModel(space, tuple(blocks), tuple(weights))


def coord_model(rng: random.Random, space: FiniteSpace, i: int,
                total: Optional[Fraction] = None) -> FiniteModel:
    blocks = space.coordinate_blocks(i)
    weights = [_frac(rng) for _ in blocks]
    if sum(weights) == 0:
        weights[rng.randrange(len(weights))] = _pos_frac(rng)
    if total is not None:
        s = sum(weights)
        weights = [w * total / s for w in weights]
    return FiniteModel(space, blocks, tuple(weights))


def _coarsen(rng: random.Random, m: FiniteModel) -> FiniteModel:
    """A random coarsening of m; the result sits below m."""
    k = len(m.blocks)
    if k == 1:
        return m
    j = rng.randint(1, k)
    homes = [rng.randrange(j) for _ in range(k)]
    for h in range(j):
        if h not in homes:
            homes[rng.randrange(k)] = h
    merged: Dict[int, set] = {}
    sums: Dict[int, Fraction] = {}
    for bi, h in enumerate(homes):
        merged.setdefault(h, set()).update(m.blocks[bi])
        sums[h] = sums.get(h, Fraction(0)) + m.weights[bi]
    blocks = tuple(frozenset(s) for _, s in sorted(merged.items()))
    weights = tuple(w for _, w in sorted(sums.items()))
    return FiniteModel(m.space, blocks, weights)


def _rand_rv(rng: random.Random, space: FiniteSpace, name: str,
             values: Sequence = (Fraction(0), Fraction(1), Fraction(2))
             ) -> FiniteRV:
    return FiniteRV(name, tuple(rng.choice(values)
                                for _ in range(space.n_atoms)))


def _block_rv(rng: random.Random, m: FiniteModel, name: str) -> FiniteRV:
    """An RV measurable for m: one random value per block."""
    vals = [None] * m.space.n_atoms
    for b in m.blocks:
        v = Fraction(rng.randint(0, 3))
        for a in b:
            vals[a] = v
    return FiniteRV(name, tuple(vals))


def _push_table(m: FiniteModel, rv: FiniteRV) -> DiscreteTable:
    return DiscreteTable(tuple(pushforward(m, rv)))


# ----------------------------------------------------------------
# entailment checking

Instance = Tuple[Mapping, Mapping[str, FiniteRV], FiniteModel]


def _default_instances(lhs: A.Assertion, rhs: A.Assertion
                       ) -> Callable[[random.Random], Instance]:
    names = sorted(A.free_rvs(lhs) | A.free_rvs(rhs))
    if len(names) > 3:
        raise ValueError("default generator handles at most 3 variables")
    coords = tuple((Fraction(0), Fraction(1)) for _ in names) or \
        ((Fraction(0), Fraction(1)),)
    space = FiniteSpace(coords)

    def gen(rng: random.Random) -> Instance:
        if rng.random() < 0.5:
            blocks: Tuple[frozenset, ...] = tuple(
                frozenset([i]) for i in range(space.n_atoms))
        else:
            blocks = rand_blocks(rng, space.n_atoms)
        m = rand_model(rng, space, blocks)
        D = {nm: coord_rv(space, i, nm) for i, nm in enumerate(names)}
        return {}, D, m

    return gen


def check_entailment(pair: Tuple[A.Assertion, A.Assertion],
                     trials: int = 500, seed=0,
                     instances: Optional[Callable[[random.Random],
                                                  Instance]] = None,
                     caps: Optional[SatCaps] = None,
                     suite: str = "entailment"
                     ) -> "Pass | Counterexample":
    """Sample configurations; report the first one where the left side
    holds and the right side does not."""
    lhs, rhs = pair
    gen = instances or _default_instances(lhs, rhs)
    for i in range(trials):
        rng = _trial_rng(seed, i)
        gamma, D, m = gen(rng)
        if _sat(gamma, D, m, lhs, rng=rng, caps=caps) and \
                not _sat(gamma, D, m, rhs, rng=rng, caps=caps):
            return Counterexample(
                suite, i, m.space, m, dict(D), dict(gamma),
                render_assertion(rhs), side="rhs")
    return Pass(suite, trials)


def _check_equivalence(pair: Tuple[A.Assertion, A.Assertion],
                       trials: int, seed,
                       instances: Callable[[random.Random], Instance],
                       caps: Optional[SatCaps], suite: str
                       ) -> "Pass | Counterexample":
    lhs, rhs = pair
    for i in range(trials):
        rng = _trial_rng(seed, i)
        gamma, D, m = instances(rng)
        a = _sat(gamma, D, m, lhs, rng=rng, caps=caps)
        b = _sat(gamma, D, m, rhs, rng=rng, caps=caps)
        if a != b:
            side = "rhs" if a else "lhs"
            return Counterexample(
                suite, i, m.space, m, dict(D), dict(gamma),
                render_assertion(rhs if a else lhs), side=side)
    return Pass(suite, trials)


# ----------------------------------------------------------------
# term builders for assertion fixtures

def _eq(x: Term, v: Fraction) -> Term:
    return Builtin("=", (x, RealLit(v)))


def _table_fn(binder: str, table: Mapping[Fraction, Fraction]) -> Term:
    """A term computing the finite function v -> table[v] by cases."""
    items = sorted(table.items())
    out: Term = RealLit(items[-1][1])
    for v, w in reversed(items[:-1]):
        out = If(_eq(Var(binder), v), RealLit(w), out)
    return out


# ----------------------------------------------------------------
# suites over the model algebra

def _suite_pcm(trials: int, seed) -> "Pass | Counterexample":
    name = "pcm"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        space = FiniteSpace(((Fraction(0), Fraction(1)),) * 3)
        if rng.random() < 0.6:
            m1 = coord_model(rng, space, 0)
            m2 = coord_model(rng, space, 1)
            m3 = coord_model(rng, space, 2)
        else:
            m1 = rand_model(rng, space)
            m2 = rand_model(rng, space)
            m3 = rand_model(rng, space)
        one = unit_model(space)
        law = None
        if indep_combine(one, m1) != m1 or indep_combine(m1, one) != m1:
            law = "identity: 1 o m = m"
        c12 = indep_combine(m1, m2)
        c21 = indep_combine(m2, m1)
        if law is None and c12 != c21:
            law = "commutativity"
        if law is None and c12 is not None:
            left = indep_combine(c12, m3)
            if left is not None:
                c23 = indep_combine(m2, m3)
                if c23 is None:
                    law = "associativity: definedness transfer"
                elif indep_combine(m1, c23) != left:
                    law = "associativity"
        if law is not None:
            return Counterexample(name, i, space, m1, {}, {},
                                  law, side="law")
    return Pass(name, trials)


def _suite_kripke(trials: int, seed) -> "Pass | Counterexample":
    name = "kripke"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        space = FiniteSpace(((Fraction(0), Fraction(1), Fraction(2)),
                             (Fraction(0), Fraction(1)),))
        n1 = coord_model(rng, space, 0)
        n2 = coord_model(rng, space, 1)
        m1 = _coarsen(rng, n1)
        m2 = _coarsen(rng, n2)
        law = None
        if not (kripke_leq(m1, n1) and kripke_leq(m2, n2)):
            law = "coarsening sits below"
        if law is None and not kripke_leq(m1, m1):
            law = "reflexivity"
        big = indep_combine(n1, n2)
        small = indep_combine(m1, m2)
        if law is None and (big is None or small is None):
            law = "coordinate combinations must be defined"
        if law is None and not kripke_leq(small, big):
            law = "bifunctoriality"
        if law is not None:
            return Counterexample(name, i, space, small or m1, {}, {},
                                  law, side="law")
    return Pass(name, trials)


def _suite_disintegration(trials: int, seed) -> "Pass | Counterexample":
    name = "disintegration"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        space = rand_space(rng, max_coords=2, max_vals=3)
        m = rand_model(rng, space)
        X = _rand_rv(rng, space, "X")
        mu_plus = m.atom_weights_uniform()
        push = pushforward(m, X, mu_plus)
        c = _pos_frac(rng)
        pi = [(v, c * w) for v, w in push]
        law = None
        try:
            fibers = disintegrate_atoms(m, X, pi)
            family = disintegrate(m, X, pi)
        except Exception as e:  # noqa: BLE001 - any failure is a finding
            law = f"construction failed: {e}"
            fibers, family = {}, {}
        push_by = {str(v): w for v, w in push}
        if law is None:
            for v, fib in fibers.items():
                bad = [a for a, w in enumerate(fib)
                       if w > 0 and X.values[a] != v]
                if bad:
                    law = "concentration"
                    break
                pv = dict(pi)[v]
                if sum(fib) * pv != push_by[str(v)] * 1:
                    law = "density identity"
                    break
        if law is None:
            for a in range(space.n_atoms):
                got = sum((dict(pi)[v] * fib[a]
                           for v, fib in fibers.items()), Fraction(0))
                if got != mu_plus[a]:
                    law = "marginalisability"
                    break
        if law is None:
            for bi, b in enumerate(m.blocks):
                got = sum((dict(pi)[v] * fam.weights[bi]
                           for v, fam in family.items()), Fraction(0))
                if got != m.weights[bi]:
                    law = "restricted marginalisability"
                    break
        if law is not None:
            return Counterexample(name, i, space, m, {"X": X}, {},
                                  law, side="law")
    return Pass(name, trials)


def _suite_monotonicity(trials: int, seed) -> "Pass | Counterexample":
    name = "monotonicity"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        space = rand_space(rng, max_coords=2, max_vals=2)
        fine = rand_model(rng, space, max_blocks=4)
        m = _coarsen(rng, fine)
        X = _block_rv(rng, m, "X")
        fixtures: List[A.Assertion] = [
            A.Own(Var("X")),
            A.Dist(Var("X"), _push_table(m, X)),
            A.Score(RealLit(m.total)),
            A.NormConst(),
            A.Star(A.Own(Var("X")), A.NormConst()),
        ]
        if m.total == 1:
            fixtures.append(A.TopOne())
        for a in fixtures:
            if _sat({}, {"X": X}, m, a, rng=rng) and \
                    not _sat({}, {"X": X}, fine, a, rng=rng):
                return Counterexample(name, i, space, fine, {"X": X}, {},
                                      render_assertion(a), side="rhs")
    return Pass(name, trials)


# ----------------------------------------------------------------
# suites over entailment rules

def _bayes_instance(rng: random.Random
                    ) -> Tuple[Mapping, Mapping[str, FiniteRV],
                               FiniteModel, A.Assertion, A.Assertion]:
    n_vals = rng.choice((2, 3))
    vals = tuple(Fraction(i) for i in range(n_vals))
    two_coord = rng.random() < 0.5
    if two_coord:
        space = FiniteSpace((vals, (Fraction(0), Fraction(1))))
    else:
        space = FiniteSpace((vals,))
    X = coord_rv(space, 0, "X")
    pi = {v: _pos_frac(rng) for v in vals}
    f = {v: _frac(rng) for v in vals}
    if all(f[v] * pi[v] == 0 for v in vals):
        f[vals[0]] = Fraction(1)
    blocks = space.coordinate_blocks(0)
    if rng.random() < 0.6:
        weights = tuple(f[space.atoms[min(b)][0]] * pi[space.atoms[min(b)][0]]
                        for b in blocks)
    else:
        weights = tuple(_frac(rng) for _ in blocks)
        if sum(weights) == 0:
            weights = weights[:-1] + (Fraction(1),)
    m = FiniteModel(space, blocks, weights)
    lhs = A.Dist(Var("X"), DiscreteTable(
        tuple((v, f[v] * pi[v]) for v in vals)))
    rhs = A.Cond("x", Var("X"),
                 DiscreteTable(tuple((v, pi[v]) for v in vals)),
                 A.Score(_table_fn("x", f)))
    return {}, {"X": X}, m, lhs, rhs


def _suite_e_bayes(trials: int, seed) -> "Pass | Counterexample":
    name = "e-bayes"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        gamma, D, m, lhs, rhs = _bayes_instance(rng)
        a = _sat(gamma, D, m, lhs, rng=rng)
        b = _sat(gamma, D, m, rhs, rng=rng)
        if a != b:
            side = "rhs" if a else "lhs"
            return Counterexample(name, i, m.space, m, dict(D), {},
                                  render_assertion(rhs if a else lhs),
                                  side=side)
    return Pass(name, trials)


def _suite_e_normconst(trials: int, seed) -> "Pass | Counterexample":
    name = "e-normconst"
    pair = (A.Star(A.NormConst(), A.NormConst()), A.NormConst())

    def gen(rng: random.Random) -> Instance:
        space = rand_space(rng, max_coords=2, max_vals=2)
        return {}, {}, rand_model(rng, space, max_blocks=3)

    return check_entailment(pair, trials, seed, instances=gen, suite=name)


def _split_model(rng: random.Random, left_prob: bool, right_prob: bool):
    space = FiniteSpace(((Fraction(0), Fraction(1)),
                         (Fraction(0), Fraction(1))))
    m1 = coord_model(rng, space, 0,
                     total=Fraction(1) if left_prob else None)
    m2 = coord_model(rng, space, 1,
                     total=Fraction(1) if right_prob else None)
    m = indep_combine(m1, m2)
    assert m is not None  # coordinate algebras always combine
    X1 = coord_rv(space, 0, "X1")
    X2 = coord_rv(space, 1, "X2")
    P = A.Dist(Var("X1"), _push_table(m1, X1))
    Q = A.Dist(Var("X2"), _push_table(m2, X2)) if right_prob \
        else A.Score(RealLit(m2.total))
    D = {"X1": X1, "X2": X2}
    return m, D, P, Q


def _suite_weakening(trials: int, seed) -> "Pass | Counterexample":
    """Affine conjuncts can be dropped; Prop-style weakenings."""
    name = "weakening"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        variant = rng.choice(("weak1", "weak2", "weak"))
        if variant == "weak1":
            m, D, P, Q = _split_model(rng, left_prob=False,
                                      right_prob=True)
            lhs, rhs = A.Star(P, Q), P
        elif variant == "weak2":
            m, D, P, Q = _split_model(rng, left_prob=True,
                                      right_prob=False)
            lhs, rhs = A.Star(P, Q), Q
        else:
            m, D, P, Q = _split_model(rng, left_prob=True,
                                      right_prob=True)
            lhs, rhs = A.Star(P, Q), A.And(P, Q)
        if not _sat({}, D, m, lhs, rng=rng):
            return Counterexample(name, i, m.space, m, dict(D), {},
                                  render_assertion(lhs), side="lhs")
        if not _sat({}, D, m, rhs, rng=rng):
            return Counterexample(name, i, m.space, m, dict(D), {},
                                  render_assertion(rhs), side="rhs")
    return Pass(name, trials)


def _suite_star_unit(trials: int, seed) -> "Pass | Counterexample":
    name = "star-unit"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        space = rand_space(rng, max_coords=2, max_vals=2)
        m = rand_model(rng, space, max_blocks=3)
        X = _block_rv(rng, m, "X")
        base: List[A.Assertion] = [
            A.Dist(Var("X"), _push_table(m, X)),
            A.Score(RealLit(m.total)),
            A.NormConst(),
            A.Own(Var("X")),
        ]
        for P in base:
            lhs = A.Star(P, A.TopOne())
            a = _sat({}, {"X": X}, m, lhs, rng=rng)
            b = _sat({}, {"X": X}, m, P, rng=rng)
            if a != b:
                side = "rhs" if a else "lhs"
                return Counterexample(
                    name, i, space, m, {"X": X}, {},
                    render_assertion(P if a else lhs), side=side)
    return Pass(name, trials)


def _suite_star_comm_assoc(trials: int, seed) -> "Pass | Counterexample":
    name = "star-comm-assoc"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        space = FiniteSpace(((Fraction(0), Fraction(1)),
                             (Fraction(0), Fraction(1))))
        m1 = coord_model(rng, space, 0)
        m2 = coord_model(rng, space, 1)
        m = indep_combine(m1, m2)
        X1 = coord_rv(space, 0, "X1")
        D = {"X1": X1}
        P = A.Dist(Var("X1"), _push_table(m1, X1))
        Q = A.Score(RealLit(m2.total))
        R = A.NormConst()
        comm = (A.Star(P, Q), A.Star(Q, P))
        assoc = (A.Star(A.Star(P, Q), R), A.Star(P, A.Star(Q, R)))
        for lhs, rhs in (comm, assoc):
            a = _sat({}, D, m, lhs, rng=rng)
            b = _sat({}, D, m, rhs, rng=rng)
            if a != b:
                side = "rhs" if a else "lhs"
                return Counterexample(
                    name, i, space, m, dict(D), {},
                    render_assertion(rhs if a else lhs), side=side)
    return Pass(name, trials)


def _suite_and_or(trials: int, seed) -> "Pass | Counterexample":
    name = "and-or"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        space = rand_space(rng, max_coords=2, max_vals=2)
        m = rand_model(rng, space, max_blocks=3)
        X = _block_rv(rng, m, "X")
        D = {"X": X}
        P = A.Dist(Var("X"), _push_table(m, X))
        Q = A.Score(RealLit(m.total))
        checks = [
            (A.And(P, Q), P), (A.And(P, Q), Q),
            (P, A.Or(P, Q)), (Q, A.Or(Q, P)),
        ]
        for lhs, rhs in checks:
            if _sat({}, D, m, lhs, rng=rng) and \
                    not _sat({}, D, m, rhs, rng=rng):
                return Counterexample(name, i, space, m, dict(D), {},
                                      render_assertion(rhs), side="rhs")
    return Pass(name, trials)


def _suite_true_false(trials: int, seed) -> "Pass | Counterexample":
    name = "true-false"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        space = rand_space(rng, max_coords=2, max_vals=2)
        m = rand_model(rng, space, max_blocks=3,
                       total=Fraction(1) if rng.random() < 0.5 else None)
        X = _block_rv(rng, m, "X")
        D = {"X": X}
        P = A.Dist(Var("X"), _push_table(m, X))
        affine = m.total == 1
        if affine and _sat({}, D, m, P, rng=rng) and \
                not _sat({}, D, m, A.TopOne(), rng=rng):
            return Counterexample(name, i, space, m, dict(D), {},
                                  "affine fact must imply unit",
                                  side="rhs")
        if _sat({}, D, m, A.Score(RealLit(Fraction(0))), rng=rng):
            return Counterexample(name, i, space, m, dict(D), {},
                                  "zero likelihood is unsatisfiable",
                                  side="lhs")
    return Pass(name, trials)


def _suite_adjoint(trials: int, seed) -> "Pass | Counterexample":
    """The wand is adjoint to the separating conjunction; test both
    directions on likelihood atoms, whose splits are fully pinned."""
    name = "adjoint"
    for i in range(trials):
        rng = _trial_rng(seed, i)
        a_val = _pos_frac(rng)
        b_val = _pos_frac(rng)
        P = A.Score(RealLit(a_val))
        Q = A.Score(RealLit(b_val))
        R = A.Score(RealLit(a_val * b_val))
        space = FiniteSpace(((Fraction(0), Fraction(1)),
                             (Fraction(0), Fraction(1))))
        m = rand_model(rng, space, max_blocks=2,
                       total=a_val if rng.random() < 0.7 else None)
        if _sat({}, {}, m, P, rng=rng):
            if not _sat({}, {}, m, A.Wand(Q, R), rng=rng):
                return Counterexample(name, i, space, m, {}, {},
                                      render_assertion(A.Wand(Q, R)),
                                      side="rhs")
        full = rand_model(rng, space, max_blocks=2, total=a_val * b_val)
        if _sat({}, {}, full, A.Star(P, Q), rng=rng) and \
                not _sat({}, {}, full, R, rng=rng):
            return Counterexample(name, i, space, full, {}, {},
                                  render_assertion(R), side="rhs")
    return Pass(name, trials)


# ----------------------------------------------------------------
# mutation testing: deliberately wrong rules must be caught

def _mutations() -> List[Tuple[str, Callable[[random.Random],
                                             Tuple[Mapping, Mapping,
                                                   FiniteModel,
                                                   A.Assertion,
                                                   A.Assertion]]]]:
    def unnormalized_to_unit(rng):
        space = FiniteSpace(((Fraction(0), Fraction(1)),))
        X = coord_rv(space, 0, "X")
        w = (_pos_frac(rng), _pos_frac(rng))
        m = FiniteModel(space, (frozenset([0]), frozenset([1])), w)
        lhs = A.Dist(Var("X"), DiscreteTable(
            ((Fraction(0), w[0]), (Fraction(1), w[1]))))
        return {}, {"X": X}, m, lhs, A.TopOne()

    def normconst_to_unit(rng):
        space = FiniteSpace(((Fraction(0), Fraction(1)),))
        m = rand_model(rng, space, max_blocks=2)
        return {}, {}, m, A.NormConst(), A.TopOne()

    def unrestricted_weak(rng):
        space = FiniteSpace(((Fraction(0), Fraction(1)),))
        m = rand_model(rng, space, max_blocks=2)
        half = m.total / 2
        lhs = A.Star(A.Score(RealLit(half)), A.Score(RealLit(Fraction(2))))
        rhs = A.And(A.Score(RealLit(half)), A.Score(RealLit(Fraction(2))))
        return {}, {}, m, lhs, rhs

    def bayes_wrong_density(rng):
        gamma, D, m, lhs, rhs = _bayes_instance(rng)
        assert isinstance(rhs, A.Cond)
        bumped = A.Cond(rhs.binder, rhs.expr, rhs.measure,
                        A.Score(Builtin(
                            "+", (rhs.body.weight, RealLit(Fraction(1))))))
        return gamma, D, m, lhs, bumped

    def sound_control(rng):
        # a correct rule: owning X gives ownership of any function of X
        space = FiniteSpace(((Fraction(0), Fraction(1)),))
        fine = FiniteModel(space, (frozenset([0]), frozenset([1])),
                           (_pos_frac(rng), _pos_frac(rng)))
        X = coord_rv(space, 0, "X")
        lhs = A.Dist(Var("X"), _push_table(fine, X))
        return ({}, {"X": X}, fine, lhs,
                A.Own(Builtin("*", (Var("X"), RealLit(Fraction(0))))))

    return [
        ("unnormalized-dist-to-unit", unnormalized_to_unit),
        ("normconst-to-unit", normconst_to_unit),
        ("weakening-without-affine", unrestricted_weak),
        ("bayes-wrong-density", bayes_wrong_density),
        ("sound-consequence-control", sound_control),
    ]


def _suite_mutations(trials: int, seed) -> "Pass | Counterexample":
    """Every deliberately wrong rule must be refuted within the budget.

    The last mutation is a sanity case whose right side is in fact
    derivable; it guards against a checker that rejects everything."""
    name = "mutations"
    for mut_name, gen in _mutations():
        found = None
        for i in range(trials):
            rng = _trial_rng(f"{seed}/{mut_name}", i)
            gamma, D, m, lhs, rhs = gen(rng)
            if _sat(gamma, D, m, lhs, rng=rng) and \
                    not _sat(gamma, D, m, rhs, rng=rng):
                found = i
                break
        if mut_name == "sound-consequence-control":
            if found is not None:
                return Counterexample(
                    name, found, m.space, m, dict(D), {},
                    f"{mut_name}: sound consequence was refuted",
                    side="lhs")
        elif found is None:
            return Counterexample(
                name, trials, None, None, {}, {},
                f"{mut_name}: no counterexample within {trials} trials",
                side="undetected")
    return Pass(name, trials)


RULE_SUITES: Dict[str, Callable[[int, object], "Pass | Counterexample"]] = {
    "pcm": _suite_pcm,
    "kripke": _suite_kripke,
    "disintegration": _suite_disintegration,
    "monotonicity": _suite_monotonicity,
    "e-bayes": _suite_e_bayes,
    "e-normconst": _suite_e_normconst,
    "weakening": _suite_weakening,
    "star-unit": _suite_star_unit,
    "star-comm-assoc": _suite_star_comm_assoc,
    "and-or": _suite_and_or,
    "true-false": _suite_true_false,
    "adjoint": _suite_adjoint,
    "mutations": _suite_mutations,
}

DEFAULT_TRIALS: Dict[str, int] = {
    "pcm": 1000,
    "kripke": 1000,
    "disintegration": 1000,
    "monotonicity": 500,
    "e-bayes": 500,
    "e-normconst": 500,
    "weakening": 500,
    "star-unit": 500,
    "star-comm-assoc": 500,
    "and-or": 500,
    "true-false": 500,
    "adjoint": 200,
    "mutations": 500,
}


def run_suite(name: str, trials: Optional[int] = None,
              seed=0, caps: Optional[SatCaps] = None
              ) -> "Pass | Counterexample":
    if name not in RULE_SUITES:
        raise KeyError(f"unknown rule suite {name!r}; have "
                       f"{', '.join(sorted(RULE_SUITES))}")
    n = trials if trials is not None else DEFAULT_TRIALS[name]
    global _ACTIVE_CAPS
    prev = _ACTIVE_CAPS
    _ACTIVE_CAPS = caps
    try:
        return RULE_SUITES[name](n, seed)
    finally:
        _ACTIVE_CAPS = prev
