"""Satisfaction of assertions over finite models.

Implements each clause of the assertion semantics literally, at finite
scale. A configuration is (gamma, D, m): a deterministic environment, a
named family of random variables, and a finite model. All arithmetic is
exact.

Two clauses quantify over objects that are infinite even here: Implies
and Wand range over all extensions or compatible models, and Cond ranges
over all ways of extending block weights down to atoms. Partitions are
enumerated exhaustively (with caps, refusing when too large); weight
vectors come from a grid of an even split plus seeded random rational
splits. That makes the universal clauses slightly optimistic: a missed
weight vector could hide a counterexample. The law suites accept this;
it is the standard finite-checking trade.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from basil import dist
from basil.assertions import nodes as A
from basil.dist import _value_key, finite_support
from basil.syntax.check import BOOL
from basil.syntax.evaluate import EvalError, eval_det
from basil.syntax.terms import Term

from .model import (
    FinModelError,
    FiniteModel,
    FiniteRV,
    coarsenings,
    disintegrate,
    indep_combine,
    partitions_of,
)


class EnumerationCap(FinModelError):
    """The check would need an enumeration past the configured caps.

    Raised instead of approximating; callers shrink the model or raise
    the cap."""


@dataclass(frozen=True)
class SatCaps:
    star_blocks: int = 6
    lattice_atoms: int = 6
    rv_functions: int = 4096
    nat_grid: int = 8
    random_splits: int = 3


def _key(v):
    if isinstance(v, bool):
        return _value_key(Fraction(int(v)))
    return _value_key(v)


def _rand_weight(rng: random.Random) -> Fraction:
    den = rng.choice((2, 3, 4, 5, 6, 8, 10, 12, 24, 60, 720))
    return Fraction(rng.randint(0, 2 * den), den)


def _rand_split(rng: random.Random, w: Fraction, parts: int
                ) -> List[Fraction]:
    shares = [rng.randint(1, 720) for _ in range(parts)]
    tot = sum(shares)
    return [w * s / tot for s in shares]


class _Checker:
    def __init__(self, gamma: Mapping, D: Mapping[str, FiniteRV],
                 rng: random.Random, caps: SatCaps):
        self.gamma = dict(gamma)
        self.D = dict(D)
        self.rng = rng
        self.caps = caps
        self._memo: Dict[Tuple[int, FiniteModel], bool] = {}

    # -- expression evaluation -------------------------------------

    def _env_at(self, atom: int) -> Dict[str, object]:
        env = dict(self.gamma)
        for name, rv in self.D.items():
            env[name] = rv.values[atom]
        return env

    def _eval_atoms(self, e: Term, m: FiniteModel) -> List[object]:
        return [eval_det(e, self._env_at(a))
                for a in range(m.space.n_atoms)]

    def _eval_det(self, e: Term):
        return eval_det(e, dict(self.gamma))

    def _block_values(self, vals: Sequence, m: FiniteModel
                      ) -> Optional[List[object]]:
        """One value per block when vals is block-constant, else None."""
        out = []
        for b in m.blocks:
            keys = {_key(vals[a]) for a in b}
            if len(keys) != 1:
                return None
            out.append(vals[min(b)])
        return out

    # -- entry point -----------------------------------------------

    def sat(self, m: FiniteModel, a: A.Assertion) -> bool:
        k = (id(a), m)
        hit = self._memo.get(k)
        if hit is not None:
            return hit
        out = self._sat(m, a)
        self._memo[k] = out
        return out

    def _sat(self, m: FiniteModel, a: A.Assertion) -> bool:
        if isinstance(a, A.Top):
            return True
        if isinstance(a, A.Bot):
            return False
        if isinstance(a, A.TopOne):
            return m.total == 1
        if isinstance(a, A.NormConst):
            return m.total > 0
        if isinstance(a, A.Score):
            try:
                v = self._eval_det(a.weight)
            except EvalError:
                return False
            return m.total == v
        if isinstance(a, A.And):
            return self.sat(m, a.left) and self.sat(m, a.right)
        if isinstance(a, A.Or):
            return self.sat(m, a.left) or self.sat(m, a.right)
        if isinstance(a, A.Star):
            return self._sat_star(m, a)
        if isinstance(a, A.Implies):
            return self._sat_implies(m, a)
        if isinstance(a, A.Wand):
            return self._sat_wand(m, a)
        if isinstance(a, A.Own):
            vals = self._eval_atoms(a.expr, m)
            return self._block_values(vals, m) is not None
        if isinstance(a, A.Dist):
            return self._sat_dist(m, a)
        if isinstance(a, A.Expect):
            return self._sat_expect(m, a)
        if isinstance(a, A.Cov):
            return self._sat_cov(m, a)
        if isinstance(a, A.Cond):
            return self._sat_cond(m, a)
        if isinstance(a, (A.ForallDet, A.ExistsDet)):
            return self._sat_det_quant(m, a)
        if isinstance(a, (A.ForallRV, A.ExistsRV)):
            return self._sat_rv_quant(m, a)
        if isinstance(a, A.Triple):
            raise ValueError("Hoare triples have no finite satisfaction "
                             "clause here; check them via the prover")
        raise TypeError(f"satisfies: {type(a).__name__}")

    # -- probabilistic atoms ---------------------------------------

    def _sat_dist(self, m: FiniteModel, a: A.Dist) -> bool:
        vals = self._eval_atoms(a.expr, m)
        per_block = self._block_values(vals, m)
        if per_block is None:
            return False
        rows = finite_support(a.measure, dict(self.gamma))
        if rows is None:
            # a finite pushforward never equals a non-atomic measure
            return False
        push: Dict[tuple, Fraction] = {}
        for v, w in zip(per_block, m.weights):
            push[_key(v)] = push.get(_key(v), Fraction(0)) + w
        want: Dict[tuple, Fraction] = {}
        for v, w in rows:
            want[_key(v)] = want.get(_key(v), Fraction(0)) + w
        keys = set(push) | set(want)
        return all(push.get(k, Fraction(0)) == want.get(k, Fraction(0))
                   for k in keys)

    def _integral(self, m: FiniteModel, e: Term) -> Optional[Fraction]:
        vals = self._eval_atoms(e, m)
        per_block = self._block_values(vals, m)
        if per_block is None:
            return None
        return sum((Fraction(v) * w if not isinstance(v, bool)
                    else Fraction(int(v)) * w
                    for v, w in zip(per_block, m.weights)), Fraction(0))

    def _sat_expect(self, m: FiniteModel, a: A.Expect) -> bool:
        if m.total != 1:
            return False
        got = self._integral(m, a.expr)
        if got is None:
            return False
        try:
            return got == self._eval_det(a.value)
        except EvalError:
            return False

    def _sat_cov(self, m: FiniteModel, a: A.Cov) -> bool:
        if m.total != 1:
            return False
        el = self._integral(m, a.left)
        er = self._integral(m, a.right)
        if el is None or er is None:
            return False
        lv = self._eval_atoms(a.left, m)
        rv = self._eval_atoms(a.right, m)
        prod = [Fraction(x) * Fraction(y) for x, y in zip(lv, rv)]
        per_block = self._block_values(prod, m)
        if per_block is None:
            return False
        elr = sum((Fraction(v) * w for v, w in zip(per_block, m.weights)),
                  Fraction(0))
        cov = elr - el * er
        try:
            bound = self._eval_det(a.bound)
        except EvalError:
            return False
        return {"<": cov < bound, "<=": cov <= bound, ">": cov > bound,
                ">=": cov >= bound, "=": cov == bound}[a.op]

    def _sat_cond(self, m: FiniteModel, a: A.Cond) -> bool:
        vals = self._eval_atoms(a.expr, m)
        if self._block_values(vals, m) is None:
            return False
        rows = finite_support(a.measure, dict(self.gamma))
        if rows is None:
            raise EnumerationCap("conditioning measure is not finite")
        pi = {}
        for v, w in rows:
            pi[_key(v)] = pi.get(_key(v), Fraction(0)) + Fraction(w)
        push: Dict[tuple, Fraction] = {}
        uniform = m.atom_weights_uniform()
        for at, w in enumerate(uniform):
            k = _key(vals[at])
            push[k] = push.get(k, Fraction(0)) + w
        for k, w in push.items():
            if w > 0 and pi.get(k, Fraction(0)) == 0:
                return False
        names = a.binder_names()
        for ext in self._extensions_to_atoms(m):
            for v, pw in rows:
                pw = Fraction(pw)
                if pw <= 0:
                    continue
                fiber = [w / pw if _key(vals[at]) == _key(v) else Fraction(0)
                         for at, w in enumerate(ext)]
                weights = tuple(sum((fiber[at] for at in b), Fraction(0))
                                for b in m.blocks)
                sub = FiniteModel(m.space, m.blocks, weights,
                                  allow_zero=True)
                inner = _Checker(self._bind(names, v), self.D,
                                 self.rng, self.caps)
                if not inner.sat(sub, a.body):
                    return False
        return True

    def _bind(self, names: Tuple[str, ...], v) -> Dict[str, object]:
        gamma = dict(self.gamma)
        if len(names) == 1:
            gamma[names[0]] = v
            return gamma
        if not isinstance(v, tuple) or len(v) != len(names):
            raise ValueError("binder arity does not match the outcome")
        gamma.update(zip(names, v))
        return gamma

    def _extensions_to_atoms(self, m: FiniteModel
                             ) -> List[Tuple[Fraction, ...]]:
        """Atom-weight vectors extending m: even split plus random splits."""
        out = [m.atom_weights_uniform()]
        for _ in range(self.caps.random_splits):
            ws = [Fraction(0)] * m.space.n_atoms
            for b, w in zip(m.blocks, m.weights):
                items = sorted(b)
                for at, share in zip(items,
                                     _rand_split(self.rng, w, len(items))):
                    ws[at] = share
            out.append(tuple(ws))
        return out

    # -- separation ------------------------------------------------

    def _pinned(self, a: A.Assertion) -> Set[Fraction]:
        """Total masses that satisfying sub-models of a must carry,
        best effort: atoms that pin mass contribute their value."""
        if isinstance(a, (A.TopOne, A.Expect, A.Cov)):
            return {Fraction(1)}
        if isinstance(a, A.Score):
            try:
                v = self._eval_det(a.weight)
            except EvalError:
                return set()
            return {Fraction(v)} if v > 0 else set()
        if isinstance(a, A.Dist):
            try:
                tm = dist.total_mass(a.measure, dict(self.gamma))
            except (EvalError, FinModelError):
                return set()
            if isinstance(tm, Fraction) and tm > 0:
                return {tm}
            return set()
        if isinstance(a, A.Cond):
            rows = finite_support(a.measure, dict(self.gamma))
            if rows is None:
                return set()
            if isinstance(a.body, A.Score):
                names = a.binder_names()
                tot = Fraction(0)
                try:
                    for v, w in rows:
                        env = self._bind(names, v)
                        tot += Fraction(eval_det(a.body.weight, env)) \
                            * Fraction(w)
                except (EvalError, ValueError):
                    return set()
                return {tot} if tot > 0 else set()
            return {sum((Fraction(w) for _, w in rows), Fraction(0))}
        if isinstance(a, (A.And, A.Or)):
            return self._pinned(a.left) | self._pinned(a.right)
        if isinstance(a, A.Star):
            left = self._pinned(a.left)
            right = self._pinned(a.right)
            return {l * r for l in left for r in right} | left | right
        if isinstance(a, (A.ForallDet, A.ExistsDet, A.ForallRV,
                          A.ExistsRV)):
            return self._pinned(a.body)
        return set()

    def _sat_star(self, m: FiniteModel, a: A.Star) -> bool:
        if len(m.blocks) > self.caps.star_blocks:
            raise EnumerationCap(
                f"star split over {len(m.blocks)} blocks (cap "
                f"{self.caps.star_blocks})")
        T = m.total
        cands = {Fraction(1), T}
        for v in self._pinned(a.right):
            if v > 0:
                cands.add(Fraction(v))
        for v in self._pinned(a.left):
            if v > 0:
                cands.add(T / Fraction(v))
        coarse = coarsenings(m)
        for p1, w1 in coarse:
            for p2, w2 in coarse:
                if not self._rank_one(m, p1, w1, p2, w2, T):
                    continue
                for s in sorted(cands):
                    if s <= 0:
                        continue
                    m1 = FiniteModel(m.space, p1,
                                     tuple(w / s for w in w1))
                    m2 = FiniteModel(m.space, p2,
                                     tuple(w * s / T for w in w2))
                    if self.sat(m1, a.left) and self.sat(m2, a.right):
                        return True
        return False

    def _rank_one(self, m, p1, w1, p2, w2, T) -> bool:
        """Does the joint table over p1 x p2 factor as a product?"""
        for blk_a, wa in zip(p1, w1):
            for blk_b, wb in zip(p2, w2):
                c = blk_a & blk_b
                if not c:
                    if wa * wb != 0:
                        return False
                else:
                    if m.measure_of(c) * T != wa * wb:
                        return False
        return True

    # -- Kripke connectives ----------------------------------------

    def _refinements(self, m: FiniteModel) -> List[FiniteModel]:
        """Models above m: every partition refining m's, with the
        block weights split evenly and by random rational shares."""
        if m.space.n_atoms > self.caps.lattice_atoms:
            raise EnumerationCap(
                f"extension lattice over {m.space.n_atoms} atoms (cap "
                f"{self.caps.lattice_atoms})")
        per_block = [partitions_of(sorted(b)) for b in m.blocks]
        out: List[FiniteModel] = []
        for choice in itertools.product(*per_block):
            sub_blocks: List[frozenset] = []
            owners: List[Tuple[Fraction, int]] = []
            for bi, groups in enumerate(choice):
                for g in groups:
                    sub_blocks.append(frozenset(g))
                    owners.append((m.weights[bi], bi))
            for round_ in range(1 + self.caps.random_splits):
                weights: List[Fraction] = []
                by_owner: Dict[int, List[int]] = {}
                for i, (_, bi) in enumerate(owners):
                    by_owner.setdefault(bi, []).append(i)
                weights = [Fraction(0)] * len(sub_blocks)
                for bi, idxs in by_owner.items():
                    w = m.weights[bi]
                    if round_ == 0:
                        total_atoms = sum(len(sub_blocks[i]) for i in idxs)
                        for i in idxs:
                            weights[i] = w * len(sub_blocks[i]) / total_atoms
                    else:
                        for i, share in zip(
                                idxs, _rand_split(self.rng, w, len(idxs))):
                            weights[i] = share
                out.append(FiniteModel(m.space, tuple(sub_blocks),
                                       tuple(weights), allow_zero=True))
                if all(len(g) == 1 for g in choice):
                    break  # single sub-block per block: splits coincide
        return out

    def _sat_implies(self, m: FiniteModel, a: A.Implies) -> bool:
        for m2 in self._refinements(m):
            if self.sat(m2, a.left) and not self.sat(m2, a.right):
                return False
        return True

    def _lattice_sample(self, m: FiniteModel, want_masses: Set[Fraction]
                        ) -> List[FiniteModel]:
        """Candidate partner models on m's space for the Wand clause."""
        n = m.space.n_atoms
        if n > self.caps.lattice_atoms:
            raise EnumerationCap(
                f"partner lattice over {n} atoms (cap "
                f"{self.caps.lattice_atoms})")
        totals = {Fraction(1), Fraction(1, 2), Fraction(2)}
        totals |= {v for v in want_masses if v > 0}
        out: List[FiniteModel] = []
        for groups in partitions_of(range(n)):
            blocks = tuple(frozenset(g) for g in groups)
            k = len(blocks)
            shapes = [[Fraction(1, k)] * k]
            for _ in range(self.caps.random_splits):
                shapes.append(_rand_split(self.rng, Fraction(1), k))
            for shape in shapes:
                for t in totals:
                    out.append(FiniteModel(
                        m.space, blocks, tuple(x * t for x in shape)))
        return out

    def _sat_wand(self, m: FiniteModel, a: A.Wand) -> bool:
        for m1 in self._lattice_sample(m, self._pinned(a.left)):
            if not self.sat(m1, a.left):
                continue
            joined = indep_combine(m1, m)
            if joined is None:
                continue
            if not self.sat(joined, a.right):
                return False
        return True

    # -- quantifiers -----------------------------------------------

    def _det_domain(self, tag) -> Sequence:
        if tag.name == "bool":
            return (False, True)
        if tag.name == "nat":
            return tuple(Fraction(i) for i in range(self.caps.nat_grid))
        raise EnumerationCap(
            f"deterministic quantifier over {tag.name} has no finite "
            "carrier")

    def _sat_det_quant(self, m: FiniteModel, a) -> bool:
        domain = self._det_domain(a.tag)
        results = []
        for v in domain:
            inner = _Checker({**self.gamma, a.name: v}, self.D,
                             self.rng, self.caps)
            results.append(inner.sat(m, a.body))
        if isinstance(a, A.ForallDet):
            return all(results)
        return any(results)

    def _sat_rv_quant(self, m: FiniteModel, a) -> bool:
        if a.space != BOOL:
            raise EnumerationCap(
                "random-variable quantifiers are checked over bool only")
        carrier = (Fraction(0), Fraction(1))
        n = m.space.n_atoms
        if len(carrier) ** n > self.caps.rv_functions:
            raise EnumerationCap("too many candidate random variables")
        results = []
        for assign in itertools.product(carrier, repeat=n):
            rv = FiniteRV(a.name, assign)
            inner = _Checker(self.gamma, {**self.D, a.name: rv},
                             self.rng, self.caps)
            results.append(inner.sat(m, a.body))
        if isinstance(a, A.ForallRV):
            return all(results)
        return any(results)


def satisfies(gamma: Mapping, D: Mapping[str, FiniteRV], m: FiniteModel,
              a: A.Assertion, *, rng: Optional[random.Random] = None,
              caps: Optional[SatCaps] = None) -> bool:
    """Does the configuration (gamma, D, m) satisfy the assertion?

    D maps random-variable names to FiniteRVs on m's space. rng drives
    the sampled weight splits in the Cond/Implies/Wand clauses and
    defaults to a fixed seed, making repeated calls deterministic.
    """
    checker = _Checker(gamma, D, rng or random.Random(0x5eed),
                       caps or SatCaps())
    return checker.sat(m, a)
