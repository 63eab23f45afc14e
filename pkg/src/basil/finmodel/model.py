"""Finite probability models: spaces, sigma-algebras as partitions, and
the measure algebra the assertion logic is interpreted over.

Everything here is exact. Weights are Fractions, partitions are frozensets
of atom indices, and all operations either produce exact results or refuse.
At this scale a sigma-algebra is determined by its atoms, so we store the
partition directly; countable generation and footprint side conditions are
vacuous and never represented.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from basil.dist import _value_key

MAX_ATOMS = 64


class FinModelError(Exception):
    pass


class DominationError(FinModelError):
    """The conditioning measure misses mass that the pushforward has."""


class ZeroMass(FinModelError):
    """A rescaling wiped out all mass; the result is not a model."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"weight must be rational, got {type(x).__name__}")


@dataclass(frozen=True)
class FiniteSpace:
    """Cartesian product of finite coordinate carriers.

    Atoms are the product tuples, indexable by position. The atom count
    is capped because several checks enumerate partitions of the atom
    set, which grows as a Bell number.
    """

    coords: Tuple[Tuple[object, ...], ...]
    atoms: Tuple[Tuple[object, ...], ...] = field(init=False, compare=False)

    def __post_init__(self):
        coords = tuple(tuple(c) for c in self.coords)
        if not coords or any(len(c) == 0 for c in coords):
            raise ValueError("every coordinate needs at least one value")
        for c in coords:
            if len({_value_key(v) for v in c}) != len(c):
                raise ValueError("coordinate values must be distinct")
        object.__setattr__(self, "coords", coords)
        atoms = tuple(itertools.product(*coords))
        if len(atoms) > MAX_ATOMS:
            raise ValueError(
                f"{len(atoms)} atoms exceed the cap of {MAX_ATOMS}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def coordinate_blocks(self, i: int) -> Tuple[frozenset, ...]:
        """Partition of the atom set by the value of coordinate i."""
        by_val: Dict[object, set] = {}
        for idx, atom in enumerate(self.atoms):
            by_val.setdefault(_value_key(atom[i]), set()).add(idx)
        return _canon_blocks(frozenset(s) for s in by_val.values())


def _canon_blocks(blocks: Iterable[frozenset]) -> Tuple[frozenset, ...]:
    return tuple(sorted(blocks, key=min))


@dataclass(frozen=True)
class FiniteModel:
    """A sigma-algebra (as a partition of atoms) with a weight per block.

    Total weight must be positive; zero-mass measures are excluded from
    the model algebra. Disintegration fibers are the one place a zero
    total arises legitimately, and they are built with allow_zero.
    """

    space: FiniteSpace
    blocks: Tuple[frozenset, ...]
    weights: Tuple[Fraction, ...]
    allow_zero: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self):
        blocks = _canon_blocks(frozenset(b) for b in self.blocks)
        order = sorted(range(len(self.blocks)),
                       key=lambda i: min(frozenset(self.blocks[i])))
        weights = tuple(_frac(self.weights[i]) for i in order)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "weights", weights)
        if len(blocks) != len(weights):
            raise ValueError("one weight per block")
        seen: set = set()
        for b in blocks:
            if not b:
                raise ValueError("empty block")
            if b & seen:
                raise ValueError("blocks overlap")
            seen |= b
        if seen != set(range(self.space.n_atoms)):
            raise ValueError("blocks do not partition the atom set")
        if any(w < 0 for w in weights):
            raise ValueError("negative weight")
        if not self.allow_zero and sum(weights) <= 0:
            raise ValueError("total weight must be positive")

    @property
    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def block_index(self) -> Dict[int, int]:
        """atom index -> position of its block."""
        out: Dict[int, int] = {}
        for i, b in enumerate(self.blocks):
            for a in b:
                out[a] = i
        return out

    def measure_of(self, atoms: frozenset) -> Fraction:
        """Measure of a union of blocks; refuses non-measurable sets."""
        rest = set(atoms)
        acc = Fraction(0)
        for b, w in zip(self.blocks, self.weights):
            if b <= rest:
                acc += w
                rest -= b
            elif b & rest:
                raise ValueError("set is not a union of blocks")
        if rest:
            raise ValueError("set contains unknown atoms")
        return acc

    def atom_weights_uniform(self) -> Tuple[Fraction, ...]:
        """Refine to atoms, splitting each block's weight evenly."""
        out = [Fraction(0)] * self.space.n_atoms
        for b, w in zip(self.blocks, self.weights):
            share = w / len(b)
            for a in b:
                out[a] = share
        return tuple(out)


def unit_model(space: FiniteSpace) -> FiniteModel:
    """The trivial probability space: one block carrying weight 1."""
    return FiniteModel(space, (frozenset(range(space.n_atoms)),),
                       (Fraction(1),))


@dataclass(frozen=True)
class FiniteRV:
    """A named random variable: one value per atom.

    Use 0/1 Fractions rather than Python bools for indicator-style
    variables; the satisfaction checker keys outcomes the same way
    DiscreteTable does, and bools key differently from numbers.
    """

    name: str
    values: Tuple[object, ...]

    def on(self, space: FiniteSpace) -> bool:
        return len(self.values) == space.n_atoms

    def owned_by(self, m: FiniteModel) -> bool:
        """Measurable with respect to m's sigma-algebra: constant per block."""
        for b in m.blocks:
            it = iter(b)
            first = _value_key(self.values[next(it)])
            if any(_value_key(self.values[a]) != first for a in it):
                return False
        return True


def coord_rv(space: FiniteSpace, i: int, name: str) -> FiniteRV:
    return FiniteRV(name, tuple(atom[i] for atom in space.atoms))


def indep_combine(m1: FiniteModel, m2: FiniteModel) -> Optional[FiniteModel]:
    """Independent combination, or None when it does not exist.

    The joined partition is the common refinement and each joint block
    a∩b carries weight mu(a)*nu(b). The combination exists exactly when
    no mass lands on an empty intersection; the explicit marginal checks
    below are implied by that but guard the implementation.
    """
    if m1.space != m2.space:
        raise ValueError("models live on different spaces")
    blocks: List[frozenset] = []
    weights: List[Fraction] = []
    for a, wa in zip(m1.blocks, m1.weights):
        for b, wb in zip(m2.blocks, m2.weights):
            c = a & b
            if not c:
                if wa * wb > 0:
                    return None
            else:
                blocks.append(c)
                weights.append(wa * wb)
    by_block = dict(zip(blocks, weights))
    for a, wa in zip(m1.blocks, m1.weights):
        got = sum((w for c, w in by_block.items() if c <= a), Fraction(0))
        if got != wa * m2.total:
            return None
    for b, wb in zip(m2.blocks, m2.weights):
        got = sum((w for c, w in by_block.items() if c <= b), Fraction(0))
        if got != wb * m1.total:
            return None
    if sum(weights) <= 0:
        return None
    return FiniteModel(m1.space, tuple(blocks), tuple(weights))


def kripke_leq(m1: FiniteModel, m2: FiniteModel) -> bool:
    """m1 below m2: m2's algebra refines m1's and the measures agree
    on m1's blocks."""
    if m1.space != m2.space:
        raise ValueError("models live on different spaces")
    idx = m1.block_index()
    sums = [Fraction(0)] * len(m1.blocks)
    for b, w in zip(m2.blocks, m2.weights):
        homes = {idx[a] for a in b}
        if len(homes) != 1:
            return False
        sums[homes.pop()] += w
    return all(s == w for s, w in zip(sums, m1.weights))


def _pi_table(pi) -> List[Tuple[object, Fraction]]:
    if isinstance(pi, Mapping):
        rows = list(pi.items())
    else:
        rows = list(pi)
    return [(v, _frac(w)) for v, w in rows]


def pushforward(m: FiniteModel, rv: FiniteRV,
                atom_weights: Optional[Sequence[Fraction]] = None
                ) -> List[Tuple[object, Fraction]]:
    """Distribution of rv's values under m, refined uniformly to atoms
    unless explicit atom weights are supplied."""
    if atom_weights is None:
        atom_weights = m.atom_weights_uniform()
    acc: Dict[tuple, Fraction] = {}
    rep: Dict[tuple, object] = {}
    for a, w in enumerate(atom_weights):
        k = _value_key(rv.values[a])
        acc[k] = acc.get(k, Fraction(0)) + w
        rep.setdefault(k, rv.values[a])
    return [(rep[k], acc[k]) for k in sorted(acc)]


def disintegrate(m: FiniteModel, rv: FiniteRV, pi
                 ) -> Dict[object, FiniteModel]:
    """Condition m on each value of rv, normalizing by pi.

    Weights are first refined to atoms by an even split within each
    block; the fiber at x gives atom w weight mu+(w)[rv=x]/pi(x) and is
    then restricted back to m's partition. Raises DominationError when
    pi assigns zero to a value that carries pushforward mass. Fibers may
    have zero total (when pi strictly dominates); they are returned as
    zero-mass models.
    """
    table = _pi_table(pi)
    pi_by_key = {}
    for v, w in table:
        pi_by_key[_value_key(v)] = w
    mu_plus = m.atom_weights_uniform()
    push = dict((_value_key(v), w) for v, w in pushforward(m, rv, mu_plus))
    for k, w in push.items():
        if w > 0 and pi_by_key.get(k, Fraction(0)) == 0:
            raise DominationError(
                "conditioning measure misses pushforward mass")
    out: Dict[object, FiniteModel] = {}
    for v, pw in table:
        if pw <= 0:
            continue
        k = _value_key(v)
        fiber = [w / pw if _value_key(rv.values[a]) == k else Fraction(0)
                 for a, w in enumerate(mu_plus)]
        weights = tuple(sum((fiber[a] for a in b), Fraction(0))
                        for b in m.blocks)
        out[v] = FiniteModel(m.space, m.blocks, weights, allow_zero=True)
    return out


def disintegrate_atoms(m: FiniteModel, rv: FiniteRV, pi
                       ) -> Dict[object, Tuple[Fraction, ...]]:
    """Atom-level fibers of the uniform refinement, for axiom checks."""
    table = _pi_table(pi)
    mu_plus = m.atom_weights_uniform()
    push = dict((_value_key(v), w) for v, w in pushforward(m, rv, mu_plus))
    for v, pw in table:
        if pw == 0 and push.get(_value_key(v), Fraction(0)) > 0:
            raise DominationError(
                "conditioning measure misses pushforward mass")
    out: Dict[object, Tuple[Fraction, ...]] = {}
    for v, pw in table:
        if pw <= 0:
            continue
        k = _value_key(v)
        out[v] = tuple(
            w / pw if _value_key(rv.values[a]) == k else Fraction(0)
            for a, w in enumerate(mu_plus))
    return out


def scale_by_likelihood(m: FiniteModel, ell: Sequence) -> FiniteModel:
    """Reweight blockwise by a likelihood that is constant per block."""
    if len(ell) != m.space.n_atoms:
        raise ValueError("one likelihood value per atom")
    vals = [_frac(x) for x in ell]
    if any(v < 0 for v in vals):
        raise ValueError("negative likelihood")
    weights = []
    for b, w in zip(m.blocks, m.weights):
        per_block = {vals[a] for a in b}
        if len(per_block) != 1:
            raise ValueError("likelihood not constant on a block")
        weights.append(per_block.pop() * w)
    if sum(weights) == 0:
        raise ZeroMass("likelihood removed all mass")
    return FiniteModel(m.space, m.blocks, tuple(weights))


def partitions_of(items: Sequence) -> List[List[List]]:
    """All set partitions, via the usual element-insertion recursion."""
    items = list(items)
    if not items:
        return [[]]
    head, rest = items[0], partitions_of(items[1:])
    out: List[List[List]] = []
    for p in rest:
        for i in range(len(p)):
            out.append(p[:i] + [[head] + p[i]] + p[i + 1:])
        out.append([[head]] + p)
    return out


def coarsenings(m: FiniteModel) -> List[Tuple[Tuple[frozenset, ...],
                                              Tuple[Fraction, ...]]]:
    """All coarser partitions of m's blocks, with merged weights."""
    out = []
    for groups in partitions_of(range(len(m.blocks))):
        blocks = tuple(frozenset().union(*(m.blocks[i] for i in g))
                       for g in groups)
        weights = tuple(sum((m.weights[i] for i in g), Fraction(0))
                        for g in groups)
        order = sorted(range(len(blocks)), key=lambda j: min(blocks[j]))
        out.append((tuple(blocks[j] for j in order),
                    tuple(weights[j] for j in order)))
    return out
