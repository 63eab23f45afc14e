"""The symbolic inference engine.

verify folds each statement of a program over a separating state
assertion, one trace step per rule application. After every score or
observation an eager simplification pass runs to a fixpoint: a
conditioned distribution fact whose observed variable is no longer
needed collapses to its total mass, a conditioning context whose body is
a bare likelihood collapses through the Bayes rewrite, reweighted
measures are normalized into a posterior with an explicit mass, and
constant masses are merged and then abstracted to NormConst.

entail proves one assertion from another with a deterministic,
non-backtracking strategy: match the goal conjuncts against the
available ones (allowing measure equality, pair merging, and finite
marginalization), and when that fails, apply one more normalization
rewrite to the left side and retry, within a fixed budget.

Neither function branches on a statement-level conditional: there is no
rule for it, and programs that need one stop with Stuck. Conditionals
inside distribution parameters and weights are fine.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from basil import dist
from basil.assertions import (
    And, Assertion, Bot, Cond, Cov, Dist, ExistsDet, Expect, NormConst,
    Or, Own, Score, Star, Top, TopOne, conjuncts, render_assertion, star,
    subst, subst_det,
)
from basil.syntax import builtins as bi
from basil.syntax import pretty_expr, terms
from basil.syntax.evaluate import EvalError, fold_constants
from basil.syntax.terms import (
    Builtin, Fst, If, Pair, RealLit, Snd, Span, Term, Var, free_vars,
    subst_term,
)
from basil.prover.rules import (
    canonical, const_eval, const_value, exact_expectation, ground_rows,
    is_affine, measure_equal, measure_is_probability, nums_close,
    pattern_env,
)
from basil.prover.trace import ProofStep, ProofTrace

BUDGET = 64


class Stuck(Exception):
    """No rule applies to this statement in this state."""

    def __init__(self, reason: str, span: Optional[Span] = None,
                 state: Optional[Assertion] = None):
        at = f" at {span}" if span else ""
        super().__init__(f"stuck{at}: {reason}")
        self.reason = reason
        self.span = span
        self.state = state


class Fail(Exception):
    """The entailment does not go through; carries both normal forms."""

    def __init__(self, reason: str, lhs: Optional[Assertion] = None,
                 rhs: Optional[Assertion] = None):
        msg = reason
        if lhs is not None and rhs is not None:
            msg += (f"\n  have: {render_assertion(canonical(lhs))}"
                    f"\n  want: {render_assertion(canonical(rhs))}")
        super().__init__(msg)
        self.reason = reason
        self.lhs = lhs
        self.rhs = rhs


def _num_str(v) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else \
            f"{v.numerator}/{v.denominator}"
    return repr(v)


def _lit(v) -> Term:
    return RealLit(v if isinstance(v, float) else Fraction(v))


def _pattern_vars(e: Term) -> Optional[Tuple[str, ...]]:
    """Variable names of a Var/Pair-of-variables tree, left to right."""
    if isinstance(e, Var):
        return (e.name,)
    if isinstance(e, Pair):
        l, r = _pattern_vars(e.fst), _pattern_vars(e.snd)
        if l is None or r is None:
            return None
        return l + r
    return None


def _proj_map(pattern: Term, root: Term) -> Optional[Dict[str, Term]]:
    """Map each pattern variable to its projection path from root."""
    if isinstance(pattern, Var):
        return {pattern.name: root}
    if isinstance(pattern, Pair):
        l = _proj_map(pattern.fst, Fst(root))
        r = _proj_map(pattern.snd, Snd(root))
        if l is None or r is None:
            return None
        l.update(r)
        return l
    return None


def _taken_names(a: Assertion, extra: Set[str]) -> Set[str]:
    out = set(extra)

    def walk(x: Assertion):
        if isinstance(x, Star):
            walk(x.left)
            walk(x.right)
        elif isinstance(x, Dist):
            out.update(free_vars(x.expr))
            out.update(dist.free_param_vars(x.measure))
        elif isinstance(x, Cond):
            out.update(x.binder_names())
            out.update(free_vars(x.expr))
            out.update(dist.free_param_vars(x.measure))
            walk(x.body)
        elif isinstance(x, Score):
            out.update(free_vars(x.weight))
        elif isinstance(x, Expect):
            out.update(free_vars(x.expr))
            out.update(free_vars(x.value))
    walk(a)
    return out


def _fresh(base: str, taken: Set[str]) -> str:
    if base and base not in taken:
        return base
    i = 1
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def _is_unit_conjunct(c: Assertion) -> bool:
    if isinstance(c, TopOne):
        return True
    return isinstance(c, Score) and const_value(c.weight) == 1


def _cond_rvs(c: Cond) -> Set[str]:
    out = set(free_vars(c.expr))
    for b in conjuncts(c.body):
        if isinstance(b, Dist):
            pv = _pattern_vars(b.expr)
            if pv:
                out.update(pv)
    return out


def _joint_of_cond(c: Cond) -> Optional[Dist]:
    """Flatten a finite conditioning context into one joint table."""
    try:
        rows = dist.finite_support(c.measure)
    except EvalError:
        return None
    if rows is None:
        return None
    body = conjuncts(c.body)
    if len(body) != 1 or not isinstance(body[0], Dist):
        return None
    fact = body[0]
    if not isinstance(fact.expr, Var):
        return None
    names = c.binder_names()
    out_rows = []
    for v, w in rows:
        if len(names) == 1:
            env = {names[0]: v}
        else:
            if not isinstance(v, tuple) or len(v) != len(names):
                return None
            env = dict(zip(names, v))
        try:
            ground = dist.subst_params(fact.measure, env)
            sub = dist.finite_support(ground)
        except (EvalError, ValueError):
            return None
        if sub is None:
            return None
        for u, wu in sub:
            out_rows.append(((v, u), w * wu))
    return Dist(Pair(c.expr, fact.expr), dist.DiscreteTable(tuple(out_rows)))


class _Prover:
    def __init__(self, pre: Assertion):
        self.state: Assertion = pre
        self.steps: List[ProofStep] = []
        self.bound: Set[str] = set(state_rvs(pre))
        self.aliases: Dict[str, Term] = {}

    # -- bookkeeping ---------------------------------------------------

    def push(self, rule: str, after: Assertion, span: Optional[Span],
             side: Sequence[str] = ()):
        self.steps.append(ProofStep(span, rule, self.state, after,
                                    tuple(side)))
        self.state = after

    def parts(self) -> List[Assertion]:
        return list(conjuncts(self.state))

    def expand(self, t: Term) -> Term:
        for name, defn in self.aliases.items():
            if name in free_vars(t):
                t = subst_term(t, name, defn)
        return fold_constants(t)

    # -- program walk ----------------------------------------------------

    def exec(self, t: Term, result: Optional[str],
             later: frozenset = frozenset()):
        while True:
            if isinstance(t, terms.Seq):
                t = terms.Let("_", t.first, t.second, span=t.span)
                continue
            if isinstance(t, terms.Let):
                if t.name != "_" and (t.name in self.bound
                                      or t.name in self.aliases):
                    # shadowing (or a loop body unrolled twice): track
                    # the inner binding under a fresh name
                    nm = _fresh(t.name, self.bound | set(self.aliases)
                                | free_vars(t.body))
                    t = terms.Let(nm, t.bound,
                                  subst_term(t.body, t.name, Var(nm)),
                                  span=t.span)
                rest = frozenset(free_vars(t.body) | later)
                if isinstance(t.bound, (terms.Let, terms.Seq, terms.For)):
                    self.exec(t.bound, t.name, rest)
                else:
                    self.stmt(t.bound, t.name, rest)
                t = t.body
                continue
            if isinstance(t, terms.For):
                if not t.items:
                    t = terms.Ret(terms.UnitLit(span=t.span), span=t.span)
                    continue
                unrolled = [subst_term(t.body, t.var, item)
                            for item in t.items]
                body = unrolled[-1]
                for s in reversed(unrolled[:-1]):
                    body = terms.Let("_", s, body, span=t.span)
                self.push("H-BoundedFor", self.state, t.span,
                          (f"unrolled {len(t.items)} iterations",))
                t = body
                continue
            break
        self.stmt(t, result, later)

    def stmt(self, t: Term, name: Optional[str], later: frozenset):
        if isinstance(t, terms.Sample):
            self.do_sample(t, name)
        elif isinstance(t, terms.Score):
            self.do_score(t.weight, t.span, observe=False, later=later)
        elif isinstance(t, terms.Observe):
            w = If(t.cond, RealLit(Fraction(1)), RealLit(Fraction(0)),
                   span=t.span)
            self.do_score(w, t.span, observe=True, later=later)
        elif isinstance(t, terms.ObserveFrom):
            d = t.dist
            if not isinstance(d, Builtin) or d.fn not in bi.DENSITY_OF:
                raise Stuck("observation from an unknown family", t.span,
                            self.state)
            w = Builtin(bi.DENSITY_OF[d.fn], (t.value,) + d.args,
                        span=t.span)
            self.do_score(w, t.span, observe=True, later=later)
        elif isinstance(t, terms.Ret):
            self.do_return(t, name)
        elif isinstance(t, terms.If):
            raise Stuck("conditional at statement position has no rule; "
                        "move the branch inside a parameter or weight",
                        t.span, self.state)
        else:
            raise Stuck(f"{type(t).__name__} is not a statement", t.span,
                        self.state)

    # -- return ----------------------------------------------------------

    def do_return(self, t: terms.Ret, name: Optional[str]):
        if name is None or name == "_":
            return
        if name in self.bound or name in self.aliases:
            raise Stuck(f"rebinding of {name!r}", t.span, self.state)
        defn = self.expand(t.value)
        self.aliases[name] = defn
        self.push("H-Return", self.state, t.span,
                  (f"{name} := {pretty_expr(defn)}",))

    # -- sample ----------------------------------------------------------

    def do_sample(self, t: terms.Sample, name: Optional[str]):
        if name is None or name == "_":
            name = _fresh("Drop", self.bound | set(self.aliases))
        if name in self.bound or name in self.aliases:
            raise Stuck(f"rebinding of {name!r}", t.span, self.state)
        dterm = self.expand(t.dist)
        try:
            d = dist.from_constructor_term(dterm)
        except (dist.NoRule, EvalError, ValueError, TypeError):
            raise Stuck("sample needs an applied distribution constructor",
                        t.span, self.state) from None
        deps = dist.free_param_vars(d) & self.bound
        if not deps:
            parts = self.parts()
            kept = [c for c in parts if not _is_unit_conjunct(c)]
            side = [f"{name} fresh"]
            if len(kept) < len(parts):
                side.append("unit ⟨1⟩ consumed")
            self.push("H-Sample", star(kept + [Dist(Var(name), d)]),
                      t.span, side)
        else:
            self.do_cond_sample(d, deps, name, t.span)
        self.bound.add(name)

    def do_cond_sample(self, d: dist.DistExpr, deps: Set[str], name: str,
                       span: Optional[Span]):
        idx = self.ensure_covering_dist(deps, span)
        parts = self.parts()
        fact = parts[idx]
        assert isinstance(fact, Dist)
        if not measure_is_probability(fact.measure):
            raise Stuck("conditioning on an unnormalized fact", span,
                        self.state)
        binder, mapping = self.binder_for(fact.expr)
        body_d = d
        for rv, rep in mapping.items():
            body_d = dist.subst_param_terms(body_d, rv, rep)
        ctx = Cond(binder, fact.expr, fact.measure, Dist(Var(name), body_d))
        bn = binder if isinstance(binder, str) \
            else "(" + ", ".join(binder) + ")"
        self.push("H-CondSample",
                  star(parts[:idx] + [ctx] + parts[idx + 1:]), span,
                  (f"conditioning on {pretty_expr(fact.expr)} as {bn}",))

    def binder_for(self, pattern: Term):
        """Conditioning binder names for a scrutinee pattern.

        A single variable gets its lowercase twin, a flat pair a pair of
        twins, anything deeper a single binder with projection paths
        substituted for the components.
        """
        taken = _taken_names(self.state, self.bound | set(self.aliases))
        if isinstance(pattern, Var):
            b = _fresh(pattern.name.lower(), taken)
            return b, {pattern.name: Var(b)}
        if isinstance(pattern, Pair) and isinstance(pattern.fst, Var) \
                and isinstance(pattern.snd, Var):
            b1 = _fresh(pattern.fst.name.lower(), taken)
            b2 = _fresh(pattern.snd.name.lower(), taken | {b1})
            return (b1, b2), {pattern.fst.name: Var(b1),
                              pattern.snd.name: Var(b2)}
        b = _fresh("x", taken)
        mapping = _proj_map(pattern, Var(b))
        if mapping is None:
            raise Stuck("scrutinee is not a variable pattern", None,
                        self.state)
        return b, mapping

    # -- scoring ----------------------------------------------------------

    def do_score(self, weight: Term, span: Optional[Span], observe: bool,
                 later: frozenset):
        w = self.expand(weight)
        deps = set(free_vars(w)) & self.bound
        if not deps:
            v = const_value(w)
            if v is None or isinstance(v, bool) \
                    or not isinstance(v, (int, Fraction, float)):
                raise Stuck("weight is not a closed number", span,
                            self.state)
            if v < 0:
                raise Stuck("negative weight", span, self.state)
            self.push("H-Observe" if observe else "H-Score",
                      star(self.parts() + [Score(_lit(v))]), span,
                      (f"constant weight {_num_str(v)}",))
            self.eager(span)
            return

        hit = self.find_in_cond_body(deps)
        if hit is not None and not (deps & set(later)):
            ci, bj = hit
            self.cond_score(w, ci, bj, span,
                            "H-CondObserve" if observe else "H-CondScore")
        else:
            idx = self.ensure_covering_dist(deps, span)
            self.direct_score(w, idx, span,
                              "H-Observe" if observe else "H-Score")
        self.eager(span)

    def find_in_cond_body(self, deps: Set[str]):
        """Locate deps as the variable of a single Dist fact inside one
        conditioning body; (conjunct index, body index) or None."""
        for ci, c in enumerate(self.parts()):
            if not isinstance(c, Cond):
                continue
            for bj, b in enumerate(conjuncts(c.body)):
                if isinstance(b, Dist) and isinstance(b.expr, Var) \
                        and deps == {b.expr.name}:
                    return ci, bj
        return None

    def cond_score(self, w: Term, ci: int, bj: int, span, rule: str):
        parts = self.parts()
        c = parts[ci]
        assert isinstance(c, Cond)
        body = list(conjuncts(c.body))
        fact = body[bj]
        assert isinstance(fact, Dist) and isinstance(fact.expr, Var)
        rv = fact.expr.name
        taken = _taken_names(self.state, self.bound | set(self.aliases))
        y = _fresh(rv.lower(), taken)
        f = fold_constants(subst_term(w, rv, Var(y)))
        body[bj] = Dist(fact.expr, dist.Weighted(f, fact.measure, y))
        after_c = Cond(c.binder, c.expr, c.measure, star(body))
        self.push(rule, star(parts[:ci] + [after_c] + parts[ci + 1:]), span,
                  (f"reweighting {rv} inside the conditioning body",))

    def direct_score(self, w: Term, idx: int, span, rule: str):
        parts = self.parts()
        fact = parts[idx]
        assert isinstance(fact, Dist)
        binder, mapping = self.binder_for(fact.expr)
        f = w
        for rv, rep in mapping.items():
            f = subst_term(f, rv, rep)
        new = Dist(fact.expr,
                   dist.Weighted(fold_constants(f), fact.measure, binder))
        self.push(rule, star(parts[:idx] + [new] + parts[idx + 1:]), span,
                  (f"reweighting {pretty_expr(fact.expr)}",))

    # -- state massage: one Dist fact must cover a dependency set ---------

    def ensure_covering_dist(self, deps: Set[str], span) -> int:
        for _ in range(BUDGET):
            parts = self.parts()
            for i, c in enumerate(parts):
                if isinstance(c, Dist):
                    pv = _pattern_vars(c.expr)
                    if pv is not None and deps <= set(pv):
                        return i
            # a dependency hidden inside a conditioning context: flatten
            # it into a finite joint table when possible
            flattened = False
            for i, c in enumerate(parts):
                if isinstance(c, Cond) and (deps & _cond_rvs(c)):
                    joint = _joint_of_cond(c)
                    if joint is None:
                        raise Stuck(
                            "dependency is under a conditioning context "
                            "with no finite joint form", span, self.state)
                    self.push("E-Joint",
                              star(parts[:i] + [joint] + parts[i + 1:]),
                              span, ("finite conditioning flattened to a "
                                     "joint table",))
                    flattened = True
                    break
            if flattened:
                continue
            # dependencies split across independent facts: merge two
            holders: List[int] = []
            for nm in sorted(deps):
                for i, c in enumerate(parts):
                    if isinstance(c, Dist):
                        pv = _pattern_vars(c.expr)
                        if pv and nm in pv and i not in holders:
                            holders.append(i)
                            break
            if len(holders) >= 2:
                i, j = holders[0], holders[1]
                a, b = parts[i], parts[j]
                merged = Dist(Pair(a.expr, b.expr),
                              dist.Product(a.measure, b.measure))
                rest = [p for k, p in enumerate(parts) if k not in (i, j)]
                rest.insert(min(i, j), merged)
                self.push("E-PairMerge", star(rest), span,
                          (f"{pretty_expr(a.expr)} and "
                           f"{pretty_expr(b.expr)} are independent",))
                continue
            missing = sorted(deps - self.known_rvs()) or sorted(deps)
            raise Stuck("no distribution fact covers " + ", ".join(missing),
                        span, self.state)
        raise Stuck("rewrite budget exhausted while arranging facts", span,
                    self.state)

    def known_rvs(self) -> Set[str]:
        return state_rvs(self.state)

    # -- eager simplification ---------------------------------------------

    def eager(self, span):
        for _ in range(BUDGET):
            if not self.eager_once(span):
                return
        raise Stuck("simplification did not terminate", span, self.state)

    def eager_once(self, span) -> bool:
        parts = self.parts()

        # collapse a conditioned observation to its total mass
        for i, c in enumerate(parts):
            if not isinstance(c, Cond):
                continue
            body = list(conjuncts(c.body))
            for j, b in enumerate(body):
                if isinstance(b, Dist) and isinstance(b.measure,
                                                      dist.Weighted):
                    mass = dist.symbolic_total_mass(b.measure)
                    if mass is None:
                        continue
                    body[j] = Score(mass)
                    after_c = Cond(c.binder, c.expr, c.measure, star(body))
                    self.push("E-Likelihood",
                              star(parts[:i] + [after_c] + parts[i + 1:]),
                              span,
                              (f"total mass over {pretty_expr(b.expr)} is "
                               f"{pretty_expr(mass)}; posterior weakened",))
                    return True

        # weaken affine facts sitting next to a likelihood in a body
        for i, c in enumerate(parts):
            if not isinstance(c, Cond):
                continue
            body = list(conjuncts(c.body))
            scores = [b for b in body if isinstance(b, Score)]
            others = [b for b in body if not isinstance(b, Score)]
            if scores and others and all(is_affine(o) for o in others):
                after_c = Cond(c.binder, c.expr, c.measure, star(scores))
                self.push("E-∗-Weak",
                          star(parts[:i] + [after_c] + parts[i + 1:]),
                          span, ("affine facts inside the conditioning "
                                 "body dropped",))
                return True

        # Bayes: a conditioning context whose body is a bare likelihood
        for i, c in enumerate(parts):
            if not isinstance(c, Cond):
                continue
            body = conjuncts(c.body)
            if len(body) == 1 and isinstance(body[0], Score):
                w = dist.Weighted(body[0].weight, c.measure, c.binder)
                self.push("E-Bayes",
                          star(parts[:i] + [Dist(c.expr, w)]
                               + parts[i + 1:]), span, ())
                return True

        # normalize reweighted measures into a posterior and a mass
        for i, c in enumerate(parts):
            if not isinstance(c, Dist):
                continue
            m = dist.simplify(c.measure)
            unnorm_table = isinstance(m, dist.DiscreteTable) \
                and sum(w for _, w in m.rows) != 1
            if not isinstance(m, (dist.Weighted, dist.Scaled)) \
                    and not unnorm_table:
                if m != c.measure:
                    self.push("E-MeasEq",
                              star(parts[:i] + [Dist(c.expr, m)]
                                   + parts[i + 1:]),
                              span, ("canonical form",))
                    return True
                continue
            if isinstance(m, dist.Scaled) and measure_is_probability(m):
                continue
            try:
                sm, mass = dist.normalize(m)
            except dist.NotNormalizable as e:
                if e.equivalent is not None:
                    self.push("E-MeasEq",
                              star(parts[:i] + [Dist(c.expr, e.equivalent)]
                                   + parts[i + 1:]), span,
                              ("infinite total mass; kept the sigma-finite"
                               " equivalent, no normalizing constant",))
                    return True
                if e.mass is dist.UNKNOWN:
                    continue
                raise Stuck("observation has zero probability", span,
                            self.state) from None
            new: List[Assertion] = [Dist(c.expr, sm.body)]
            side = [f"mass {_num_str(mass)}"]
            if isinstance(mass, float) or mass != 1:
                new.append(Score(_lit(mass)))
            after = star(parts[:i] + new + parts[i + 1:])
            if after == self.state:
                continue
            self.push("E-MeasEq", after, span, side)
            return True

        # multiply constant masses together
        consts = [(i, const_value(c.weight)) for i, c in enumerate(parts)
                  if isinstance(c, Score)]
        consts = [(i, v) for i, v in consts
                  if v is not None and not isinstance(v, bool)]
        if len(consts) >= 2:
            (i, vi), (j, vj) = consts[0], consts[1]
            prod = vi * vj
            rest = [p for k, p in enumerate(parts) if k not in (i, j)]
            rest.insert(min(i, j), Score(_lit(prod)))
            self.push("E-Score-Mult", star(rest), span,
                      (f"{_num_str(vi)} · {_num_str(vj)} = "
                       f"{_num_str(prod)}",))
            return True

        # drop the unit next to other facts
        if len(parts) > 1:
            for i, c in enumerate(parts):
                if _is_unit_conjunct(c):
                    self.push("E-∗-Ident", star(parts[:i] + parts[i + 1:]),
                              span, ())
                    return True

        # a NormConst absorbs positive constant masses and spare copies
        # of itself; exact masses are kept otherwise, since ⟨k⟩ is
        # strictly stronger than ∃k>0.⟨k⟩
        ncs = [i for i, c in enumerate(parts) if isinstance(c, NormConst)]
        if ncs:
            for i, c in enumerate(parts):
                if isinstance(c, Score) and _positive_const(c):
                    rest = [p for k, p in enumerate(parts) if k != i]
                    self.push("E-NormConst", star(rest), span,
                              ("positive mass absorbed",))
                    return True
            if len(ncs) >= 2:
                rest = [p for k, p in enumerate(parts) if k != ncs[1]]
                self.push("E-NormConst", star(rest), span, ("merged",))
                return True

        return False

    def flatten_once(self, span) -> bool:
        """Turn one finite conditioning context into its joint table.

        Not part of the eager pass: the conditioned form is the more
        informative spelling, so it is only given up when an entailment
        needs the flat joint.
        """
        parts = self.parts()
        for i, c in enumerate(parts):
            if not isinstance(c, Cond):
                continue
            joint = _joint_of_cond(c)
            if joint is None:
                continue
            self.push("E-Joint", star(parts[:i] + [joint] + parts[i + 1:]),
                      span, ("finite conditioning flattened to a joint "
                             "table",))
            return True
        return False


def state_rvs(a: Assertion) -> Set[str]:
    """Names carried by distribution facts and conditioning contexts."""
    out: Set[str] = set()
    for c in conjuncts(a):
        if isinstance(c, Dist):
            pv = _pattern_vars(c.expr)
            if pv:
                out.update(pv)
        elif isinstance(c, Cond):
            out.update(_cond_rvs(c))
    return out


# ---------------------------------------------------------------------------
# public driver


def verify(program: Term, pre: Optional[Assertion] = None,
           post: Optional[Assertion] = None,
           binder: str = "ret") -> ProofTrace:
    """Fold the program over pre; prove post from the final state.

    Without a post the trace ends at the strongest derived assertion.
    Raises Stuck when no rule applies, Fail when the final entailment
    cannot be closed.
    """
    pv = _Prover(pre if pre is not None else TopOne())
    pv.exec(program, binder)
    pv.eager(None)
    if post is not None:
        goal = post
        for name, defn in pv.aliases.items():
            goal = subst(goal, name, defn)
        for s in _entail_steps(pv.state, goal):
            pv.push(s.rule, s.after, s.span, s.side)
    if not pv.steps:
        pv.push("H-Frame", pv.state, None, ("nothing to do",))
    return ProofTrace(tuple(pv.steps))


def strongest_post(program: Term, pre: Optional[Assertion] = None,
                   binder: str = "ret") -> Assertion:
    return verify(program, pre, None, binder).final


def analyze(program: Term, pre: Optional[Assertion] = None,
            binder: str = "ret"
            ) -> Tuple[ProofTrace, Assertion, Dict[str, Term]]:
    """Forward pass only: trace, final state, and the alias map that
    resolves the return binder to an expression over the state's names."""
    pv = _Prover(pre if pre is not None else TopOne())
    pv.exec(program, binder)
    pv.eager(None)
    if not pv.steps:
        pv.push("H-Frame", pv.state, None, ("nothing to do",))
    return ProofTrace(tuple(pv.steps)), pv.state, dict(pv.aliases)


def entail(lhs: Assertion, rhs: Assertion) -> ProofTrace:
    """Prove rhs from lhs; the trace rewrites lhs into exactly rhs."""
    steps = _entail_steps(lhs, rhs)
    if not steps:
        steps = [ProofStep(None, "E-∗-Comm", lhs, rhs,
                           ("identical",) if lhs == rhs else ())]
    return ProofTrace(tuple(steps))


def _entail_steps(lhs: Assertion, rhs: Assertion) -> List[ProofStep]:
    """Match goals against the left side, normalizing it lazily: after a
    failed match attempt, run one eager rewrite and retry."""
    if isinstance(rhs, Top):
        return [ProofStep(None, "E-True", lhs, rhs, ())]
    if any(isinstance(c, Bot) for c in conjuncts(lhs)):
        return [ProofStep(None, "E-False", lhs, rhs, ())]
    if isinstance(rhs, Or):
        for pick, tag in ((rhs.left, "left"), (rhs.right, "right")):
            try:
                steps = _entail_steps(lhs, pick)
            except Fail:
                continue
            last = steps[-1].after if steps else lhs
            steps.append(ProofStep(None, "E-∨-Intro", last, rhs, (tag,)))
            return steps
        raise Fail("neither side of the disjunction is derivable", lhs, rhs)
    if isinstance(rhs, And):
        _entail_steps(lhs, rhs.left)
        _entail_steps(lhs, rhs.right)
        return [ProofStep(None, "E-∧-Intro", lhs, rhs,
                          ("both conjuncts hold of the same state",))]

    pv = _Prover(lhs)
    while True:
        plan = _plan(pv.parts(), rhs)
        if plan is not None:
            _apply_plan(pv, plan, rhs)
            return pv.steps
        if len(pv.steps) >= BUDGET:
            raise Fail("rewrite budget exhausted", pv.state, rhs)
        try:
            progressed = pv.eager_once(None) or pv.flatten_once(None)
        except Stuck as e:
            raise Fail(e.reason, pv.state, rhs) from None
        if not progressed:
            missing = _first_unmatched(pv.parts(), rhs)
            raise Fail("no rule derives " + render_assertion(missing)
                       if missing is not None else "entailment failed",
                       pv.state, rhs)


class _PlanItem:
    """One goal discharge: consume lhs conjuncts, produce the goal atom.

    rule None means the goal is literally one of the conjuncts and no
    rewrite is recorded.
    """

    __slots__ = ("rule", "consume", "produce", "side")

    def __init__(self, rule, consume, produce, side=()):
        self.rule = rule
        self.consume = tuple(consume)
        self.produce = produce
        self.side = tuple(side)


def _plan(avail: List[Assertion],
          rhs: Assertion) -> Optional[List[_PlanItem]]:
    goals = list(conjuncts(rhs))
    taken: Set[int] = set()
    items: List[_PlanItem] = []
    allow_rest = any(isinstance(g, Top) for g in goals)
    deferred: List[Assertion] = []
    for g in goals:
        if isinstance(g, (Top, TopOne, NormConst)) \
                or _is_normconst_shape(g) or _is_unit_conjunct(g):
            deferred.append(g)
            continue
        it = _match_goal(avail, taken, g)
        if it is None:
            return None
        items.append(it)
        taken.update(it.consume)
    used_mass = False
    for g in deferred:
        if isinstance(g, Top):
            continue
        if isinstance(g, TopOne) or _is_unit_conjunct(g):
            idx = _find(avail, taken, _is_unit_conjunct)
            if idx is not None:
                items.append(_PlanItem(None if avail[idx] == g else
                                       "E-∗-Ident", (idx,), g))
                taken.add(idx)
            else:
                items.append(_PlanItem("E-∗-Ident", (), g,
                                       ("unit introduced",)))
            continue
        # NormConst (either spelling): consume one mass witness
        idx = _find(avail, taken, lambda c: isinstance(c, NormConst))
        if idx is None:
            idx = _find(avail, taken, lambda c: isinstance(c, Score)
                        and _positive_const(c))
        if idx is None:
            idx = _find(avail, taken, _is_normconst_shape)
        if idx is not None:
            items.append(_PlanItem(
                None if avail[idx] == g else "E-NormConst", (idx,), g,
                ("mass witness",)))
            taken.add(idx)
            used_mass = True
            continue
        if used_mass:
            # a positive mass splits into as many positive factors as
            # needed (k = k · 1 · 1 ...)
            items.append(_PlanItem("E-NormConst", (), g, ("split mass",)))
            continue
        return None

    leftovers = [i for i in range(len(avail)) if i not in taken]
    if leftovers:
        if allow_rest:
            items.append(_PlanItem("E-True", leftovers, None,
                                   ("absorbed into ⊤",)))
        else:
            bad = [i for i in leftovers if not is_affine(avail[i])]
            if bad:
                return None
            items.append(_PlanItem("E-∗-Weak", leftovers, None,
                                   ("affine leftovers dropped",)))
    return items


def _positive_const(c: Score) -> bool:
    v = const_value(c.weight)
    return v is not None and not isinstance(v, bool) and v > 0


def _is_normconst_shape(c: Assertion) -> bool:
    return (isinstance(c, ExistsDet) and isinstance(c.body, Score)
            and c.body.weight == Var(c.name))


def _find(avail, taken, pred):
    for i, c in enumerate(avail):
        if i not in taken and pred(c):
            return i
    return None


def _match_goal(avail: List[Assertion], taken: Set[int],
                g: Assertion) -> Optional[_PlanItem]:
    idx = _find(avail, taken, lambda c: c == g)
    if idx is not None:
        return _PlanItem(None, (idx,), g)

    if isinstance(g, And):
        # both sides must hold of one sub-state; affine facts of mass 1
        # support any conclusion they support separately
        lc = _match_split(avail, taken, g.left)
        rc = _match_split(avail, taken, g.right) if lc is not None else None
        if lc is None or rc is None:
            return None
        consume = tuple(sorted(set(lc) | set(rc)))
        if not all(is_affine(avail[i]) for i in consume):
            return None
        return _PlanItem("E-∧-Intro", consume, g,
                         ("one sub-state supports both sides",))

    if isinstance(g, Or):
        for side, tag in ((g.left, "left"), (g.right, "right")):
            c = _match_split(avail, taken, side)
            if c is not None:
                return _PlanItem("E-∨-Intro", tuple(sorted(c)), g, (tag,))
        return None

    if isinstance(g, Dist):
        for i, c in enumerate(avail):
            if i in taken or not isinstance(c, Dist):
                continue
            if c.expr == g.expr and measure_equal(c.measure, g.measure):
                return _PlanItem("E-MeasEq", (i,), g, ("equal measures",))
        for i, c in enumerate(avail):
            if i in taken or not isinstance(c, Dist):
                continue
            pv = _pattern_vars(c.expr)
            if pv is None or not set(free_vars(g.expr)) <= set(pv):
                continue
            if c.expr == g.expr:
                continue
            pushed = _marginal_of(c, g.expr)
            if pushed is not None and measure_equal(pushed, g.measure):
                return _PlanItem("E-Marginal", (i,), g,
                                 (f"projected from {pretty_expr(c.expr)}",))
        if isinstance(g.expr, Pair):
            li = _find(avail, taken, lambda c: isinstance(c, Dist)
                       and c.expr == g.expr.fst)
            ri = _find(avail, taken, lambda c: isinstance(c, Dist)
                       and c.expr == g.expr.snd)
            if li is not None and ri is not None and li != ri:
                merged = dist.Product(avail[li].measure, avail[ri].measure)
                if measure_equal(merged, g.measure):
                    return _PlanItem("E-PairMerge", (li, ri), g, ())
        return None

    if isinstance(g, Expect):
        want = const_value(g.value)
        if want is None:
            return None
        for consume, pat, meas in _covering_views(avail, taken,
                                                  set(free_vars(g.expr))):
            got = exact_expectation(pat, meas, g.expr)
            if got is not None and nums_close(got, want):
                side = [f"E[{pretty_expr(g.expr)}] = {_num_str(got)}"]
                if len(consume) == 2:
                    side.insert(0, "independent facts combined")
                return _PlanItem("E-Expect", consume, g, side)
        return None

    if isinstance(g, Cov):
        bound = const_value(g.bound)
        if bound is None:
            return None
        lv, rv = set(free_vars(g.left)), set(free_vars(g.right))
        # variables held by two different facts are independent, so the
        # covariance is zero whatever the moments are
        if not lv & rv:
            li = _find(avail, taken, lambda c: isinstance(c, Dist)
                       and _covers(c, lv)
                       and measure_is_probability(c.measure))
            ri = _find(avail, taken | ({li} if li is not None else set()),
                       lambda c: isinstance(c, Dist) and _covers(c, rv)
                       and measure_is_probability(c.measure))
            if li is not None and ri is not None and _cmp(0, g.op, bound):
                return _PlanItem("E-Cov", (li, ri), g,
                                 ("independent facts, covariance 0",))
        for consume, pat, meas in _covering_views(avail, taken, lv | rv):
            exy = exact_expectation(pat, meas,
                                    Builtin("*", (g.left, g.right)))
            ex = exact_expectation(pat, meas, g.left)
            ey = exact_expectation(pat, meas, g.right)
            if exy is None or ex is None or ey is None:
                continue
            cov = exy - ex * ey
            if _cmp(cov, g.op, bound):
                return _PlanItem("E-Cov", consume, g,
                                 (f"Cov = {_num_str(cov)}",))
        return None

    if isinstance(g, Own):
        for i, c in enumerate(avail):
            if i in taken:
                continue
            if isinstance(c, Own) and c.expr == g.expr:
                return _PlanItem(None, (i,), g)
            if isinstance(c, Dist):
                pv = _pattern_vars(c.expr)
                if pv is not None and set(free_vars(g.expr)) <= set(pv) \
                        and measure_is_probability(c.measure):
                    return _PlanItem("E-∗-Weak", (i,), g,
                                     ("measurability kept, law dropped",))
        return None

    if isinstance(g, Score):
        want = const_value(g.weight)
        for i, c in enumerate(avail):
            if i in taken or not isinstance(c, Score):
                continue
            have = const_value(c.weight)
            if c.weight == g.weight or (want is not None
                                        and have is not None
                                        and nums_close(have, want)):
                return _PlanItem("E-MeasEq", (i,), g, ("equal mass",))
        return None

    if isinstance(g, Cond):
        for i, c in enumerate(avail):
            if i in taken or not isinstance(c, Cond):
                continue
            if _cond_alpha_equal(c, g):
                return _PlanItem("E-∗-Cong", (i,), g, ("binder renamed",))
        return None

    return None


def _covers(c: Assertion, names: Set[str]) -> bool:
    if not isinstance(c, Dist):
        return False
    pv = _pattern_vars(c.expr)
    return pv is not None and names <= set(pv)


def _covering_views(avail: List[Assertion], taken: Set[int],
                    names: Set[str]):
    """Dist facts (alone or two merged as an independent product) whose
    pattern covers the given variables; yields (consume, pattern,
    measure)."""
    for i, c in enumerate(avail):
        if i in taken or not _covers(c, names):
            continue
        if measure_is_probability(c.measure):
            yield (i,), c.expr, c.measure
    for i, a in enumerate(avail):
        if i in taken or not isinstance(a, Dist):
            continue
        for j, b in enumerate(avail):
            if j <= i or j in taken or not isinstance(b, Dist):
                continue
            pa, pb = _pattern_vars(a.expr), _pattern_vars(b.expr)
            if pa is None or pb is None or set(pa) & set(pb):
                continue
            if not names <= set(pa) | set(pb):
                continue
            if measure_is_probability(a.measure) \
                    and measure_is_probability(b.measure):
                yield (i, j), Pair(a.expr, b.expr), \
                    dist.Product(a.measure, b.measure)


def _match_split(avail: List[Assertion], taken: Set[int],
                 goal: Assertion) -> Optional[Set[int]]:
    """Indices consumed when every conjunct of goal matches, else None."""
    t2 = set(taken)
    out: Set[int] = set()
    for g in conjuncts(goal):
        if isinstance(g, (Top, TopOne)) or _is_unit_conjunct(g):
            continue
        it = _match_goal(avail, t2, g)
        if it is None:
            return None
        out.update(it.consume)
        t2.update(it.consume)
    return out


def _cmp(v, op: str, bound) -> bool:
    if op == "=":
        return nums_close(v, bound)
    if op == "<":
        return v < bound
    if op == "<=":
        return v <= bound or nums_close(v, bound)
    if op == ">":
        return v > bound
    return v >= bound or nums_close(v, bound)


def _marginal_of(c: Dist, expr: Term) -> Optional[dist.DistExpr]:
    rows = ground_rows(c.measure)
    if rows is None:
        return None
    out = []
    for v, w in rows:
        env = pattern_env(c.expr, v)
        if env is None:
            return None
        try:
            val = const_eval(expr, env)
        except (EvalError, ZeroDivisionError, ValueError):
            return None
        if isinstance(val, bool):
            val = Fraction(int(val))
        out.append((val, w))
    return dist.simplify(dist.DiscreteTable(tuple(out)))


def _cond_alpha_equal(c: Cond, g: Cond) -> bool:
    if c.expr != g.expr or len(c.binder_names()) != len(g.binder_names()):
        return False
    if not measure_equal(c.measure, g.measure):
        return False
    body = c.body
    for old, new in zip(c.binder_names(), g.binder_names()):
        if old != new:
            body = subst_det(body, old, Var(new))
    return canonical(body) == canonical(g.body)


def _apply_plan(pv: _Prover, plan: List[_PlanItem], rhs: Assertion):
    base = pv.parts()
    slots: List[Optional[Assertion]] = list(base)
    produced: List[Assertion] = []

    def current() -> Assertion:
        return star([s for s in slots if s is not None] + produced)

    for it in plan:
        if it.rule is None:
            # literal match; the conjunct stays where it is
            continue
        for i in it.consume:
            slots[i] = None
        if it.produce is not None:
            produced.append(it.produce)
        after = current()
        if after != pv.state:
            pv.push(it.rule, after, None, it.side)
    if pv.state != rhs:
        if canonical(_abbrev(pv.state)) == canonical(_abbrev(rhs)):
            rule = "E-∗-Comm" if canonical(pv.state) == canonical(rhs) \
                else "E-∗-Cong"
            pv.push(rule, rhs, None, ())
        else:
            raise Fail("plan did not reach the goal form", pv.state, rhs)


def _abbrev(a: Assertion) -> Assertion:
    """Fold definitional spellings: ∃k>0.⟨k⟩ to NormConst, ⟨1⟩ to ⊤₁."""
    if isinstance(a, Star):
        return Star(_abbrev(a.left), _abbrev(a.right))
    if _is_normconst_shape(a):
        return NormConst()
    if isinstance(a, Score) and const_value(a.weight) == 1:
        return TopOne()
    if isinstance(a, Cond):
        return Cond(a.binder, a.expr, a.measure, _abbrev(a.body))
    return a


def _first_unmatched(avail: List[Assertion],
                     rhs: Assertion) -> Optional[Assertion]:
    taken: Set[int] = set()
    for g in conjuncts(rhs):
        if isinstance(g, (Top, TopOne, NormConst)) \
                or _is_normconst_shape(g) or _is_unit_conjunct(g):
            continue
        it = _match_goal(avail, taken, g)
        if it is None:
            return g
        taken.update(it.consume)
    return rhs


# ---------------------------------------------------------------------------
# queries against a derived state, for the oracle cross-check


def query_expectation(a: Assertion, expr: Term):
    """Exact or closed-form E[expr] under the Dist facts of a, or None."""
    want = set(free_vars(expr))
    for c in conjuncts(a):
        if not isinstance(c, Dist):
            continue
        pv = _pattern_vars(c.expr)
        if pv is None or not want <= set(pv):
            continue
        got = exact_expectation(c.expr, c.measure, expr)
        if got is not None:
            return got
    return None
