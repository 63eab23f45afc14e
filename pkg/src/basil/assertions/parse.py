"""Parser for the assertion language.

Shares the program lexer, so both the unicode notation of the worked
derivations (∼ ∗ ⟨⟩ ⊤₁ ← ∀) and plain ASCII spellings (~ * <> top1 <-
forall) tokenize identically. Deterministic sub-expressions reuse the
term parser with a stop set, so `E[X] = 1/2 * NormConst` splits at the
separating conjunction rather than reading `1/2 * NormConst` as a
product.

Measures are parsed by a dedicated little grammar (constructor calls,
tensor products, Leb, Weighted/Scaled/DiscreteTable) instead of the
expression grammar; that is what keeps `X ~ Beta(2, 2) * NormConst`
unambiguous."""

from __future__ import annotations

from fractions import Fraction
from typing import Tuple, Union

from basil import dist
from basil.assertions import nodes as A
from basil.syntax import builtins as bi
from basil.syntax.check import SET_TAGS, BOOL_SET, NAT_SET, R_SET
from basil.syntax.evaluate import EvalError, eval_det
from basil.syntax.parser import (
    ParseError, TermParser, Token, TokenStream, tokenize,
)
from basil.syntax.terms import BOOL, NAT, Pair, REAL, Term, UNIT, Var

# Words that end an embedded deterministic expression when they appear
# after a binary operator (so ⟨k⟩ ∗ NormConst style conjunctions parse).
ASSERTION_STOPS = frozenset({
    "NormConst", "own", "top", "top1", "bot", "forall", "exists", "Cov",
})

_RV_SPACES = {"real": REAL, "bool": BOOL, "nat": NAT, "unit": UNIT}


class AssertionParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts
        self.ep = TermParser(ts, stop_idents=ASSERTION_STOPS)

    # ---- connective layers, loosest first ----------------------------

    def assertion(self) -> A.Assertion:
        return self.wand()

    def wand(self) -> A.Assertion:
        left = self.implies()
        if self.ts.at("-*"):
            self.ts.next()
            return A.Wand(left, self.wand())
        return left

    def implies(self) -> A.Assertion:
        left = self.or_()
        if self.ts.at("=>"):
            self.ts.next()
            return A.Implies(left, self.implies())
        return left

    def or_(self) -> A.Assertion:
        left = self.and_()
        while self.ts.at("\\/"):
            self.ts.next()
            left = A.Or(left, self.and_())
        return left

    def and_(self) -> A.Assertion:
        left = self.star()
        while self.ts.at("/\\"):
            self.ts.next()
            left = A.And(left, self.star())
        return left

    def star(self) -> A.Assertion:
        left = self.atom()
        while self.ts.at("*"):
            self.ts.next()
            left = A.Star(left, self.atom())
        return left

    # ---- atoms --------------------------------------------------------

    def atom(self) -> A.Assertion:
        ts = self.ts
        t = ts.peek()
        if ts.at("top") or ts.at_kw("top"):
            ts.next()
            if ts.at("sub1"):
                ts.next()
                return A.TopOne()
            return A.Top()
        if ts.at_kw("top1"):
            ts.next()
            return A.TopOne()
        if ts.at("bot") or ts.at_kw("bot"):
            ts.next()
            return A.Bot()
        if ts.at_kw("NormConst"):
            ts.next()
            return A.NormConst()
        if ts.at("langle") or ts.at("<"):
            close = "rangle" if ts.at("langle") else ">"
            ts.next()
            was = self.ep.suppress_gt
            self.ep.suppress_gt = close == ">"
            try:
                weight = self.ep.add_expr()
            finally:
                self.ep.suppress_gt = was
            ts.expect(close, "closing likelihood bracket")
            return A.Score(weight)
        if ts.at_kw("own"):
            ts.next()
            ts.expect("(")
            e = self.ep.expr()
            ts.expect(")")
            return A.Own(e)
        if ts.at_kw("E") and ts.at("[", k=1):
            ts.next()
            ts.next()
            e = self.ep.expr()
            ts.expect("]")
            ts.expect("=")
            return A.Expect(e, self.ep.add_expr())
        if ts.at_kw("Cov") and ts.at("[", k=1):
            ts.next()
            ts.next()
            a = self.ep.expr()
            ts.expect(",")
            b = self.ep.expr()
            ts.expect("]")
            for op in ("<=", ">=", "<", ">", "="):
                if ts.at(op):
                    ts.next()
                    return A.Cov(a, b, op, self.ep.add_expr())
            ts.fail("expected a comparison after Cov[...]")
        if ts.at("forall") or ts.at_kw("forall"):
            ts.next()
            return self._quantifier(universal=True)
        if ts.at("exists") or ts.at_kw("exists"):
            ts.next()
            return self._quantifier(universal=False)
        binder = self._cond_binder_lookahead()
        if binder is not None:
            return self._cond(binder)
        # a deterministic expression followed by ~ is a distribution
        # fact; otherwise fall back to a parenthesized assertion
        save = ts.pos
        try:
            e = self.ep.expr()
            if ts.at("~"):
                ts.next()
                return A.Dist(e, self.measure())
            raise ParseError("expected ~", t.line, t.col)
        except ParseError:
            ts.pos = save
        if ts.at("("):
            ts.next()
            inner = self.assertion()
            ts.expect(")")
            return inner
        ts.fail(f"expected an assertion, found {t.text or 'end of input'!r}")

    def _quantifier(self, universal: bool) -> A.Assertion:
        ts = self.ts
        name = ts.expect("ident", "a bound name").text
        ts.expect(":")
        tag_tok = ts.expect("ident", "a set or space name")
        ts.expect(".")
        body = self.assertion()
        if name[0].isupper():
            space = _RV_SPACES.get(tag_tok.text)
            if space is None:
                raise ParseError(f"unknown space {tag_tok.text!r}",
                                 tag_tok.line, tag_tok.col)
            node = A.ForallRV if universal else A.ExistsRV
            return node(name, space, body)
        tag = SET_TAGS.get(tag_tok.text)
        if tag is None:
            raise ParseError(f"unknown set tag {tag_tok.text!r}",
                             tag_tok.line, tag_tok.col)
        node = A.ForallDet if universal else A.ExistsDet
        return node(name, tag, body)

    def _cond_binder_lookahead(self):
        """Detect `x <-` or `(a, b) <-` without consuming on failure."""
        ts = self.ts
        if ts.at("ident") and ts.at("<-", k=1):
            name = ts.next().text
            ts.next()
            return name
        if ts.at("("):
            k = 1
            names = []
            while ts.at("ident", k=k):
                names.append(ts.peek(k).text)
                k += 1
                if ts.at(",", k=k):
                    k += 1
                    continue
                break
            if len(names) >= 2 and ts.at(")", k=k) and ts.at("<-", k=k + 1):
                for _ in range(k + 2):
                    ts.next()
                return tuple(names)
        return None

    def _cond(self, binder: Union[str, Tuple[str, ...]]) -> A.Assertion:
        ts = self.ts
        scrutinee = self.ep.expr()
        ts.expect("~")
        measure = self.measure()
        ts.expect("|")
        return A.Cond(binder, scrutinee, measure, self.assertion())

    # ---- measures ------------------------------------------------------

    def measure(self) -> dist.DistExpr:
        left = self.measure_atom()
        while self.ts.at("tensor") or self.ts.at_kw("tensor"):
            self.ts.next()
            left = dist.Product(left, self.measure_atom())
        return left

    def measure_atom(self) -> dist.DistExpr:
        ts = self.ts
        t = ts.peek()
        if ts.at("("):
            ts.next()
            inner = self.measure()
            ts.expect(")")
            return inner
        if not ts.at("ident"):
            ts.fail(f"expected a measure, found {t.text or 'end of input'!r}")
        name = t.text
        if name == "Leb":
            ts.next()
            if ts.at("["):
                ts.next()
                ts.expect("number")
                ts.expect(",")
                if ts.at_kw("inf") or ts.at("inf"):
                    ts.next()
                ts.expect(")")
            return dist.LEB
        if name == "Weighted":
            ts.next()
            ts.expect("(")
            density = self.ep.expr()
            ts.expect(",")
            base = self.measure()
            binder: Union[str, Tuple[str, ...]] = "x"
            if ts.at(","):
                ts.next()
                binder = self._binder_pattern()
            ts.expect(")")
            return dist.Weighted(density, base, binder)
        if name == "Scaled":
            ts.next()
            ts.expect("(")
            k = self.ep.expr()
            ts.expect(",")
            base = self.measure()
            ts.expect(")")
            return dist.Scaled(_try_eval(k), base)
        if name == "Product":
            ts.next()
            ts.expect("(")
            left = self.measure()
            ts.expect(",")
            right = self.measure()
            ts.expect(")")
            return dist.Product(left, right)
        if name == "DiscreteTable":
            ts.next()
            ts.expect("(")
            rows = []
            while True:
                v = self.ep.expr()
                ts.expect(":")
                w = self.ep.expr()
                rows.append((_force_eval(v, ts.peek()),
                             _force_eval(w, ts.peek())))
                if ts.at(","):
                    ts.next()
                    continue
                break
            ts.expect(")")
            return dist.DiscreteTable(tuple(rows))
        if bi.is_dist_constructor(name):
            ctor = self.ep.expr()
            try:
                return dist.from_constructor_term(ctor)
            except dist.NoRule as e:
                raise ParseError(str(e), t.line, t.col) from None
        ts.fail(f"unknown measure {name!r}")

    def _binder_pattern(self) -> Union[str, Tuple[str, ...]]:
        ts = self.ts
        if ts.at("ident"):
            return ts.next().text
        ts.expect("(")
        names = [ts.expect("ident").text]
        while ts.at(","):
            ts.next()
            names.append(ts.expect("ident").text)
        ts.expect(")")
        return tuple(names)


def _try_eval(t: Term):
    try:
        return eval_det(t, {})
    except EvalError:
        return t


def _force_eval(t: Term, tok: Token):
    try:
        return eval_det(t, {})
    except EvalError as e:
        raise ParseError(f"table entries must be closed: {e}",
                         tok.line, tok.col) from None


def parse_assertion(src: str, start_line: int = 1,
                    start_col: int = 1) -> A.Assertion:
    ts = TokenStream(tokenize(src, start_line=start_line, start_col=start_col))
    p = AssertionParser(ts)
    out = p.assertion()
    if not ts.at("eof"):
        t = ts.peek()
        raise ParseError(f"trailing input starting at {t.text!r}",
                         t.line, t.col)
    return out
