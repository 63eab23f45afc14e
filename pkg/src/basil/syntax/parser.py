"""Tokenizer and recursive-descent parser for .bppl programs.

The concrete syntax mirrors the worked listings: keywords let/in, sample,
score, observe, observe ... from, return, if/then/else, bounded for over a
literal list, and ordinary arithmetic with parenthesized pairs. Numerals
(integer or decimal, optional exponent) denote exact rationals, so the
enumeration oracle downstream can stay in exact arithmetic.

The lexer also carries the extra punctuation used by the assertion
language (~, |, <-, angle brackets and their unicode forms) so the
annotation parser in basil.assertions can reuse it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from basil.syntax.terms import (
    BoolLit, Builtin, Fst, For, If, Let, Observe, ObserveFrom, Pair, RealLit,
    Ret, Sample, Score, Seq, Snd, Span, Term, UnitLit, Var,
)

KEYWORDS = {
    "let", "in", "sample", "score", "observe", "return", "from",
    "if", "then", "else", "for", "do", "and", "or", "not",
    "fst", "snd", "true", "false",
}

# longest match first
_PUNCT = [
    "{|", "|}", "<-", "<=", ">=", "-*", "=>", "/\\", "\\/",
    "(", ")", "[", "]", ",", ";", "=", "<", ">", "+", "-", "*", "/",
    "^", "~", "|", ".", ":",
]

_UNICODE_PUNCT = {
    "∼": "~",        # ∼
    "∗": "*",        # ∗
    "∧": "/\\",      # ∧
    "∨": "\\/",      # ∨
    "⇒": "=>",       # ⇒
    "←": "<-",       # ←
    "⊗": "tensor",   # ⊗
    "⟨": "langle",   # ⟨
    "⟩": "rangle",   # ⟩
    "⊤": "top",      # ⊤ (bare; ⊤₁ becomes top + subscript-one token)
    "⊥": "bot",      # ⊥
    "¬": "not",      # ¬
    "—∗": "-*",      # —∗
    "−∗": "-*",      # −∗ (minus-sign variant)
    "⊸": "-*",       # ⊸
    "∀": "forall",   # ∀
    "∃": "exists",   # ∃
    "×": "*",        # ×
    "₁": "sub1",     # ₁
    "·": "*",        # ·
    "−": "-",        # −
    "∞": "inf",      # ∞
}


class ParseError(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str              # "ident" | "number" | punct text | "eof"
    text: str
    line: int
    col: int
    value: Optional[Fraction] = None

    @property
    def span(self) -> Span:
        return Span(self.line, self.col)


def tokenize(src: str, start_line: int = 1, start_col: int = 1) -> List[Token]:
    toks: List[Token] = []
    i = 0
    line, col = start_line, start_col
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        # unicode notation, longest first
        two = src[i:i + 2]
        if two in _UNICODE_PUNCT:
            toks.append(Token(_UNICODE_PUNCT[two], two, line, col))
            i += 2
            col += 2
            continue
        if c in _UNICODE_PUNCT:
            toks.append(Token(_UNICODE_PUNCT[c], c, line, col))
            i += 1
            col += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            toks.append(Token("number", text, line, col, value=_fraction_of(text)))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] in "_'"):
                j += 1
            text = src[i:j]
            toks.append(Token("ident", text, line, col))
            col += j - i
            i = j
            continue
        matched = None
        for p in _PUNCT:
            if src.startswith(p, i):
                matched = p
                break
        if matched is None:
            raise ParseError(f"unexpected character {c!r}", line, col)
        toks.append(Token(matched, matched, line, col))
        i += len(matched)
        col += len(matched)
    toks.append(Token("eof", "", line, col))
    return toks


def _fraction_of(text: str) -> Fraction:
    mant = text
    exp = 0
    for e in "eE":
        if e in text:
            mant, etext = text.split(e)
            exp = int(etext)
            break
    if "." in mant:
        whole, frac = mant.split(".")
        val = Fraction(int((whole or "0") + frac), 10 ** len(frac))
    else:
        val = Fraction(int(mant))
    if exp >= 0:
        return val * 10 ** exp
    return val / 10 ** (-exp)


class TokenStream:
    """Cursor over a token list with arbitrary lookahead."""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, k: int = 0) -> Token:
        j = min(self.pos + k, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind: str, text: Optional[str] = None, k: int = 0) -> bool:
        t = self.peek(k)
        if t.kind != kind:
            return False
        return text is None or t.text == text

    def at_kw(self, word: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == "ident" and t.text == word

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(f"expected {what or kind}, found {t.text or 'end of input'!r}",
                             t.line, t.col)
        return self.next()

    def expect_kw(self, word: str) -> Token:
        t = self.peek()
        if not self.at_kw(word):
            raise ParseError(f"expected '{word}', found {t.text or 'end of input'!r}",
                             t.line, t.col)
        return self.next()

    def fail(self, msg: str):
        t = self.peek()
        raise ParseError(msg, t.line, t.col)


# identifiers that terminate an expression when they follow a binary
# operator; the assertion parser extends this set
_STOP_IDENTS = frozenset()


class TermParser:
    def __init__(self, ts: TokenStream, stop_idents=_STOP_IDENTS):
        self.ts = ts
        self.stop_idents = stop_idents
        # inside an ASCII likelihood bracket a bare > always closes it,
        # so greater-than must not be read as a comparison there
        self.suppress_gt = False

    # ---- term layer -------------------------------------------------

    def term(self) -> Term:
        first = self.stmt()
        if self.ts.at(";"):
            sp = self.ts.next().span
            rest = self.term()
            return Seq(first, rest, span=sp)
        return first

    def stmt(self) -> Term:
        ts = self.ts
        t = ts.peek()
        if ts.at_kw("let"):
            ts.next()
            name = ts.expect("ident", "a variable name").text
            if name in KEYWORDS:
                raise ParseError(f"keyword {name!r} cannot be bound", t.line, t.col)
            ts.expect("=")
            bound = self.stmt()
            ts.expect_kw("in")
            body = self.term()
            return Let(name, bound, body, span=t.span)
        if ts.at_kw("return"):
            ts.next()
            return Ret(self.expr(), span=t.span)
        if ts.at_kw("sample"):
            ts.next()
            ts.expect("(")
            inner = self.expr()
            ts.expect(")")
            return Sample(inner, span=t.span)
        if ts.at_kw("score"):
            ts.next()
            ts.expect("(")
            inner = self.expr()
            ts.expect(")")
            return Score(inner, span=t.span)
        if ts.at_kw("observe"):
            ts.next()
            value = self.expr()
            if ts.at_kw("from"):
                ts.next()
                dist = self.expr()
                if not isinstance(dist, Builtin):
                    ts.fail("observe ... from needs a distribution constructor")
                return ObserveFrom(value, dist, span=t.span)
            return Observe(value, span=t.span)
        if ts.at_kw("for"):
            ts.next()
            var = ts.expect("ident", "a loop variable").text
            ts.expect_kw("in")
            ts.expect("[")
            items = [self.expr()]
            while ts.at(","):
                ts.next()
                items.append(self.expr())
            ts.expect("]")
            ts.expect_kw("do")
            body = self.stmt()
            return For(var, tuple(items), body, span=t.span)
        if ts.at_kw("if"):
            return self.ifterm()
        return self.expr()

    def ifterm(self) -> Term:
        t = self.ts.expect_kw("if")
        cond = self.expr()
        self.ts.expect_kw("then")
        then = self.stmt()
        self.ts.expect_kw("else")
        els = self.stmt()
        return If(cond, then, els, span=t.span)

    # ---- expression layer -------------------------------------------

    def expr(self) -> Term:
        return self.or_expr()

    def _stop_after_op(self) -> bool:
        nxt = self.ts.peek(1)
        if not self.stop_idents:
            return False
        if nxt.kind != "ident":
            # ⟨k⟩ (or ASCII <k>) after a connective is a likelihood
            # bracket, never the start of a term
            return nxt.text in ("⟨", "<") or nxt.kind == "langle"
        if nxt.text in self.stop_idents:
            return True
        # an identifier directly followed by [, ~ or <- can only start
        # another assertion atom; no term form uses those tokens
        return any(self.ts.at(tok, k=2) for tok in ("[", "~", "<-"))

    def or_expr(self) -> Term:
        left = self.and_expr()
        while self.ts.at_kw("or"):
            sp = self.ts.next().span
            left = Builtin("or", (left, self.and_expr()), span=sp)
        return left

    def and_expr(self) -> Term:
        left = self.not_expr()
        while self.ts.at_kw("and"):
            sp = self.ts.next().span
            left = Builtin("and", (left, self.not_expr()), span=sp)
        return left

    def not_expr(self) -> Term:
        if self.ts.at_kw("not") or self.ts.at("not"):
            sp = self.ts.next().span
            return Builtin("not", (self.not_expr(),), span=sp)
        return self.cmp_expr()

    def cmp_expr(self) -> Term:
        left = self.add_expr()
        for op in ("=", "<=", ">=", "<", ">"):
            if op == ">" and self.suppress_gt:
                continue
            if self.ts.at(op):
                if self._stop_after_op():
                    return left
                sp = self.ts.next().span
                return Builtin(op, (left, self.add_expr()), span=sp)
        return left

    def add_expr(self) -> Term:
        left = self.mul_expr()
        while self.ts.at("+") or self.ts.at("-"):
            if self._stop_after_op():
                break
            op = self.ts.next()
            left = Builtin(op.kind, (left, self.mul_expr()), span=op.span)
        return left

    def mul_expr(self) -> Term:
        left = self.unary_expr()
        while self.ts.at("*") or self.ts.at("/"):
            if self._stop_after_op():
                break
            op = self.ts.next()
            left = Builtin(op.kind, (left, self.unary_expr()), span=op.span)
        return left

    def unary_expr(self) -> Term:
        if self.ts.at("-"):
            t = self.ts.next()
            inner = self.unary_expr()
            if isinstance(inner, RealLit):
                return RealLit(-inner.val, span=t.span)
            return Builtin("neg", (inner,), span=t.span)
        return self.pow_expr()

    def pow_expr(self) -> Term:
        base = self.primary()
        if self.ts.at("^"):
            sp = self.ts.next().span
            return Builtin("^", (base, self.unary_expr()), span=sp)
        return base

    def primary(self) -> Term:
        ts = self.ts
        t = ts.peek()
        if t.kind == "number":
            ts.next()
            return RealLit(t.value, span=t.span)
        if ts.at_kw("true"):
            ts.next()
            return BoolLit(True, span=t.span)
        if ts.at_kw("false"):
            ts.next()
            return BoolLit(False, span=t.span)
        if ts.at_kw("fst") or ts.at_kw("snd"):
            ts.next()
            ts.expect("(")
            inner = self.expr()
            ts.expect(")")
            node = Fst if t.text == "fst" else Snd
            return node(inner, span=t.span)
        if ts.at_kw("if"):
            return self.ifterm()
        if t.kind == "ident":
            if t.text in KEYWORDS:
                ts.fail(f"unexpected keyword {t.text!r}")
            ts.next()
            if ts.at("("):
                ts.next()
                if ts.at(")"):
                    ts.next()
                    return Builtin(t.text, (), span=t.span)
                args = [self.expr()]
                while ts.at(","):
                    ts.next()
                    args.append(self.expr())
                ts.expect(")")
                return Builtin(t.text, tuple(args), span=t.span)
            return Var(t.text, span=t.span)
        if ts.at("("):
            ts.next()
            if ts.at(")"):
                ts.next()
                return UnitLit(span=t.span)
            inner = self.term()
            if ts.at(","):
                ts.next()
                second = self.term()
                ts.expect(")")
                return Pair(inner, second, span=t.span)
            ts.expect(")")
            return inner
        ts.fail(f"unexpected {t.text or 'end of input'!r}")


def parse(src: str, start_line: int = 1) -> Term:
    """Parse a whole program; raises ParseError with line:col on bad input."""
    ts = TokenStream(tokenize(src, start_line=start_line))
    p = TermParser(ts)
    out = p.term()
    if not ts.at("eof"):
        t = ts.peek()
        raise ParseError(f"trailing input starting at {t.text!r}", t.line, t.col)
    return out


def parse_expr(src: str, start_line: int = 1, start_col: int = 1,
               stop_idents=_STOP_IDENTS) -> Term:
    """Parse a single deterministic expression (used by annotations)."""
    ts = TokenStream(tokenize(src, start_line=start_line, start_col=start_col))
    p = TermParser(ts, stop_idents=stop_idents)
    out = p.expr()
    if not ts.at("eof"):
        t = ts.peek()
        raise ParseError(f"trailing input starting at {t.text!r}", t.line, t.col)
    return out
