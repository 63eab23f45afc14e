"""Unicode rendering of assertions, matching the notation the proof
traces are meant to be read against: ∼ for distribution facts, ⟨e⟩ for
likelihoods, ∗ for the separating conjunction, and the binder-bar form
for conditioning."""

from __future__ import annotations

from basil import dist
from basil.assertions import nodes as A
from basil.syntax.pretty import pretty_expr

# Binding strength, loosest first. Binders and the conditioning bar are
# right-open: they swallow everything to their right unless parenthesized.
_OPEN = 0
_WAND = 1
_IMPLIES = 2
_OR = 3
_AND = 4
_STAR = 5
_ATOM = 6


def render_assertion(a: A.Assertion) -> str:
    return _render(a, _OPEN)


def _render(a: A.Assertion, need: int) -> str:
    text, level = _parts(a)
    if level < need:
        return f"({text})"
    return text


def _parts(a: A.Assertion):
    if isinstance(a, A.Top):
        return "⊤", _ATOM
    if isinstance(a, A.TopOne):
        return "⊤₁", _ATOM
    if isinstance(a, A.Bot):
        return "⊥", _ATOM
    if isinstance(a, A.NormConst):
        return "NormConst", _ATOM
    if isinstance(a, A.Star):
        return (f"{_render(a.left, _STAR)} ∗ {_render(a.right, _STAR)}",
                _STAR)
    if isinstance(a, A.And):
        return f"{_render(a.left, _AND)} ∧ {_render(a.right, _AND)}", _AND
    if isinstance(a, A.Or):
        return f"{_render(a.left, _OR)} ∨ {_render(a.right, _OR)}", _OR
    if isinstance(a, A.Implies):
        return (f"{_render(a.left, _OR)} ⇒ {_render(a.right, _IMPLIES)}",
                _IMPLIES)
    if isinstance(a, A.Wand):
        return (f"{_render(a.left, _IMPLIES)} −∗ {_render(a.right, _WAND)}",
                _WAND)
    if isinstance(a, A.ForallDet):
        return f"∀{a.name} : {a.tag.name}. {_render(a.body, _OPEN)}", _OPEN
    if isinstance(a, A.ExistsDet):
        return f"∃{a.name} : {a.tag.name}. {_render(a.body, _OPEN)}", _OPEN
    if isinstance(a, A.ForallRV):
        return f"∀{a.name} : {a.space}. {_render(a.body, _OPEN)}", _OPEN
    if isinstance(a, A.ExistsRV):
        return f"∃{a.name} : {a.space}. {_render(a.body, _OPEN)}", _OPEN
    if isinstance(a, A.Dist):
        return f"{pretty_expr(a.expr)} ∼ {dist.render(a.measure)}", _ATOM
    if isinstance(a, A.Expect):
        return f"E[{pretty_expr(a.expr)}] = {pretty_expr(a.value)}", _ATOM
    if isinstance(a, A.Cov):
        return (f"Cov[{pretty_expr(a.left)}, {pretty_expr(a.right)}] "
                f"{a.op} {pretty_expr(a.bound)}", _ATOM)
    if isinstance(a, A.Own):
        return f"own({pretty_expr(a.expr)})", _ATOM
    if isinstance(a, A.Score):
        return f"⟨{pretty_expr(a.weight)}⟩", _ATOM
    if isinstance(a, A.Cond):
        names = a.binder_names()
        binder = names[0] if len(names) == 1 else "(" + ", ".join(names) + ")"
        return (f"{binder} ← {pretty_expr(a.expr)} ∼ {dist.render(a.measure)}"
                f" | {_render(a.body, _OPEN)}", _OPEN)
    if isinstance(a, A.Triple):
        from basil.syntax.pretty import pretty
        return (f"{{{_render(a.pre, _OPEN)}}} {pretty(a.program)} "
                f"{{{a.binder}. {_render(a.post, _OPEN)}}}", _ATOM)
    raise TypeError(f"render: {type(a).__name__}")
