"""Proof traces: the machine-checkable record of a verification run.

Every step names a rule from the fixed registry and carries the full
assertion before and after, so an external checker can replay the
reasoning without rerunning the search. Consecutive steps chain: the
after of step i is the before of step i+1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

from basil.assertions import Assertion, render_assertion
from basil.syntax.terms import Span

# The complete rule vocabulary. Hoare rules transform program state,
# E-rules are entailment rewrites, and every trace step must use one of
# these names.
HOARE_RULES = (
    "H-Sample", "H-CondSample", "H-Score", "H-CondScore", "H-Observe",
    "H-CondObserve", "H-Return", "H-Let", "H-Frame", "H-Cons",
    "H-BoundedFor",
)
ENTAIL_RULES = (
    "E-∗-Ident", "E-∗-Comm", "E-∗-Assoc", "E-∗-Weak", "E-∗-Cong",
    "E-True", "E-False", "E-∧-Elim", "E-∧-Intro", "E-∨-Intro",
    "E-NormConst", "E-Bayes", "E-Likelihood", "E-Score-Mult",
    "E-PairMerge", "E-Marginal", "E-Joint", "E-Expect", "E-Cov",
    "E-MeasEq",
)
ALL_RULES = frozenset(HOARE_RULES + ENTAIL_RULES)


@dataclass(frozen=True)
class ProofStep:
    span: Optional[Span]
    rule: str
    before: Assertion
    after: Assertion
    side: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.rule not in ALL_RULES:
            raise ValueError(f"unknown rule {self.rule!r}")


@dataclass
class ProofTrace:
    steps: Tuple[ProofStep, ...] = ()

    def __post_init__(self):
        self.steps = tuple(self.steps)
        for a, b in zip(self.steps, self.steps[1:]):
            if a.after != b.before:
                raise ValueError(
                    f"broken chain after {a.rule}: "
                    f"{render_assertion(a.after)} != "
                    f"{render_assertion(b.before)}")

    @property
    def final(self) -> Optional[Assertion]:
        return self.steps[-1].after if self.steps else None

    def extend(self, step: ProofStep) -> "ProofTrace":
        if self.steps and self.steps[-1].after != step.before:
            raise ValueError(f"step {step.rule} does not chain")
        return ProofTrace(self.steps + (step,))

    def to_json(self):
        out = []
        for s in self.steps:
            out.append({
                "span": ({"line": s.span.line, "col": s.span.col}
                         if s.span else None),
                "rule": s.rule,
                "before": render_assertion(s.before),
                "after": render_assertion(s.after),
                "side": list(s.side),
            })
        return out

    def render(self) -> str:
        lines = []
        if self.steps:
            lines.append(f"  {render_assertion(self.steps[0].before)}")
        for s in self.steps:
            where = f" @ {s.span.line}:{s.span.col}" if s.span else ""
            note = f"   [{'; '.join(s.side)}]" if s.side else ""
            lines.append(f"    --- {s.rule}{where}{note}")
            lines.append(f"  {render_assertion(s.after)}")
        return "\n".join(lines)
