"""Secrecy decision procedures.

Both procedures check, for every send rule ``R⁻ / r⁺`` of every generalized
role and every atom ``alpha`` sent in ``r⁺``::

    lhs ⊒ ⌈alpha⌉ ⊓ F'(alpha, R⁻)

The general procedure takes ``lhs`` to be the witness lower bound (meet of
F' over all generated patterns unifiable with ``r⁺``).  For tagged protocols
only ``r⁺`` itself unifies, and ``lhs`` is simply F'(alpha, r⁺).

A passing run certifies secrecy; a failing one only means the sufficient
condition did not hold.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .context import SecurityLevel, VerificationContext
from .levels import f_prime, lower_bound
from .roles import (
    GeneralizedRole, Protocol, RuleStep, extract_generalized_roles, generated_messages,
    rule_steps,
)
from .tagging import TaggingReport, check_tagged
from .term import Atom, Kind, Term, Variable, atom_list, subterms, variables_of


class Mode(str, enum.Enum):
    TAGGED = "Tagged"
    GENERAL = "General"


class Conclusion(str, enum.Enum):
    CORRECT = "CorrectForSecrecy"
    NOT_CERTIFIED = "NotCertified"
    NOT_TAGGED = "NotTagged"


@dataclass(frozen=True)
class AtomVerdict:
    role: str
    step: str
    alpha: Atom | Variable
    lhs: SecurityLevel
    alpha_level: SecurityLevel
    rhs_recv: SecurityLevel
    passed: bool
    derivation: tuple[str, ...] = ()

    @property
    def rhs(self) -> SecurityLevel:
        """⌈alpha⌉ ⊓ F'(alpha, R⁻)"""
        return self.alpha_level.meet(self.rhs_recv)

    def row(self) -> tuple:
        return (self.role, self.step, self.alpha, self.lhs, self.alpha_level,
                self.rhs_recv, self.passed)


@dataclass(frozen=True)
class Skipped:
    role: str
    step: str
    atom: Atom
    reason: str


@dataclass(frozen=True)
class AnalysisReport:
    protocol: str
    mode: Mode
    tagging: TaggingReport
    verdicts: tuple[AtomVerdict, ...]
    conclusion: Conclusion
    warnings: tuple[str, ...] = ()
    skipped: tuple[Skipped, ...] = ()
    agents: tuple[str, ...] = ()

    def table(self) -> list[tuple]:
        return [v.row() for v in self.verdicts]

    def failures(self) -> list[AtomVerdict]:
        return [v for v in self.verdicts if not v.passed]

    def verdict(self, role: str, step: str, alpha: str) -> AtomVerdict:
        for v in self.verdicts:
            if v.role == role and v.step == step and str(v.alpha) == alpha:
                return v
        raise KeyError((role, step, alpha))


def analyzed_subjects(rule: RuleStep, ctx: VerificationContext) -> tuple[list[Atom | Variable], list[Skipped]]:
    """Atoms of r⁺ to check (first-occurrence order), then its variables.

    Keys and atoms at ⊥ are skipped: the condition holds vacuously for ⊥,
    and keys only ever sit in key position.
    """
    subjects: list[Atom | Variable] = []
    skipped = []
    for a in atom_list(rule.sent):
        if a.kind is Kind.KEY:
            skipped.append(Skipped(rule.role, rule.label, a, "key"))
        elif ctx.level_of(a) == ctx.bottom:
            skipped.append(Skipped(rule.role, rule.label, a, "public (⊥)"))
        else:
            subjects.append(a)
    return subjects + variables_of(rule.sent), skipped


def _undeclared(roles: Iterable[GeneralizedRole], ctx: VerificationContext) -> list[str]:
    names = {}
    for r in roles:
        for e in r.events:
            for t in subterms(e.message):
                if isinstance(t, Atom) and not ctx.is_declared(t) and t.kind is not Kind.KEY:
                    names.setdefault(t.name)
    return [f"atom {n} has no declared level; treated as ⊤" for n in names]


def analyze(p: Protocol, ctx: VerificationContext, mode: Mode = Mode.TAGGED,
            roles: list[GeneralizedRole] | None = None) -> AnalysisReport:
    if roles is None:
        roles = extract_generalized_roles(p, ctx)
    tagging = check_tagged(roles)
    warnings = tuple(_undeclared(roles, ctx))
    agents = tuple(sorted(ctx.agents))
    if mode is Mode.TAGGED and not tagging.tagged:
        return AnalysisReport(p.name, mode, tagging, (), Conclusion.NOT_TAGGED, warnings, (), agents)

    patterns = generated_messages(roles) if mode is Mode.GENERAL else []
    verdicts = []
    skipped = []
    for r in roles:
        for rule in rule_steps(r):
            subjects, skips = analyzed_subjects(rule, ctx)
            skipped += skips
            for alpha in subjects:
                verdicts.append(_check(rule, alpha, ctx, mode, patterns))
    ok = all(v.passed for v in verdicts)
    conclusion = Conclusion.CORRECT if ok else Conclusion.NOT_CERTIFIED
    return AnalysisReport(p.name, mode, tagging, tuple(verdicts), conclusion, warnings,
                          tuple(skipped), agents)


def _check(rule: RuleStep, alpha: Atom | Variable, ctx: VerificationContext, mode: Mode,
           patterns: list[Term]) -> AtomVerdict:
    lines = [f"on sending: r+ = {rule.sent}"]
    if mode is Mode.GENERAL:
        lhs = lower_bound(alpha, rule.sent, patterns, ctx, lines)
    else:
        lhs = f_prime(alpha, [rule.sent], ctx, lines)
    received = ", ".join(map(str, rule.received)) if rule.received else "∅"
    lines.append(f"on receiving: R- = {received}")
    rhs_recv = f_prime(alpha, rule.received, ctx, lines)
    alpha_level = ctx.level_of(alpha)
    bound = alpha_level.meet(rhs_recv)
    passed = lhs.geq(bound)
    sym = "⊒" if passed else "⋣"
    lines.append(f"⌈{alpha}⌉ ⊓ F'({alpha}, R-) = {alpha_level} ⊓ {rhs_recv} = {bound}")
    lines.append(f"{lhs} {sym} {bound}: {'respected' if passed else 'not respected'}")
    return AtomVerdict(rule.role, rule.label, alpha, lhs, alpha_level, rhs_recv, passed,
                       tuple(lines))


def analyze_tagged(p: Protocol, ctx: VerificationContext) -> AnalysisReport:
    return analyze(p, ctx, Mode.TAGGED)


def analyze_general(p: Protocol, ctx: VerificationContext) -> AnalysisReport:
    return analyze(p, ctx, Mode.GENERAL)
