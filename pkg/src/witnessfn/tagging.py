"""Tagging verification.

A protocol is tagged when every encryption pattern a principal receives
unifies with exactly one class of generated patterns, its regular origin.
The same uniqueness is required of sent patterns that carry variables,
since those are what the witness lower bound unifies against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

from .roles import Direction, GeneralizedRole, generated_messages
from .term import Term, canonical, encryption_patterns, is_ground, rename_apart, unifiable


class Verdict(str, enum.Enum):
    UNIQUE = "Unique"
    AMBIGUOUS = "Ambiguous"
    NO_ORIGIN = "NoOrigin"


@dataclass(frozen=True)
class Finding:
    role: str
    side: Direction
    pattern: Term
    origins: tuple[Term, ...]
    verdict: Verdict


@dataclass(frozen=True)
class TaggingReport:
    findings: tuple[Finding, ...]

    @property
    def tagged(self) -> bool:
        return all(f.verdict is Verdict.UNIQUE for f in self.findings)

    def problems(self) -> list[Finding]:
        return [f for f in self.findings if f.verdict is not Verdict.UNIQUE]


def origins_of(pattern: Term, universe: Iterable[Term]) -> list[Term]:
    """Generated pattern classes that unify with ``pattern`` once renamed apart."""
    return [u for u in universe
            if unifiable(rename_apart(u, pattern), pattern, sessions=True) is not None]


def _verdict(n: int) -> Verdict:
    if n == 1:
        return Verdict.UNIQUE
    return Verdict.AMBIGUOUS if n > 1 else Verdict.NO_ORIGIN


def check_tagged(roles: Iterable[GeneralizedRole]) -> TaggingReport:
    roles = list(roles)
    universe = generated_messages(roles)
    findings = []
    for r in roles:
        done: set[tuple[Direction, tuple[Term, ...]]] = set()
        for e in r.events:
            if e.direction is Direction.RECV:
                candidates = encryption_patterns([e.message])
            else:
                candidates = [t for t in [e.message, *encryption_patterns([e.message])]
                              if not is_ground(t)]
            for pattern in candidates:
                tag = (e.direction, canonical(pattern))
                if tag in done:
                    continue
                done.add(tag)
                hits = origins_of(pattern, universe)
                findings.append(Finding(r.principal, e.direction, pattern, tuple(hits),
                                        _verdict(len(hits))))
    return TaggingReport(tuple(findings))


def recv_findings(report: TaggingReport, *, with_variables: bool = True) -> list[Finding]:
    """Receive-side findings, by default only those on variable-bearing patterns."""
    return [f for f in report.findings
            if f.side is Direction.RECV and (not with_variables or not is_ground(f.pattern))]

