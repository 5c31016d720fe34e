"""Security levels and the verification context.

A security level is the set of agents allowed to know a message.  Levels
are ordered by reverse inclusion: fewer readers is more secure.  So ``geq``
is ``<=`` on reader sets, meet is union and join is intersection; the top
element is the empty set and the bottom element is the whole agent set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import chain
from typing import Iterable, Mapping

from .term import Atom, Kind, Variable


@dataclass(frozen=True)
class SecurityLevel:
    readers: frozenset[str] = frozenset()

    def geq(self, other: SecurityLevel) -> bool:
        """At least as secure as ``other``."""
        return self.readers <= other.readers

    def meet(self, other: SecurityLevel) -> SecurityLevel:
        return SecurityLevel(self.readers | other.readers)

    def join(self, other: SecurityLevel) -> SecurityLevel:
        return SecurityLevel(self.readers & other.readers)

    @property
    def is_top(self) -> bool:
        return not self.readers

    def sorted(self) -> list[str]:
        return sorted(self.readers)

    def __str__(self) -> str:
        if not self.readers:
            return "⊤"
        return "{" + ",".join(self.sorted()) + "}"


TOP = SecurityLevel()


def level(*names: str) -> SecurityLevel:
    return SecurityLevel(frozenset(names))


def geq(l1: SecurityLevel, l2: SecurityLevel) -> bool:
    return l1.geq(l2)


def meet(l1: SecurityLevel, l2: SecurityLevel) -> SecurityLevel:
    return l1.meet(l2)


def join(l1: SecurityLevel, l2: SecurityLevel) -> SecurityLevel:
    return l1.join(l2)


def meet_all(levels: Iterable[SecurityLevel]) -> SecurityLevel:
    """Meet of any number of levels; the empty meet is ⊤."""
    return SecurityLevel(frozenset(chain.from_iterable(l.readers for l in levels)))


@dataclass(frozen=True)
class PowersetLattice:
    """The lattice of reader sets over a fixed agent universe."""

    universe: frozenset[str]

    @property
    def top(self) -> SecurityLevel:
        return TOP

    @property
    def bottom(self) -> SecurityLevel:
        return SecurityLevel(self.universe)

    def __contains__(self, lvl: SecurityLevel) -> bool:
        return lvl.readers <= self.universe

    def elements(self) -> list[SecurityLevel]:
        names = sorted(self.universe)
        return [SecurityLevel(frozenset(n for i, n in enumerate(names) if mask >> i & 1))
                for mask in range(1 << len(names))]


class ContextError(ValueError):
    pass


@dataclass(frozen=True)
class VerificationContext:
    agents: frozenset[str]
    intruder: str
    inverse: Mapping[str, str] = field(default_factory=dict)
    # name -> level; atoms are looked up by name, so Na^i and Na^j share ⌈Na⌉
    assigned_level: Mapping[str, SecurityLevel] = field(default_factory=dict)
    intruder_knowledge: frozenset[Atom] = frozenset()
    variables: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if self.intruder not in self.agents:
            raise ContextError(f"intruder {self.intruder} is not among the agents")
        for k, kinv in self.inverse.items():
            if self.inverse.get(kinv) != k:
                raise ContextError(f"key inverse map is not involutive at {k}")
        for name, lvl in self.assigned_level.items():
            if lvl not in self.lattice:
                stray = sorted(lvl.readers - self.agents)
                raise ContextError(f"level of {name} names non-agents {stray}")

    @property
    def lattice(self) -> PowersetLattice:
        return PowersetLattice(self.agents)

    @property
    def bottom(self) -> SecurityLevel:
        return SecurityLevel(self.agents)

    def is_declared(self, a: Atom | Variable) -> bool:
        return a.name in self.assigned_level

    def level_of(self, a: Atom | Variable) -> SecurityLevel:
        """⌈a⌉; undeclared atoms and variables get ⊤."""
        return self.assigned_level.get(a.name, TOP)

    def inverse_of(self, k: Atom) -> Atom | None:
        inv = self.inverse.get(k.name)
        return None if inv is None else Atom(inv, Kind.KEY)

    def holds(self, agent: str, a: Atom) -> bool:
        """Whether ``agent`` is among the declared readers of ``a``."""
        return agent in self.level_of(a).readers

    def authorized(self, alpha: Atom | Variable) -> bool:
        """⌈K(I)⌉ ⊒ ⌈alpha⌉: some initially known atom is at least as secure as alpha.

        Only atoms with a declared level count; the ⊤ default for undeclared
        atoms is a fallback, not a clearance.
        """
        target = self.level_of(alpha)
        return any(self.level_of(a).geq(target) for a in self.intruder_knowledge
                   if self.is_declared(a))
