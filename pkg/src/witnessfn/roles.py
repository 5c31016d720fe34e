"""Protocols, generalized roles and receive/send rules."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import count
from typing import Iterable, Iterator

from .context import VerificationContext
from .term import (
    Atom, Concat, Enc, Kind, Term, Variable, atoms_of, canonical, encryption_patterns,
    variables_of,
)


class MalformedProtocol(ValueError):
    pass


class Direction(str, enum.Enum):
    SEND = "send"
    RECV = "recv"


@dataclass(frozen=True)
class Step:
    index: int
    sender: str
    receiver: str
    message: Term

    def __str__(self) -> str:
        return f"{self.index}. {self.sender} -> {self.receiver} : {self.message}"


@dataclass(frozen=True)
class Event:
    direction: Direction
    message: Term

    def __str__(self) -> str:
        return f"{self.direction.value} {self.message}"


@dataclass(frozen=True)
class GeneralizedRole:
    principal: str
    session: str
    events: tuple[Event, ...]

    def messages(self, direction: Direction) -> list[Term]:
        return [e.message for e in self.events if e.direction is direction]

    def same_up_to_renaming(self, other: GeneralizedRole) -> bool:
        if self.principal != other.principal:
            return False
        if [e.direction for e in self.events] != [e.direction for e in other.events]:
            return False
        return (canonical(*(e.message for e in self.events))
                == canonical(*(e.message for e in other.events)))


@dataclass(frozen=True)
class Protocol:
    name: str
    steps: tuple[Step, ...]
    declared_roles: tuple[GeneralizedRole, ...] | None = None


@dataclass(frozen=True)
class RuleStep:
    role: str
    label: str
    received: tuple[Term, ...]
    sent: Term


_SESSIONS = "ijklmn"
_VARIABLES = "XYZWVU"


def _fresh_names(pool: str, taken: set[str]) -> Iterator[str]:
    for name in pool:
        if name not in taken:
            yield name
    for n in count(1):
        for name in pool:
            if f"{name}{n}" not in taken:
                yield f"{name}{n}"


def principals(p: Protocol) -> list[str]:
    seen: dict[str, None] = {}
    for s in p.steps:
        seen.setdefault(s.sender)
        seen.setdefault(s.receiver)
    return list(seen)


def extract_generalized_roles(p: Protocol, ctx: VerificationContext, *,
                              use_declared: bool = True) -> list[GeneralizedRole]:
    """Project the protocol onto each principal.

    In received messages, a nonce the principal neither generated nor learnt
    earlier becomes a fresh variable, and so does a ciphertext it cannot
    decrypt.  Nonces the principal generates carry its session symbol.
    Declared roles, when present, are returned as they are.
    """
    if use_declared and p.declared_roles is not None:
        return list(p.declared_roles)

    origin: dict[str, str] = {}
    for s in p.steps:
        for a in sorted(atoms_of(s.message), key=str):
            if a.kind is Kind.NONCE:
                origin.setdefault(a.name, s.sender)

    taken = set(ctx.agents) | set(ctx.variables) | set(ctx.assigned_level) | set(ctx.inverse)
    taken |= {a.name for s in p.steps for a in atoms_of(s.message)}
    var_names = _fresh_names(_VARIABLES, taken)
    roles = []
    for who, session in zip(principals(p), _fresh_names(_SESSIONS, set())):
        projection = _Projection(who, session, origin, ctx, var_names)
        events = []
        for s in p.steps:
            if s.sender == who:
                events.append(Event(Direction.SEND, projection.send(s.message, s)))
            elif s.receiver == who:
                events.append(Event(Direction.RECV, projection.recv(s.message)))
        roles.append(GeneralizedRole(who, session, tuple(events)))
    return roles


class _Projection:
    def __init__(self, who: str, session: str, origin: dict[str, str],
                 ctx: VerificationContext, var_names: Iterator[str]):
        self.who = who
        self.session = session
        self.origin = origin
        self.ctx = ctx
        self.var_names = var_names
        # protocol-level subterm -> what this principal sees in its place
        self.known: dict[Term, Term] = {}

    def _own(self, a: Atom) -> Term:
        return Atom(a.name, Kind.NONCE, self.session)

    def _unknown(self, m: Term) -> Variable:
        v = Variable(next(self.var_names))
        self.known[m] = v
        return v

    def recv(self, m: Term) -> Term:
        if m in self.known:
            return self.known[m]
        if isinstance(m, Atom):
            if m.kind is not Kind.NONCE:
                return m
            if self.origin.get(m.name) == self.who:
                return self._own(m)
            return self._unknown(m)
        if isinstance(m, Concat):
            return Concat(self.recv(m.left), self.recv(m.right))
        if isinstance(m, Enc):
            inv = self.ctx.inverse_of(m.key) if isinstance(m.key, Atom) else None
            if inv is None or not self.ctx.holds(self.who, inv):
                return self._unknown(m)
            return Enc(self.recv(m.payload), m.key)
        return m

    def send(self, m: Term, step: Step) -> Term:
        if m in self.known:
            return self.known[m]
        if isinstance(m, Atom):
            if m.kind is not Kind.NONCE:
                return m
            if self.origin.get(m.name) != self.who:
                raise MalformedProtocol(
                    f"step {step.index}: {self.who} sends nonce {m} it never received")
            out = self._own(m)
            self.known[m] = out
            return out
        if isinstance(m, Concat):
            return Concat(self.send(m.left, step), self.send(m.right, step))
        if isinstance(m, Enc):
            if isinstance(m.key, Atom) and not self.ctx.holds(self.who, m.key):
                raise MalformedProtocol(
                    f"step {step.index}: {self.who} encrypts with {m.key} without holding it")
            out = Enc(self.send(m.payload, step), m.key)
            self.known[m] = out
            return out
        return m


def rule_steps(r: GeneralizedRole) -> list[RuleStep]:
    """One rule per send event; R⁻ is every message received before it."""
    sends = sum(1 for e in r.events if e.direction is Direction.SEND)
    received: list[Term] = []
    rules = []
    for e in r.events:
        if e.direction is Direction.RECV:
            received.append(e.message)
            continue
        n = len(rules) + 1
        label = f"S_{r.principal}^{n}" if sends > 1 else f"S_{r.principal}"
        rules.append(RuleStep(r.principal, label, tuple(received), e.message))
    return rules


def generated_messages(roles: Iterable[GeneralizedRole]) -> list[Term]:
    """Sent messages of all roles plus their encryption patterns.

    One representative per class up to renaming of variables and sessions.
    """
    sent = [m for r in roles for m in r.messages(Direction.SEND)]
    seen: dict[tuple[Term, ...], Term] = {}
    for m in sent:
        seen.setdefault(canonical(m), m)
        for pattern in encryption_patterns([m]):
            seen.setdefault(canonical(pattern), pattern)
    return list(seen.values())


def unbound_sends(r: GeneralizedRole) -> list[tuple[int, Variable]]:
    """Variables sent before the role received them, as (event index, variable)."""
    seen: set[Variable] = set()
    bad = []
    for i, e in enumerate(r.events):
        vs = variables_of(e.message)
        if e.direction is Direction.RECV:
            seen.update(vs)
        else:
            bad += [(i, v) for v in vs if v not in seen]
    return bad
