"""The reliable function F, its derivative F' and the static witness bounds.

F(alpha, M) computes the set of agents that may learn ``alpha`` from the
messages ``M``.  Encryption under a *strong* key (one whose inverse is held
only by agents cleared for ``alpha``) stops the descent and reports the
holders of the inverse key together with every identity riding along in
the payload; a *weak* key is looked through.

F' first erases the variables around ``alpha`` and then applies F, so it
can be evaluated on the variable-bearing messages of generalized roles.
"""

from __future__ import annotations

from typing import Iterable

from .context import TOP, SecurityLevel, VerificationContext, meet_all
from .term import (
    EMPTY, Atom, Concat, Enc, Kind, Term, Variable, _Node, atoms_of,
    occurs, rename_apart, subterms, unify, NotUnifiable, variables_of,
)

Subject = Atom | Variable
Trace = list[str] | None


class UndeclaredKey(LookupError):
    def __init__(self, key: Atom):
        super().__init__(f"key {key} has no declared inverse")
        self.key = key


class EmptyUnifiableSet(ValueError):
    pass


def _messages(M: Term | Iterable[Term]) -> list[Term]:
    if isinstance(M, _Node):
        return [M]
    if isinstance(M, (set, frozenset)):
        return sorted(M, key=str)
    return list(dict.fromkeys(M))


def _fmt_set(M: list[Term]) -> str:
    if not M:
        return "∅"
    return ", ".join(map(str, M))


def identities_of(m: Term) -> SecurityLevel:
    """ID(m): identity atoms anywhere in ``m``, inner encryptions included."""
    return SecurityLevel(frozenset(t.name for t in subterms(m)
                                   if isinstance(t, Atom) and t.kind is Kind.IDENTITY))


def strength_level(alpha: Subject, ctx: VerificationContext) -> SecurityLevel:
    """The level a key inverse is compared against when deciding strong/weak.

    A variable without a declared level stands for unknown content; it is
    compared at ⊥, so any key protects it and clause 6 applies.
    """
    if isinstance(alpha, Variable) and not ctx.is_declared(alpha):
        return ctx.bottom
    return ctx.level_of(alpha)


def f_level(alpha: Subject, M: Term | Iterable[Term], ctx: VerificationContext,
            trace: Trace = None) -> SecurityLevel:
    """F(alpha, M)."""
    msgs = _messages(M)
    if not msgs:
        if trace is not None:
            trace.append(f"F({alpha}, ∅) = ⊤")
        return TOP
    if len(msgs) > 1 and trace is not None:
        trace.append(f"well-formed split: F({alpha}, {{{_fmt_set(msgs)}}}) is the meet over each message")
    result = meet_all(_f(alpha, m, ctx, trace) for m in msgs)
    if trace is not None:
        trace.append(f"= {result}")
    return result


def _f(alpha: Subject, m: Term, ctx: VerificationContext, trace: Trace) -> SecurityLevel:
    if not occurs(alpha, m):
        if trace is not None:
            trace.append(f"{alpha} absent from {m}: ⊤")
        return TOP
    if m == alpha:
        if trace is not None:
            trace.append(f"{alpha} in clear: ⊥")
        return ctx.bottom
    if isinstance(m, Concat):
        if trace is not None:
            trace.append(f"well-formed split: F({alpha}, {m.left}) ⊓ F({alpha}, {m.right})")
        return _f(alpha, m.left, ctx, trace).meet(_f(alpha, m.right, ctx, trace))
    assert isinstance(m, Enc)
    if isinstance(m.key, Variable):
        # unknown key: nothing guarantees it is strong
        if trace is not None:
            trace.append(f"weak key {m.key} (variable) ignored")
        return _f(alpha, m.payload, ctx, trace)
    inv = ctx.inverse_of(m.key)
    if inv is None:
        raise UndeclaredKey(m.key)
    inv_level = ctx.level_of(inv)
    alpha_level = strength_level(alpha, ctx)
    if inv_level.geq(alpha_level):
        ids = identities_of(m.payload)
        if isinstance(alpha, Atom) and alpha.kind is Kind.IDENTITY:
            ids = SecurityLevel(ids.readers - {alpha.name})
        out = inv_level.meet(ids)
        if trace is not None:
            trace.append(f"strong key {m.key}: ⌈{inv}⌉ ⊓ ID({m.payload}) = {inv_level} ∪ {ids} = {out}")
        return out
    if trace is not None:
        trace.append(f"weak key {m.key} ignored: ⌈{inv}⌉ = {inv_level} is not ⊒ ⌈{alpha}⌉ = {alpha_level}")
    return _f(alpha, m.payload, ctx, trace)


def derive(alpha: Subject, m: Term) -> Term:
    """Erase every variable other than ``alpha`` from ``m``.

    A concatenation losing one side collapses to the other; an encryption
    whose whole payload is erased keeps an empty payload.  Keys are kept.
    """
    out = _erase(alpha, m)
    return EMPTY if out is None else out


def _erase(alpha: Subject, m: Term) -> Term | None:
    if isinstance(m, Variable):
        return m if m == alpha else None
    if isinstance(m, Concat):
        left, right = _erase(alpha, m.left), _erase(alpha, m.right)
        if left is None or right is None:
            return left if right is None else right
        return Concat(left, right)
    if isinstance(m, Enc):
        payload = _erase(alpha, m.payload)
        return Enc(EMPTY if payload is None else payload, m.key)
    return m


def f_prime(alpha: Subject, M: Term | Iterable[Term], ctx: VerificationContext,
            trace: Trace = None) -> SecurityLevel:
    """F'(alpha, M) = F(alpha, {derive(alpha, m) | m in M})."""
    msgs = _messages(M)
    if trace is not None:
        removed = [v for v in variables_of(msgs) if v != alpha]
        for v in removed:
            trace.append(f"variable {v} removed by derivation")
        if not removed:
            trace.append(f"no variable in the neighborhood of {alpha} to be removed by derivation")
    derived = [derive(alpha, m) for m in msgs]
    if trace is not None:
        trace.append(f"F'({alpha}, {_fmt_set(msgs)}) = F({alpha}, {_fmt_set(derived)})")
    return f_level(alpha, derived, ctx, trace)


def upper_bound(alpha: Subject, m: Term, ctx: VerificationContext,
                trace: Trace = None) -> SecurityLevel:
    """Static upper bound of the witness-function: F'(alpha, m)."""
    return f_prime(alpha, [m], ctx, trace)


def lower_bound(alpha: Subject, m: Term, patterns: Iterable[Term], ctx: VerificationContext,
                trace: Trace = None) -> SecurityLevel:
    """Meet of F'(alpha, m'σ) over every pattern m' unifiable with ``m``.

    Each pattern is renamed apart from ``m`` first; session indices unify
    like variables so a pattern matches its own copy from another session.
    If the unifier binds a variable ``alpha`` to a term, the atoms and
    variables of that term are evaluated in its place.
    """
    values = []
    for pattern in _messages(patterns):
        fresh = rename_apart(pattern, m)
        try:
            sigma = unify(fresh, m, sessions=True)
        except NotUnifiable:
            continue
        instance = sigma.apply(fresh)
        image = sigma.apply(alpha)
        if isinstance(image, (Atom, Variable)):
            subjects = [image]
        else:
            subjects = sorted(atoms_of(image), key=str) + variables_of(image)
        if trace is not None:
            trace.append(f"{m} unifies with pattern {pattern} via {sigma}")
        values.append(meet_all(f_prime(s, [instance], ctx, trace) for s in subjects))
    if not values:
        raise EmptyUnifiableSet(f"{m} unifies with no generated pattern")
    result = meet_all(values)
    if trace is not None and len(values) > 1:
        trace.append(f"lower bound = meet over {len(values)} unifiable patterns = {result}")
    return result

