"""Bounded Dolev-Yao deduction and property checks on the reliable function.

The intruder decomposes pairs, decrypts with known inverse keys, pairs and
encrypts with known keys.  Decomposition runs to a fixpoint; composition
only builds terms up to a given nesting depth, which keeps the closure
finite.

None of this is part of the decision procedure.  It is a test oracle for
the two properties the reliability argument rests on, checked at desk scale.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator

from .context import SecurityLevel, VerificationContext
from .levels import f_level, f_prime, strength_level
from .term import (
    Atom, Concat, Empty, Enc, Kind, Term, Variable, atoms_of, is_ground, nesting, occurs, size,
    subterms,
)


@dataclass(frozen=True)
class KnowledgeSet:
    terms: frozenset[Term]
    ctx: VerificationContext

    def __post_init__(self) -> None:
        for t in self.terms:
            if not is_ground(t) or any(isinstance(s, Empty) for s in subterms(t)):
                raise ValueError(f"knowledge must be ground, got {t}")


def _order(t: Term) -> tuple[int, str]:
    return (size(t), str(t))


def analyze_knowledge(terms: Iterable[Term], ctx: VerificationContext) -> frozenset[Term]:
    """Decomposition closure: split pairs, open ciphertexts whose inverse key is known."""
    known = set(terms) | set(ctx.intruder_knowledge)
    locked: list[Enc] = []
    todo = list(known)
    while todo:
        t = todo.pop()
        found: list[Term] = []
        if isinstance(t, Concat):
            found = [t.left, t.right]
        elif isinstance(t, Enc):
            locked.append(t)
        elif isinstance(t, Atom) and t.kind is Kind.KEY:
            # a new key may open ciphertexts seen earlier
            still = []
            for c in locked:
                if ctx.inverse_of(c.key) == t:
                    found.append(c.payload)
                else:
                    still.append(c)
            locked = still
        if isinstance(t, Enc):
            inv = ctx.inverse_of(t.key)
            if inv is not None and inv in known:
                found.append(t.payload)
                locked.remove(t)
        for f in found:
            if f not in known:
                known.add(f)
                todo.append(f)
    return frozenset(known)


def known_keys(terms: Iterable[Term]) -> list[Atom]:
    return sorted((t for t in terms if isinstance(t, Atom) and t.kind is Kind.KEY), key=str)


def _by_nesting(terms: Iterable[Term], depth: int) -> list[set[Term]]:
    buckets: list[set[Term]] = [set() for _ in range(depth + 1)]
    for t in terms:
        n = nesting(t)
        if n <= depth:
            buckets[n].add(t)
    return buckets


def derive_closure(k: KnowledgeSet, depth: int) -> frozenset[Term]:
    """Everything deducible from ``k`` and the intruder's initial knowledge.

    Built terms are limited to nesting ``depth``; decomposed ones are not.
    Terms of nesting ``n`` are composed from terms of nesting below ``n``,
    so one pass per nesting level reaches the fixpoint.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    start = analyze_knowledge(k.terms, k.ctx)
    keys = known_keys(start)
    buckets = _by_nesting(start, depth)
    below: list[Term] = []
    for n in range(1, depth + 1):
        top = list(buckets[n - 1])
        below += top
        made = buckets[n]
        for a in top:
            made.update(Enc(a, key) for key in keys)
            for b in below:
                made.add(Concat(a, b))
                made.add(Concat(b, a))
    return frozenset(start).union(*buckets)


def _violates(alpha: Atom, m: Term, base: SecurityLevel, ctx: VerificationContext) -> bool:
    return occurs(alpha, m) and not f_level(alpha, m, ctx).geq(base)


def _identities(m: Term) -> frozenset[str]:
    return frozenset(t.name for t in subterms(m) if isinstance(t, Atom) and t.kind is Kind.IDENTITY)


def check_full_invariance(ctx: VerificationContext, M: KnowledgeSet, alpha: Atom,
                          depth: int) -> tuple[bool, Term | None]:
    """Look for a deducible message that lowers F(alpha, .) below F(alpha, M).

    Every message of ``derive_closure(M, depth)`` is covered, but not by
    enumeration.  A pair never needs checking since F splits it into its
    parts, which are deducible too.  An encryption under a weak key has the
    level of its payload.  What is left are the decomposition results and
    encryptions under strong keys, whose level only depends on whether
    alpha occurs in the payload and on the identities in it.  Payloads are
    therefore tracked by that signature (plus nesting, which bounds what
    can still be built) with one smallest representative each.
    """
    if ctx.authorized(alpha):
        return True, None
    base = f_level(alpha, M.terms, ctx)
    start = analyze_knowledge(M.terms, ctx)
    for m in sorted(start, key=_order):
        if _violates(alpha, m, base, ctx):
            return False, m
    if depth == 0:
        return True, None

    keys = known_keys(start)
    strong = [k for k in keys
              if (inv := ctx.inverse_of(k)) is not None
              and ctx.level_of(inv).geq(strength_level(alpha, ctx))]
    # per nesting level: (alpha occurs, identities) -> smallest term
    reps: list[dict[tuple[bool, frozenset[str]], Term]] = [{} for _ in range(depth)]

    def offer(n: int, t: Term) -> None:
        sig = (occurs(alpha, t), _identities(t))
        table = reps[n]
        if sig not in table or _order(t) < _order(table[sig]):
            table[sig] = t

    for n, bucket in enumerate(_by_nesting(start, depth - 1)):
        for t in bucket:
            offer(n, t)
    for n in range(1, depth):
        top = list(reps[n - 1].values())
        below = [t for level in reps[:n] for t in level.values()]
        for a in top:
            for k in keys:
                offer(n, Enc(a, k))
            for b in below:
                offer(n, Concat(a, b))
                offer(n, Concat(b, a))

    payloads = [t for level in reps for t in level.values() if occurs(alpha, t)]
    for c in sorted((Enc(p, k) for p in payloads for k in strong), key=_order):
        if _violates(alpha, c, base, ctx):
            return False, c
    return True, None


def check_full_invariance_naive(ctx: VerificationContext, M: KnowledgeSet, alpha: Atom,
                                depth: int) -> tuple[bool, Term | None]:
    """Same check by enumerating the whole closure.  Only usable on small inputs."""
    if ctx.authorized(alpha):
        return True, None
    base = f_level(alpha, M.terms, ctx)
    for m in sorted(derive_closure(M, depth), key=_order):
        if _violates(alpha, m, base, ctx):
            return False, m
    return True, None


# --------------------------------------------------------------- well-formedness

Sample = tuple[Atom | Variable, list[Term], list[Term]]


def well_formed_violation(ctx: VerificationContext, sample: Sample,
                          derivative: bool = False) -> str | None:
    """Name of the first law broken by ``sample``, or None."""
    fn = f_prime if derivative else f_level
    alpha, M1, M2 = sample
    if fn(alpha, [alpha], ctx) != ctx.bottom:
        return "in clear is ⊥"
    if fn(alpha, M1 + M2, ctx) != fn(alpha, M1, ctx).meet(fn(alpha, M2, ctx)):
        return "union is meet"
    for M in (M1, M2):
        if not any(occurs(alpha, m) for m in M) and not fn(alpha, M, ctx).is_top:
            return "absent is ⊤"
    return None


def check_well_formed(ctx: VerificationContext, samples: Iterable[Sample], *,
                      derivative: bool = False) -> tuple[bool, tuple[str, Sample] | None]:
    for s in samples:
        law = well_formed_violation(ctx, s, derivative)
        if law is not None:
            return False, (law, s)
    return True, None


# --------------------------------------------------------------- random inputs

_HONEST = ["A", "B", "C", "D"]


def random_context(rng: random.Random, *, asymmetric: bool = True) -> VerificationContext:
    """A small random context: public identities, secrets, shared and key-pair keys.

    Secrets are mostly readable by honest agents only; one in ten also lets
    the intruder in, which exercises the authorization escape.  The intruder
    ``I`` knows every identity, every public key, every shared key it is a
    reader of and its own private key.
    """
    honest = _HONEST[:rng.choice([2, 3, 4])]
    agents = frozenset(honest + ["I"])
    pool = sorted(agents)

    def readers(among: list[str], lo: int, hi: int) -> SecurityLevel:
        return SecurityLevel(frozenset(rng.sample(among, rng.randint(lo, min(hi, len(among))))))

    levels: dict[str, SecurityLevel] = {a: SecurityLevel(agents) for a in agents}
    inverse: dict[str, str] = {}
    for name in ("s0", "s1", "n0"):
        levels[name] = readers(pool if rng.random() < 0.1 else honest, 1, 3)
    for i in range(rng.randint(1, 3)):
        k = f"k{i}"
        inverse[k] = k
        levels[k] = readers(pool, 1, 3)
    if asymmetric:
        for i in range(rng.randint(1, 2)):
            k, kinv = f"pk{i}", f"pk{i}_inv"
            inverse[k], inverse[kinv] = kinv, k
            levels[k] = SecurityLevel(agents)
            levels[kinv] = SecurityLevel(frozenset([rng.choice(pool)]))
    knows = {Atom(a, Kind.IDENTITY) for a in agents}
    for k in inverse:
        if "I" in levels[k].readers:
            knows.add(Atom(k, Kind.KEY))
    return VerificationContext(agents, "I", inverse, levels, frozenset(knows))


def context_atoms(ctx: VerificationContext) -> tuple[list[Atom], list[Atom]]:
    """(non-key atoms, key atoms) of a context built by :func:`random_context`."""
    plain = [Atom(a, Kind.IDENTITY) for a in sorted(ctx.agents)]
    plain += [Atom("s0", Kind.DATA), Atom("s1", Kind.DATA), Atom("n0", Kind.NONCE)]
    keys = [Atom(k, Kind.KEY) for k in sorted(ctx.inverse)]
    return plain, keys


def random_term(rng: random.Random, ctx: VerificationContext, depth: int,
                variables: tuple[str, ...] = ()) -> Term:
    plain, keys = context_atoms(ctx)
    leaves: list[Term] = list(plain) + [Variable(v) for v in variables]

    def build(d: int) -> Term:
        if d == 0 or rng.random() < 0.3:
            return rng.choice(leaves)
        if rng.random() < 0.5:
            return Concat(build(d - 1), build(d - 1))
        if variables and rng.random() < 0.1:
            return Enc(build(d - 1), Variable(rng.choice(variables)))
        return Enc(build(d - 1), rng.choice(keys))

    return build(depth)


def random_samples(rng: random.Random, ctx: VerificationContext, n: int, depth: int = 4,
                   variables: tuple[str, ...] = ()) -> Iterator[Sample]:
    plain, _ = context_atoms(ctx)
    subjects: list[Atom | Variable] = list(plain) + [Variable(v) for v in variables]
    for _ in range(n):
        alpha = rng.choice(subjects)
        M1 = [random_term(rng, ctx, depth, variables) for _ in range(rng.randint(0, 3))]
        M2 = [random_term(rng, ctx, depth, variables) for _ in range(rng.randint(0, 3))]
        yield alpha, M1, M2


def random_knowledge(rng: random.Random, ctx: VerificationContext, alpha: Atom,
                     depth: int = 2, max_terms: int = 3) -> KnowledgeSet:
    """A few random ground messages; the first one hides ``alpha`` under a key.

    The hiding key is strong for ``alpha`` three times out of four when the
    context has one, otherwise ``alpha`` mostly ends up public from the start.
    """
    _, keys = context_atoms(ctx)
    strong = [k for k in keys if ctx.level_of(ctx.inverse_of(k)).geq(ctx.level_of(alpha))]
    inner = random_term(rng, ctx, max(depth - 2, 0))
    payload = rng.choice([alpha, Concat(alpha, inner), Concat(inner, alpha)])
    hide = rng.choice(strong if strong and rng.random() < 0.75 else keys)
    terms = [Enc(payload, hide)]
    terms += [random_term(rng, ctx, depth) for _ in range(rng.randint(0, max_terms - 1))]
    return KnowledgeSet(frozenset(terms), ctx)


@dataclass(frozen=True)
class SweepResult:
    checked: int
    witnesses: tuple[tuple[int, Atom, KnowledgeSet, Term], ...]

    @property
    def holds(self) -> bool:
        return not self.witnesses


def invariance_sweep(seed: int, n: int, depth: int = 3, *, asymmetric: bool = True,
                     max_witnesses: int | None = None) -> SweepResult:
    """Full invariance over ``n`` seeded random (context, knowledge, alpha) triples."""
    rng = random.Random(seed)
    witnesses = []
    for i in range(n):
        ctx = random_context(rng, asymmetric=asymmetric)
        alpha = rng.choice([Atom("s0", Kind.DATA), Atom("s1", Kind.DATA), Atom("n0", Kind.NONCE)])
        M = random_knowledge(rng, ctx, alpha)
        ok, w = check_full_invariance(ctx, M, alpha, depth)
        if not ok:
            witnesses.append((i, alpha, M, w))
            if max_witnesses is not None and len(witnesses) >= max_witnesses:
                return SweepResult(i + 1, tuple(witnesses))
    return SweepResult(n, tuple(witnesses))


# --------------------------------------------------------------- per protocol

@dataclass(frozen=True)
class PropertyResult:
    name: str
    ok: bool
    detail: str

    def __str__(self) -> str:
        return f"{self.name}: {'pass' if self.ok else 'FAIL'} ({self.detail})"


def protocol_reliability(steps_messages: list[Term], role_messages: list[Term],
                         ctx: VerificationContext, depth: int = 3, samples: int = 200,
                         seed: int = 0) -> list[PropertyResult]:
    """Bounded reliability checks on the messages of one protocol.

    Well-formedness is sampled over subterms of the protocol's own messages
    (ground ones for F, role messages with variables for F').  Full
    invariance takes the narrated messages as the intruder's extra knowledge
    and checks every secret atom in them.
    """
    rng = random.Random(seed)
    out = []
    for label, msgs, derivative in (("F", steps_messages, False), ("F'", role_messages, True)):
        pool = sorted({s for m in msgs for s in subterms(m)}, key=_order)
        subjects = sorted({s for s in pool if isinstance(s, (Atom, Variable))}, key=_order)
        if not pool:
            continue

        def draw() -> Iterator[Sample]:
            for _ in range(samples):
                yield (rng.choice(subjects), rng.sample(pool, rng.randint(0, min(3, len(pool)))),
                       rng.sample(pool, rng.randint(0, min(3, len(pool)))))

        ok, bad = check_well_formed(ctx, draw(), derivative=derivative)
        detail = f"{samples} samples" if ok else f"law '{bad[0]}' broken for {bad[1][0]}"
        out.append(PropertyResult(f"well-formed {label}", ok, detail))

    M = KnowledgeSet(frozenset(steps_messages), ctx)
    secrets = sorted({a for a in atoms_of(steps_messages)
                      if a.kind is not Kind.KEY and ctx.level_of(a) != ctx.bottom}, key=str)
    for alpha in secrets:
        ok, w = check_full_invariance(ctx, M, alpha, depth)
        detail = f"depth {depth}" if ok else f"depth {depth}, intruder derives {w}"
        out.append(PropertyResult(f"full invariance for {alpha}", ok, detail))
    return out
