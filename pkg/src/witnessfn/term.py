"""Message terms, substitutions and syntactic unification.

Messages are built from atoms (identities, nonces, keys, plain data),
variables, binary concatenation ``a.b`` and encryption ``{m}_k``.  There is
no equational theory: two terms are equal only if they are structurally
equal.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Union


class Kind(str, enum.Enum):
    IDENTITY = "identity"
    NONCE = "nonce"
    KEY = "key"
    DATA = "data"


class _Node:
    # Terms are hashed a lot (closures, memo tables); cache the hash.
    __slots__ = ()

    def __hash__(self) -> int:
        return self._h  # type: ignore[attr-defined]

    def __repr__(self) -> str:
        return f"<{self}>"


@dataclass(frozen=True, eq=True, repr=False)
class Atom(_Node):
    name: str
    kind: Kind = Kind.DATA
    session: str | None = None
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.session is not None and self.kind is not Kind.NONCE:
            raise ValueError(f"only nonces carry a session index, not {self.name} ({self.kind.value})")
        object.__setattr__(self, "_h", hash(("a", self.name, self.kind, self.session)))

    __hash__ = _Node.__hash__

    def __str__(self) -> str:
        return self.name if self.session is None else f"{self.name}^{self.session}"


@dataclass(frozen=True, eq=True, repr=False)
class Variable(_Node):
    name: str
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_h", hash(("v", self.name)))

    __hash__ = _Node.__hash__

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, eq=True, repr=False)
class Concat(_Node):
    left: Term
    right: Term
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_h", hash(("c", self.left, self.right)))

    __hash__ = _Node.__hash__

    def __str__(self) -> str:
        left = f"({self.left})" if isinstance(self.left, Concat) else str(self.left)
        return f"{left}.{self.right}"


@dataclass(frozen=True, eq=True, repr=False)
class Enc(_Node):
    payload: Term
    key: Term
    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not (isinstance(self.key, Variable)
                or (isinstance(self.key, Atom) and self.key.kind is Kind.KEY)):
            raise ValueError(f"encryption key must be a key atom or a variable, got {self.key}")
        object.__setattr__(self, "_h", hash(("e", self.payload, self.key)))

    __hash__ = _Node.__hash__

    def __str__(self) -> str:
        return f"{{{self.payload}}}_{self.key}"


@dataclass(frozen=True, eq=True, repr=False)
class Empty(_Node):
    """What is left of a message once every variable in it has been erased."""

    _h: int = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_h", hash("empty"))

    __hash__ = _Node.__hash__

    def __str__(self) -> str:
        return "□"


Term = Union[Atom, Variable, Concat, Enc, Empty]
EMPTY = Empty()


def concat(*parts: Term) -> Term:
    """Right-associated concatenation: ``concat(a, b, c) == a.(b.c)``."""
    if not parts:
        raise ValueError("concat needs at least one part")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Concat(p, out)
    return out


def identity(name: str) -> Atom:
    return Atom(name, Kind.IDENTITY)


def nonce(name: str, session: str | None = None) -> Atom:
    return Atom(name, Kind.NONCE, session)


def key(name: str) -> Atom:
    return Atom(name, Kind.KEY)


# ---------------------------------------------------------------- traversal

def subterms(m: Term) -> Iterator[Term]:
    """Pre-order walk over ``m`` including keys of encryptions."""
    stack = [m]
    while stack:
        t = stack.pop()
        yield t
        if isinstance(t, Concat):
            stack.append(t.right)
            stack.append(t.left)
        elif isinstance(t, Enc):
            stack.append(t.key)
            stack.append(t.payload)


def atoms_of(m: Term | Iterable[Term]) -> frozenset[Atom]:
    terms = [m] if isinstance(m, _Node) else m
    return frozenset(t for x in terms for t in subterms(x) if isinstance(t, Atom))


def atom_list(m: Term) -> list[Atom]:
    """Atoms of ``m`` in order of first occurrence."""
    return list(dict.fromkeys(t for t in subterms(m) if isinstance(t, Atom)))


def variables_of(m: Term | Iterable[Term]) -> list[Variable]:
    """Variables in order of first occurrence."""
    terms = [m] if isinstance(m, _Node) else m
    return list(dict.fromkeys(t for x in terms for t in subterms(x) if isinstance(t, Variable)))


def is_ground(m: Term) -> bool:
    return not any(isinstance(t, Variable) for t in subterms(m))


def occurs(alpha: Atom | Variable, m: Term) -> bool:
    return any(t == alpha for t in subterms(m))


def size(m: Term) -> int:
    return sum(1 for _ in subterms(m))


def nesting(m: Term) -> int:
    if isinstance(m, Concat):
        return 1 + max(nesting(m.left), nesting(m.right))
    if isinstance(m, Enc):
        return 1 + max(nesting(m.payload), nesting(m.key))
    return 0


# ------------------------------------------------------------- substitution

@dataclass(frozen=True)
class Substitution:
    """Variable bindings plus session-index renamings.

    Session renamings only arise from unification with ``sessions=True``,
    where the session index of a nonce behaves like a variable ranging over
    session symbols.
    """

    bindings: Mapping[str, Term] = field(default_factory=dict)
    sessions: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        bound = set(self.bindings)
        for name, value in self.bindings.items():
            clash = {v.name for v in variables_of(value)} & bound
            if clash:
                # covers the occurs check (name in clash) and non-idempotent chains
                raise ValueError(f"binding {name} -> {value} mentions bound variable(s) {sorted(clash)}")
        if set(self.sessions.values()) & set(self.sessions):
            raise ValueError("session renaming is not idempotent")

    def __call__(self, m: Term) -> Term:
        return self.apply(m)

    def apply(self, m: Term) -> Term:
        if not self.bindings and not self.sessions:
            return m
        return _apply(self, m)

    def __bool__(self) -> bool:
        return bool(self.bindings or self.sessions)

    def __str__(self) -> str:
        parts = [f"{k}↦{self.bindings[k]}" for k in sorted(self.bindings)]
        parts += [f"^{k}↦^{self.sessions[k]}" for k in sorted(self.sessions)]
        return "[" + ", ".join(parts) + "]"


def _apply(s: Substitution, m: Term) -> Term:
    if isinstance(m, Variable):
        return s.bindings.get(m.name, m)
    if isinstance(m, Atom):
        if m.session is not None and m.session in s.sessions:
            return Atom(m.name, m.kind, s.sessions[m.session])
        return m
    if isinstance(m, Concat):
        return Concat(_apply(s, m.left), _apply(s, m.right))
    if isinstance(m, Enc):
        return Enc(_apply(s, m.payload), _apply(s, m.key))
    return m


def apply(s: Substitution, m: Term) -> Term:
    return s.apply(m)


class NotUnifiable(Exception):
    pass


def unify(t1: Term, t2: Term, *, sessions: bool = False) -> Substitution:
    """Most general unifier of ``t1`` and ``t2``.

    When both sides are variables the left one is bound, so unifying a
    renamed pattern (left) against a message (right) keeps the message's own
    variable names.  With ``sessions=True`` the session indices of nonces are
    unified like variables; otherwise they must match exactly.

    Raises :class:`NotUnifiable` on a constructor clash, an occurs-check
    failure, or when a variable in key position would receive a non-key.
    """
    binds: dict[str, Term] = {}
    sess: dict[str, str] = {}

    def walk(t: Term) -> Term:
        while isinstance(t, Variable) and t.name in binds:
            t = binds[t.name]
        return t

    def find(s: str) -> str:
        while s in sess:
            s = sess[s]
        return s

    def occurs_in(name: str, t: Term) -> bool:
        stack = [t]
        while stack:
            u = walk(stack.pop())
            if isinstance(u, Variable):
                if u.name == name:
                    return True
            elif isinstance(u, Concat):
                stack += (u.left, u.right)
            elif isinstance(u, Enc):
                stack += (u.payload, u.key)
        return False

    work = [(t1, t2)]
    while work:
        a, b = work.pop()
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if isinstance(a, Variable) or isinstance(b, Variable):
            if isinstance(a, Variable) and isinstance(b, Variable) and a.name == b.name:
                continue
            var, other = (a, b) if isinstance(a, Variable) else (b, a)
            if occurs_in(var.name, other):
                raise NotUnifiable(f"{var} occurs in {other}")
            binds[var.name] = other
        elif isinstance(a, Atom) and isinstance(b, Atom):
            if a.name != b.name or a.kind is not b.kind:
                raise NotUnifiable(f"{a} / {b}")
            if a.session == b.session:
                continue
            if not sessions or a.session is None or b.session is None:
                raise NotUnifiable(f"{a} / {b}")
            sa, sb = find(a.session), find(b.session)
            if sa != sb:
                sess[sa] = sb
        elif isinstance(a, Concat) and isinstance(b, Concat):
            work.append((a.right, b.right))
            work.append((a.left, b.left))
        elif isinstance(a, Enc) and isinstance(b, Enc):
            work.append((a.key, b.key))
            work.append((a.payload, b.payload))
        elif isinstance(a, Empty) and isinstance(b, Empty):
            continue
        else:
            raise NotUnifiable(f"{a} / {b}")

    flat_sess = {s: find(s) for s in sess}
    session_only = Substitution({}, flat_sess)

    def resolve(t: Term) -> Term:
        t = walk(t)
        if isinstance(t, Concat):
            return Concat(resolve(t.left), resolve(t.right))
        if isinstance(t, Enc):
            return Enc(resolve(t.payload), resolve(t.key))
        return session_only.apply(t)

    try:
        sigma = Substitution({name: resolve(Variable(name)) for name in binds}, flat_sess)
        # a variable in key position bound to a non-key is a sort clash
        sigma.apply(t1)
        sigma.apply(t2)
    except ValueError as e:
        raise NotUnifiable(f"ill-sorted unifier: {e}") from None
    return sigma


def unifiable(t1: Term, t2: Term, *, sessions: bool = False) -> Substitution | None:
    try:
        return unify(t1, t2, sessions=sessions)
    except NotUnifiable:
        return None


# ---------------------------------------------------------------- renaming

def _sessions_of(m: Term) -> list[str]:
    return list(dict.fromkeys(t.session for t in subterms(m)
                              if isinstance(t, Atom) and t.session is not None))


def rename_apart(m: Term, avoid: Term) -> Term:
    """Copy of ``m`` whose variables and session indices do not occur in ``avoid``."""
    taken = {v.name for v in variables_of(avoid)} | {v.name for v in variables_of(m)}
    taken_s = set(_sessions_of(avoid)) | set(_sessions_of(m))
    suffix = "'"
    while any(v.name + suffix in taken for v in variables_of(m)) or \
            any(s + suffix in taken_s for s in _sessions_of(m)):
        suffix += "'"
    return _rename(m, {v.name: v.name + suffix for v in variables_of(m)},
                   {s: s + suffix for s in _sessions_of(m)})


def _rename(m: Term, vmap: Mapping[str, str], smap: Mapping[str, str]) -> Term:
    if isinstance(m, Variable):
        return Variable(vmap.get(m.name, m.name))
    if isinstance(m, Atom):
        if m.session is None:
            return m
        return Atom(m.name, m.kind, smap.get(m.session, m.session))
    if isinstance(m, Concat):
        return Concat(_rename(m.left, vmap, smap), _rename(m.right, vmap, smap))
    if isinstance(m, Enc):
        return Enc(_rename(m.payload, vmap, smap), _rename(m.key, vmap, smap))
    return m


def canonical(*terms: Term) -> tuple[Term, ...]:
    """Rename variables and sessions by first occurrence across ``terms``.

    Two term sequences are equal up to renaming iff their canonical forms
    are equal.
    """
    vmap: dict[str, str] = {}
    smap: dict[str, str] = {}
    for m in terms:
        for v in variables_of(m):
            vmap.setdefault(v.name, f"_v{len(vmap)}")
        for s in _sessions_of(m):
            smap.setdefault(s, f"_s{len(smap)}")
    return tuple(_rename(m, vmap, smap) for m in terms)


def same_up_to_renaming(a: Term, b: Term) -> bool:
    return canonical(a) == canonical(b)


def encryption_patterns(terms: Iterable[Term]) -> list[Term]:
    """Every encryption subterm of ``terms``, one representative per class.

    Classes are taken up to renaming of variables and session indices.
    Representatives keep their original names and appear in pre-order of
    first occurrence.
    """
    if isinstance(terms, (set, frozenset)):
        terms = sorted(terms, key=str)
    seen: dict[tuple[Term, ...], Term] = {}
    for m in terms:
        for t in subterms(m):
            if isinstance(t, Enc):
                seen.setdefault(canonical(t), t)
    return list(seen.values())


# ------------------------------------------------------------------ parsing

class TermSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(message)
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(?P<id>[A-Za-z0-9][A-Za-z0-9_]*)|(?P<sym>}_|[{}().^]))")

# resolve(name) -> Kind for atoms, None for variables; raises KeyError if unknown
Resolver = Callable[[str], Union[Kind, None]]


def parse_term(text: str, resolve: Resolver) -> Term:
    """Parse concrete message syntax such as ``{Na^i . A . B}_kb``.

    ``.`` is right-associative; parentheses group; the key after ``}_`` is an
    identifier, optionally wrapped in braces.
    """
    toks: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        mt = _TOKEN.match(text, pos)
        if not mt:
            raise TermSyntaxError(f"unexpected character {text[pos:].lstrip()[0]!r}",
                                  len(text) - len(text[pos:].lstrip()))
        kind = "id" if mt.group("id") else "sym"
        toks.append((kind, mt.group(kind), mt.start(kind)))
        pos = mt.end()
    toks.append(("eof", "", len(text)))
    i = 0

    def peek() -> tuple[str, str, int]:
        return toks[i]

    def take(value: str | None = None, kind: str | None = None) -> tuple[str, str, int]:
        nonlocal i
        tok = toks[i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value or kind
            got = tok[1] or "end of message"
            raise TermSyntaxError(f"expected {want!r}, got {got!r}", tok[2])
        i += 1
        return tok

    def atom_or_var(tok: tuple[str, str, int], session: str | None) -> Term:
        try:
            kind = resolve(tok[1])
        except KeyError:
            raise TermSyntaxError(f"undeclared name {tok[1]!r}", tok[2]) from None
        if kind is None:
            if session is not None:
                raise TermSyntaxError(f"variable {tok[1]} cannot carry a session index", tok[2])
            return Variable(tok[1])
        if session is not None and kind is not Kind.NONCE:
            raise TermSyntaxError(f"{tok[1]} is a {kind.value}, only nonces take a session index", tok[2])
        return Atom(tok[1], kind, session)

    def message() -> Term:
        left = primary()
        if peek()[1] == ".":
            take(".")
            return Concat(left, message())
        return left

    def primary() -> Term:
        tok = peek()
        if tok[1] == "{":
            take("{")
            payload = message()
            take("}_")
            if peek()[1] == "{":
                take("{")
                k = take(kind="id")
                take("}")
            else:
                k = take(kind="id")
            key_term = atom_or_var(k, None)
            if isinstance(key_term, Atom) and key_term.kind is not Kind.KEY:
                raise TermSyntaxError(f"{k[1]} is not a key", k[2])
            return Enc(payload, key_term)
        if tok[1] == "(":
            take("(")
            inner = message()
            take(")")
            return inner
        name = take(kind="id")
        session = None
        if peek()[1] == "^":
            take("^")
            session = take(kind="id")[1]
        return atom_or_var(name, session)

    if peek()[0] == "eof":
        raise TermSyntaxError("empty message", 0)
    out = message()
    if peek()[0] != "eof":
        raise TermSyntaxError(f"unexpected {peek()[1]!r}", peek()[2])
    return out
