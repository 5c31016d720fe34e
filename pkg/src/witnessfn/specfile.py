"""Reader for protocol specification files.

Line oriented, ``#`` starts a comment::

    protocol ns_tagged
    agents I A B
    intruder I
    key kb inverse kb_inv of B        # readers of the inverse key
    key kab inverse kab of A B        # symmetric key
    nonce Na Nb
    var X Y
    level Na {A B}
    public A B
    intruder-knows I A B kb
    step 1: A -> B : {Na . A . B}_kb
    role A session i: send {Na^i.A.B}_kb ; recv {A.B.Na^i}_ka.{B.A.X}_ka

A role header may also be followed by indented ``send``/``recv`` lines.
Names must be declared before they are used.  ``level`` on a new name
declares it as plain data.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .context import SecurityLevel, VerificationContext
from .roles import Direction, Event, GeneralizedRole, Protocol, Step
from .term import Atom, Kind, Term, TermSyntaxError, is_ground, parse_term


class SpecError(Exception):
    def __init__(self, message: str, line: int = 1, col: int = 1):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class ParseError(SpecError):
    pass


class SemanticError(SpecError):
    pass


_NAME = r"[A-Za-z0-9][A-Za-z0-9_]*"
_STEP = re.compile(rf"step\s+(\d+)\s*:\s*({_NAME})\s*->\s*({_NAME})\s*:")
_ROLE = re.compile(rf"role\s+({_NAME})\s+session\s+({_NAME})\s*:")
_KEY = re.compile(rf"key\s+({_NAME})\s+inverse\s+({_NAME})\s+of\b")
_LEVEL = re.compile(rf"level\s+({_NAME})\s*\{{([^}}]*)\}}\s*$")
_EVENT = re.compile(r"(send|recv)\b")


@dataclass
class _Reader:
    kinds: dict[str, Kind | None] = field(default_factory=dict)
    agents: list[str] = field(default_factory=list)
    intruder: str | None = None
    inverse: dict[str, str] = field(default_factory=dict)
    levels: dict[str, SecurityLevel] = field(default_factory=dict)
    public: list[str] = field(default_factory=list)
    knows: list[str] = field(default_factory=list)
    steps: list[Step] = field(default_factory=list)
    roles: list[GeneralizedRole] = field(default_factory=list)
    name: str = "protocol"
    # (names, line) to check against the agent set once it is complete
    reader_refs: list[tuple[list[str], int]] = field(default_factory=list)

    def declare(self, name: str, kind: Kind | None, line: int, col: int) -> None:
        if name in self.kinds and self.kinds[name] != kind:
            have = self.kinds[name]
            what = "variable" if have is None else have.value
            raise SemanticError(f"{name} already declared as {what}", line, col)
        self.kinds[name] = kind

    def resolve(self, name: str) -> Kind | None:
        return self.kinds[name]

    def term(self, text: str, line: int, col: int) -> Term:
        """Parse a message whose first non-blank character sits at ``col``."""
        try:
            return parse_term(text.lstrip(), self.resolve)
        except TermSyntaxError as e:
            msg = str(e)
            semantic = msg.startswith(("undeclared", "variable ")) or " is a" in msg or "not a key" in msg
            raise (SemanticError if semantic else ParseError)(msg, line, col + e.pos) from None


def _names(rest: str, line: int, col: int) -> list[str]:
    out = rest.split()
    for n in out:
        if not re.fullmatch(_NAME, n):
            raise ParseError(f"bad name {n!r}", line, col + rest.index(n))
    return out


def parse_spec(text: str, name: str | None = None) -> tuple[Protocol, VerificationContext]:
    rd = _Reader()
    role: tuple[str, str, list[Event], int] | None = None

    def close_role() -> None:
        nonlocal role
        if role is not None:
            who, session, events, _ = role
            rd.roles.append(GeneralizedRole(who, session, tuple(events)))
            role = None

    def add_event(chunk: str, line: int, col: int) -> None:
        assert role is not None
        stripped = chunk.strip()
        if not stripped:
            return
        col += len(chunk) - len(chunk.lstrip())
        m = _EVENT.match(stripped)
        if not m:
            raise ParseError("expected 'send' or 'recv'", line, col)
        body = stripped[m.end():]
        direction = Direction.SEND if m.group(1) == "send" else Direction.RECV
        msg_col = col + m.end() + (len(body) - len(body.lstrip()))
        role[2].append(Event(direction, rd.term(body, line, msg_col)))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].rstrip()
        if not content.strip():
            continue
        indent = len(content) - len(content.lstrip())
        stripped = content.strip()
        col0 = indent + 1
        word = stripped.split()[0]

        if role is not None and word in ("send", "recv"):
            for chunk, off in _split_events(stripped):
                add_event(chunk, lineno, col0 + off)
            continue
        close_role()

        rest = stripped[len(word):]
        rest_col = col0 + len(word)
        if word == "protocol":
            parts = _names(rest, lineno, rest_col)
            if len(parts) != 1:
                raise ParseError("expected: protocol <name>", lineno, col0)
            rd.name = parts[0]
        elif word == "agents":
            for n in _names(rest, lineno, rest_col):
                rd.declare(n, Kind.IDENTITY, lineno, col0)
                if n not in rd.agents:
                    rd.agents.append(n)
        elif word == "intruder":
            parts = _names(rest, lineno, rest_col)
            if len(parts) != 1:
                raise ParseError("expected: intruder <name>", lineno, col0)
            if rd.kinds.get(parts[0]) is not Kind.IDENTITY:
                raise SemanticError(f"intruder {parts[0]} is not a declared agent", lineno, col0)
            rd.intruder = parts[0]
        elif word == "key":
            m = _KEY.match(stripped)
            if not m:
                raise ParseError("expected: key <k> inverse <k_inv> of <agents...>", lineno, col0)
            k, kinv = m.group(1), m.group(2)
            readers = _names(stripped[m.end():], lineno, col0 + m.end())
            rd.declare(k, Kind.KEY, lineno, col0)
            rd.declare(kinv, Kind.KEY, lineno, col0)
            if rd.inverse.get(k, kinv) != kinv or rd.inverse.get(kinv, k) != k:
                raise SemanticError(f"conflicting inverse for {k}", lineno, col0)
            rd.inverse[k], rd.inverse[kinv] = kinv, k
            rd.levels[kinv] = SecurityLevel(frozenset(readers))
            rd.reader_refs.append((readers, lineno))
            if k != kinv:
                rd.public.append(k)
        elif word in ("nonce", "data", "var"):
            kind = {"nonce": Kind.NONCE, "data": Kind.DATA, "var": None}[word]
            for n in _names(rest, lineno, rest_col):
                rd.declare(n, kind, lineno, col0)
        elif word == "level":
            m = _LEVEL.match(stripped)
            if not m:
                raise ParseError("expected: level <name> {<agents...>}", lineno, col0)
            target = m.group(1)
            if target not in rd.kinds:
                rd.declare(target, Kind.DATA, lineno, col0)
            readers = _names(m.group(2), lineno, col0 + m.start(2))
            rd.levels[target] = SecurityLevel(frozenset(readers))
            rd.reader_refs.append((readers, lineno))
        elif word == "public":
            for n in _names(rest, lineno, rest_col):
                if n not in rd.kinds:
                    rd.declare(n, Kind.DATA, lineno, col0)
                rd.public.append(n)
        elif word == "intruder-knows":
            for n in _names(rest, lineno, rest_col):
                if n not in rd.kinds:
                    raise SemanticError(f"undeclared name {n!r}", lineno, rest_col + rest.index(n))
                if rd.kinds[n] is None:
                    raise SemanticError(f"{n} is a variable; the intruder knows atoms", lineno, col0)
                rd.knows.append(n)
        elif word == "step":
            m = _STEP.match(stripped)
            if not m:
                raise ParseError("expected: step <n>: <sender> -> <receiver> : <message>", lineno, col0)
            index, sender, receiver = int(m.group(1)), m.group(2), m.group(3)
            for who in (sender, receiver):
                if rd.kinds.get(who) is not Kind.IDENTITY:
                    raise SemanticError(f"{who} is not a declared agent", lineno, col0)
            if sender == receiver:
                raise SemanticError(f"step {index}: {sender} sends to itself", lineno, col0)
            if any(s.index == index for s in rd.steps):
                raise SemanticError(f"duplicate step index {index}", lineno, col0)
            body = stripped[m.end():]
            msg = rd.term(body, lineno, col0 + m.end() + len(body) - len(body.lstrip()))
            if not is_ground(msg):
                raise SemanticError(f"step {index}: protocol steps cannot mention variables", lineno, col0)
            rd.steps.append(Step(index, sender, receiver, msg))
        elif word == "role":
            m = _ROLE.match(stripped)
            if not m:
                raise ParseError("expected: role <agent> session <symbol>:", lineno, col0)
            if rd.kinds.get(m.group(1)) is not Kind.IDENTITY:
                raise SemanticError(f"{m.group(1)} is not a declared agent", lineno, col0)
            role = (m.group(1), m.group(2), [], lineno)
            for chunk, off in _split_events(stripped[m.end():]):
                add_event(chunk, lineno, col0 + m.end() + off)
        else:
            raise ParseError(f"unknown declaration {word!r}", lineno, col0)
    close_role()

    if not rd.steps and not rd.roles:
        raise ParseError("empty specification: no steps or roles", 1, 1)
    return _assemble(rd, name)


def _split_events(text: str) -> list[tuple[str, int]]:
    out, off = [], 0
    for chunk in text.split(";"):
        out.append((chunk, off))
        off += len(chunk) + 1
    return out


def _assemble(rd: _Reader, name: str | None) -> tuple[Protocol, VerificationContext]:
    if not rd.agents:
        raise SemanticError("no agents declared")
    if rd.intruder is None:
        raise SemanticError("no intruder declared")
    agents = frozenset(rd.agents)
    for readers, line in rd.reader_refs:
        stray = [r for r in readers if r not in agents]
        if stray:
            raise SemanticError(f"readers {stray} are not declared agents", line)
    indices = sorted(s.index for s in rd.steps)
    if indices != list(range(1, len(indices) + 1)):
        raise SemanticError(f"step indices must be 1..{len(indices)}, got {indices}")
    levels = dict(rd.levels)
    for n in rd.public:
        levels[n] = SecurityLevel(agents)
    ctx = VerificationContext(
        agents=agents,
        intruder=rd.intruder,
        inverse=dict(rd.inverse),
        assigned_level=levels,
        intruder_knowledge=frozenset(Atom(n, rd.kinds[n]) for n in rd.knows),  # type: ignore[arg-type]
        variables=frozenset(n for n, k in rd.kinds.items() if k is None),
    )
    steps = tuple(sorted(rd.steps, key=lambda s: s.index))
    proto = Protocol(name or rd.name, steps, tuple(rd.roles) if rd.roles else None)
    return proto, ctx


def load_spec(path: str | Path) -> tuple[Protocol, VerificationContext]:
    path = Path(path)
    return parse_spec(path.read_text(encoding="utf-8"))


def bundled_spec(name: str) -> str:
    """Text of a specification shipped with the package (``specs/<name>.spec``)."""
    from importlib import resources
    return resources.files("witnessfn").joinpath("specs", f"{name}.spec").read_text(encoding="utf-8")


def bundled_names() -> list[str]:
    from importlib import resources
    return sorted(p.name[:-5] for p in resources.files("witnessfn").joinpath("specs").iterdir()
                  if p.name.endswith(".spec"))
