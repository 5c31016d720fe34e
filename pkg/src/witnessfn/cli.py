"""Command line driver.

Exit status: 0 correct for secrecy, 1 not certified, 2 not tagged,
3 bad input, 4 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .analysis import Conclusion, Mode, analyze
from .context import ContextError
from .dolev_yao import protocol_reliability
from .levels import EmptyUnifiableSet, UndeclaredKey
from .report import render_text, to_json
from .roles import Direction, MalformedProtocol, extract_generalized_roles
from .specfile import SpecError, bundled_names, bundled_spec, parse_spec

EXIT = {Conclusion.CORRECT: 0, Conclusion.NOT_CERTIFIED: 1, Conclusion.NOT_TAGGED: 2}
EXIT_INPUT = 3
EXIT_INTERNAL = 4
BUILTIN = "builtin:"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="witnessfn",
                                 description="Static secrecy analysis with witness-functions.")
    sub = ap.add_subparsers(dest="command", required=True)
    an = sub.add_parser("analyze", help="analyze a protocol specification")
    an.add_argument("file", help=f"spec file, or {BUILTIN}NAME for a bundled one")
    an.add_argument("--mode", choices=["tagged", "general"], default="tagged")
    an.add_argument("--format", choices=["text", "json"], default="text")
    an.add_argument("--check-reliability", action="store_true",
                    help="also run bounded well-formedness and full-invariance checks")
    an.add_argument("--depth", type=int, default=3, help="Dolev-Yao composition depth (default 3)")
    an.add_argument("--out", help="write the report here instead of stdout")
    sub.add_parser("specs", help="list bundled specifications")
    return ap


def _read(source: str) -> tuple[str, str]:
    if source.startswith(BUILTIN):
        name = source[len(BUILTIN):]
        if name not in bundled_names():
            raise FileNotFoundError(f"no bundled spec named {name!r}")
        return bundled_spec(name), name
    path = Path(source)
    return path.read_text(encoding="utf-8"), path.name


def _analyze(args: argparse.Namespace) -> int:
    if args.depth < 0:
        print("error: --depth must be non-negative", file=sys.stderr)
        return EXIT_INPUT
    try:
        text, where = _read(args.file)
        protocol, ctx = parse_spec(text)
        roles = extract_generalized_roles(protocol, ctx)
        mode = Mode.GENERAL if args.mode == "general" else Mode.TAGGED
        report = analyze(protocol, ctx, mode, roles)
        reliability = None
        if args.check_reliability:
            role_msgs = [e.message for r in roles for e in r.events if e.direction is Direction.SEND]
            reliability = [str(r) for r in protocol_reliability(
                [s.message for s in protocol.steps], role_msgs, ctx, depth=args.depth)]
    except SpecError as e:
        print(f"{where}:{e}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, UndeclaredKey, MalformedProtocol, EmptyUnifiableSet, ContextError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    if args.format == "json":
        out = to_json(report, {"reliability": reliability} if reliability is not None else None)
    else:
        out = render_text(report, reliability)
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)
    for v in report.failures():
        print(f"not certified: role {v.role}, step {v.step}, atom {v.alpha}: "
              f"{v.lhs} is not ⊒ {v.rhs}", file=sys.stderr)
    return EXIT[report.conclusion]


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "specs":
            print("\n".join(bundled_names()))
            return 0
        return _analyze(args)
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
