"""JSON and text renderings of an analysis report.

Terms are written in concrete syntax and a ``symbols`` table records the
kind of every name, so a report can be read back without the protocol file.
Output is deterministic: lists keep report order and levels are sorted.
"""

from __future__ import annotations

import json
from typing import Any

from .analysis import AnalysisReport, AtomVerdict, Conclusion, Mode, Skipped
from .context import SecurityLevel
from .roles import Direction
from .tagging import Finding, TaggingReport, Verdict
from .term import Atom, Kind, Term, Variable, parse_term, subterms

SCHEMA = "witnessfn-report/1"
_VAR = "var"


def _level(lvl: SecurityLevel) -> list[str]:
    return lvl.sorted()


def _terms(report: AnalysisReport) -> list[Term]:
    out: list[Term] = []
    for f in report.tagging.findings:
        out += [f.pattern, *f.origins]
    for v in report.verdicts:
        out.append(v.alpha)
    out += [s.atom for s in report.skipped]
    return out


def _symbols(report: AnalysisReport) -> dict[str, str]:
    table: dict[str, str] = {}
    for t in _terms(report):
        for s in subterms(t):
            if isinstance(s, Atom):
                table[s.name] = s.kind.value
            elif isinstance(s, Variable):
                table[s.name] = _VAR
    return {k: table[k] for k in sorted(table)}


def to_dict(report: AnalysisReport) -> dict[str, Any]:
    return {
        "schema": SCHEMA,
        "protocol": report.protocol,
        "mode": report.mode.value,
        "agents": list(report.agents),
        "tagging": {
            "tagged": report.tagging.tagged,
            "findings": [
                {
                    "role": f.role,
                    "side": f.side.value,
                    "pattern": str(f.pattern),
                    "origins": [str(o) for o in f.origins],
                    "verdict": f.verdict.value,
                }
                for f in report.tagging.findings
            ],
        },
        "verdicts": [
            {
                "role": v.role,
                "step": v.step,
                "alpha": str(v.alpha),
                "lhs": _level(v.lhs),
                "alpha_level": _level(v.alpha_level),
                "rhs_recv": _level(v.rhs_recv),
                "rhs": _level(v.rhs),
                "pass": v.passed,
                "derivation": list(v.derivation),
            }
            for v in report.verdicts
        ],
        "conclusion": report.conclusion.value,
        "warnings": list(report.warnings),
        "skipped": [
            {"role": s.role, "step": s.step, "atom": str(s.atom), "reason": s.reason}
            for s in report.skipped
        ],
        "symbols": _symbols(report),
    }


def from_dict(data: dict[str, Any]) -> AnalysisReport:
    symbols = data["symbols"]

    def resolve(name: str) -> Kind | None:
        kind = symbols[name]
        return None if kind == _VAR else Kind(kind)

    def term(text: str) -> Term:
        return parse_term(text, resolve)

    def lvl(names: list[str]) -> SecurityLevel:
        return SecurityLevel(frozenset(names))

    findings = tuple(
        Finding(f["role"], Direction(f["side"]), term(f["pattern"]),
                tuple(term(o) for o in f["origins"]), Verdict(f["verdict"]))
        for f in data["tagging"]["findings"]
    )
    verdicts = tuple(
        AtomVerdict(v["role"], v["step"], term(v["alpha"]), lvl(v["lhs"]), lvl(v["alpha_level"]),
                    lvl(v["rhs_recv"]), v["pass"], tuple(v["derivation"]))
        for v in data["verdicts"]
    )
    skipped = tuple(Skipped(s["role"], s["step"], term(s["atom"]), s["reason"])
                    for s in data["skipped"])
    return AnalysisReport(
        protocol=data["protocol"],
        mode=Mode(data["mode"]),
        tagging=TaggingReport(findings),
        verdicts=verdicts,
        conclusion=Conclusion(data["conclusion"]),
        warnings=tuple(data["warnings"]),
        skipped=skipped,
        agents=tuple(data["agents"]),
    )


def to_json(report: AnalysisReport, extra: dict[str, Any] | None = None) -> str:
    data = to_dict(report)
    if extra:
        data.update(extra)
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def from_json(text: str) -> AnalysisReport:
    return from_dict(json.loads(text))


_CONCLUSION_TEXT = {
    Conclusion.CORRECT: "correct for secrecy",
    Conclusion.NOT_CERTIFIED: "not certified (the sufficient condition fails; this is not an attack)",
    Conclusion.NOT_TAGGED: "not tagged (the tagged procedure does not apply; try --mode general)",
}


def render_text(report: AnalysisReport, reliability: list[str] | None = None) -> str:
    lines = [f"protocol {report.protocol}  mode {report.mode.value}"]
    if report.agents:
        lines.append(f"agents {{{','.join(report.agents)}}}")
    for w in report.warnings:
        lines.append(f"warning: {w}")

    lines += ["", "Tagging verification"]
    for f in report.tagging.findings:
        origins = ", ".join(map(str, f.origins)) or "none"
        lines.append(f"  {f.role} {f.side.value} {f.pattern}  <-  {origins}  [{f.verdict.value}]")
    lines.append(f"  tagged: {'yes' if report.tagging.tagged else 'no'}")

    current = None
    n = 0
    for v in report.verdicts:
        if (v.role, v.step) != current:
            current = (v.role, v.step)
            lines += ["", f"Rule {v.step} of role {v.role}"]
            n = 0
        n += 1
        lines.append(f"  {n}- for {v.alpha}:")
        lines += [f"     {d}" for d in v.derivation]

    if report.skipped:
        lines += ["", "Skipped atoms"]
        lines += [f"  {s.step} {s.atom}: {s.reason}" for s in report.skipped]

    if report.verdicts:
        rows = [("role", "step", "alpha", "lhs", "⌈alpha⌉", "F'(alpha,R-)", "result")]
        rows += [(v.role, v.step, str(v.alpha), str(v.lhs), str(v.alpha_level), str(v.rhs_recv),
                  "pass" if v.passed else "FAIL") for v in report.verdicts]
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines += ["", "Summary"]
        for r in rows:
            lines.append("  " + "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())

    if reliability is not None:
        lines += ["", "Reliability checks (bounded sampling, not a proof)"]
        lines += [f"  {r}" for r in reliability]

    lines += ["", f"conclusion: {report.conclusion.value} - {_CONCLUSION_TEXT[report.conclusion]}"]
    return "\n".join(lines) + "\n"
