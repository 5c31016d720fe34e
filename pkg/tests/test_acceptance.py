"""Acceptance gate.  Each test prints one ``[criterion] PASS|FAIL`` line.

Run with ``pytest -s tests/test_acceptance.py`` (or ``-v``; the lines are
printed with capture disabled either way).
"""

import random
import time

import pytest

import oracle
from conftest import TAGGED_SPECS, load, lv
from witnessfn.analysis import Conclusion, Mode, analyze, analyze_general, analyze_tagged
from witnessfn.cli import run
from witnessfn.context import TOP, PowersetLattice, geq, join, meet
from witnessfn.dolev_yao import (
    KnowledgeSet, check_well_formed, derive_closure, invariance_sweep, random_context,
    random_samples, random_term,
)
from witnessfn.levels import f_level, lower_bound, upper_bound
from witnessfn.report import from_json, to_json
from witnessfn.roles import extract_generalized_roles, generated_messages, rule_steps
from witnessfn.specfile import bundled_names
from witnessfn.tagging import Verdict, check_tagged, recv_findings
from witnessfn.term import Atom, Concat, Enc, Kind, atom_list, variables_of

AB = lv("A", "B")
WELL_FORMED_SAMPLES = 10_000
INVARIANCE_SETS = 1_000
INVARIANCE_DEPTH = 3
PROPERTY_BUDGET_S = 60.0
GOLDEN_BUDGET_S = 1.0

_property_time = {}


@pytest.fixture
def say(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def test_c1_golden_reproduction(say, capsys):
    start = time.perf_counter()
    code = run(["analyze", "builtin:needham_schroeder_tagged", "--mode", "tagged"])
    report = analyze_tagged(*load("needham_schroeder_tagged"))
    elapsed = time.perf_counter() - start
    capsys.readouterr()

    def v(role, step, alpha):
        return report.verdict(role, step, alpha)

    got = {
        "1.1": v("A", "S_A^1", "Na^i").lhs, "1.2": v("A", "S_A^1", "Na^i").rhs_recv,
        "2.1": v("A", "S_A^2", "Na^i").lhs, "2.2": v("A", "S_A^2", "Na^i").rhs_recv,
        "2.3": v("A", "S_A^2", "X").lhs, "2.4": v("A", "S_A^2", "X").rhs_recv,
        "3.1": v("B", "S_B", "Nb^j").lhs, "3.2": v("B", "S_B", "Nb^j").rhs_recv,
        "3.3": v("B", "S_B", "Y").lhs, "3.4": v("B", "S_B", "Y").rhs_recv,
    }
    want = {"1.1": AB, "1.2": TOP, "2.1": AB, "2.2": AB, "2.3": AB, "2.4": AB,
            "3.1": AB, "3.2": TOP, "3.3": AB, "3.4": AB}
    ok = (got == want and report.conclusion is Conclusion.CORRECT and code == 0
          and elapsed < GOLDEN_BUDGET_S)
    say("1", ok, f"10 levels {'match' if got == want else 'DIFFER'}, "
                 f"{report.conclusion.value}, {elapsed:.3f}s")
    assert got == want
    assert report.conclusion is Conclusion.CORRECT and code == 0
    assert elapsed < GOLDEN_BUDGET_S


def test_c2_example_one(say, example1):
    kas, kab, kac = (Atom(k, Kind.KEY) for k in ("kas", "kab", "kac"))
    alpha = Atom("alpha")
    m = Enc(Enc(Concat(Atom("C", Kind.IDENTITY),
                       Enc(Concat(alpha, Atom("D", Kind.IDENTITY)), kas)), kab), kac)
    got = f_level(alpha, m, example1)
    say("2", got == lv("A", "B", "C", "D"), f"F(alpha, {m}) = {got}")
    assert got == lv("A", "B", "C", "D")


def test_c3_tagging(say):
    proto, ctx = load("needham_schroeder_tagged")
    report = check_tagged(extract_generalized_roles(proto, ctx))
    found = recv_findings(report)
    unique = [f for f in found if f.verdict is Verdict.UNIQUE]
    proto, ctx = load("untagged_clash")
    clash = check_tagged(extract_generalized_roles(proto, ctx))
    named = [f for f in clash.problems() if f.verdict is Verdict.AMBIGUOUS
             and {str(o) for o in f.origins} == {"{s.B.Y}_kab", "{s.B.C}_kab"}]
    ok = report.tagged and len(found) == 3 and len(unique) == 3 and not clash.tagged and bool(named)
    say("3", ok, f"Table I tagged={report.tagged} with {len(unique)} unique origins; "
                 f"clash tagged={clash.tagged}, ambiguous over {{s.B.Y}}_kab / {{s.B.C}}_kab")
    assert ok


def test_c4_reduction_equivalence(say):
    names = TAGGED_SPECS
    same = {n: analyze_general(*load(n)).table() == analyze_tagged(*load(n)).table()
            for n in names}
    tagged = all(analyze_tagged(*load(n)).tagging.tagged for n in names)
    ok = all(same.values()) and tagged and len(names) >= 4
    say("4", ok, f"{sum(same.values())}/{len(names)} tagged specs give identical tables")
    assert ok


def test_c5_forced_failures(say, capsys):
    lines = []
    ok = True
    for name, atom in [("needham_schroeder_ki_mutant", "Na^i"),
                       ("needham_schroeder_clear_mutant", "Na^i")]:
        code = run(["analyze", f"builtin:{name}"])
        err = capsys.readouterr().err
        named = f"role A, step S_A^2, atom {atom}" in err
        ok &= code == 1 and named
        lines.append(f"{name} exit {code}")
    proto, ctx = load("needham_schroeder_clear_mutant")
    lhs = analyze(proto, ctx).verdict("A", "S_A^2", "Na^i").lhs
    ok &= lhs == ctx.bottom
    say("5", ok, "; ".join(lines) + f"; in-clear lhs = {lhs}")
    assert ok


def test_c6a_well_formed(say):
    start = time.perf_counter()
    rng = random.Random(2024)
    checked = {"F": 0, "F'": 0}
    failure = None
    for label, derivative, variables in (("F", False, ()), ("F'", True, ("X", "Y"))):
        while checked[label] < WELL_FORMED_SAMPLES and failure is None:
            ctx = random_context(rng)
            batch = list(random_samples(rng, ctx, 100, depth=4, variables=variables))
            ok, bad = check_well_formed(ctx, batch, derivative=derivative)
            checked[label] += len(batch)
            if not ok:
                failure = (label, bad)
    _property_time["6a"] = time.perf_counter() - start
    f_count, fp_count = checked["F"], checked["F'"]
    detail = f"three laws on {f_count} samples for F and {fp_count} for F'"
    if failure is not None:
        detail += f"; broken: {failure}"
    say("6a", failure is None, detail)
    assert failure is None
    assert min(checked.values()) >= WELL_FORMED_SAMPLES


def test_c6b_bound_ordering(say):
    start = time.perf_counter()
    pairs = 0
    bad = []
    for name in bundled_names():
        proto, ctx = load(name)
        roles = extract_generalized_roles(proto, ctx)
        patterns = generated_messages(roles)
        for r in roles:
            for rule in rule_steps(r):
                for alpha in atom_list(rule.sent) + variables_of(rule.sent):
                    pairs += 1
                    up = upper_bound(alpha, rule.sent, ctx)
                    low = lower_bound(alpha, rule.sent, patterns, ctx)
                    if not up.geq(low):
                        bad.append((name, rule.label, str(alpha)))
    _property_time["6b"] = time.perf_counter() - start
    say("6b", not bad, f"upper ⊒ lower on {pairs} (pattern, atom) pairs over "
                       f"{len(bundled_names())} specs" + (f"; violated: {bad}" if bad else ""))
    assert not bad


@pytest.mark.xfail(strict=True, reason=(
    "F is not full-invariant-by-intruder in general: a public key whose private half is "
    "held by a reader of alpha is strong, so the intruder can wrap a ciphertext under it "
    "next to an identity and F reports readers outside F(alpha, M)"))
def test_c6c_full_invariance(say):
    start = time.perf_counter()
    result = invariance_sweep(seed=2024, n=INVARIANCE_SETS, depth=INVARIANCE_DEPTH)
    _property_time["6c"] = time.perf_counter() - start
    detail = f"{result.checked} random knowledge sets at depth {INVARIANCE_DEPTH}, " \
             f"{len(result.witnesses)} witnesses"
    if result.witnesses:
        i, alpha, M, w = result.witnesses[0]
        detail += f"; first: set #{i}, alpha={alpha}, M={sorted(map(str, M.terms))}, derives {w}"
    say("6c", result.holds, detail)
    assert result.checked >= INVARIANCE_SETS
    assert result.holds


def test_c6d_lattice_laws(say):
    start = time.perf_counter()
    elements = PowersetLattice(frozenset("ABCI")).elements()
    broken = []
    for x in elements:
        for y in elements:
            if meet(x, y) != meet(y, x) or join(x, y) != join(y, x):
                broken.append(("commutative", x, y))
            if meet(x, join(x, y)) != x or join(x, meet(x, y)) != x:
                broken.append(("absorption", x, y))
            if geq(x, y) != (meet(x, y) == y):
                broken.append(("order", x, y))
            for z in elements:
                if meet(x, meet(y, z)) != meet(meet(x, y), z):
                    broken.append(("associative", x, y, z))
                if join(x, join(y, z)) != join(join(x, y), z):
                    broken.append(("associative", x, y, z))
                if geq(x, y) and geq(y, z) and not geq(x, z):
                    broken.append(("transitive", x, y, z))
    _property_time["6d"] = time.perf_counter() - start
    say("6d", not broken, f"{len(elements)} levels, all pairs and triples checked")
    assert not broken


def test_c6e_property_runtime(say):
    missing = {"6a", "6b", "6c", "6d"} - set(_property_time)
    total = sum(_property_time.values())
    ok = not missing and total < PROPERTY_BUDGET_S
    say("6e", ok, f"properties took {total:.1f}s (budget {PROPERTY_BUDGET_S:.0f}s)"
                  + (f"; not run: {sorted(missing)}" if missing else ""))
    assert not missing
    assert total < PROPERTY_BUDGET_S


def test_c7_oracles(say):
    rng = random.Random(77)
    sets = 0
    mismatch = []
    while sets < 60:
        ctx = random_context(rng)
        terms = {random_term(rng, ctx, rng.choice([0, 1])) for _ in range(rng.randint(1, 2))}
        depth = rng.choice([0, 1, 2])
        k = KnowledgeSet(frozenset(terms), ctx)
        if depth == 2 and len(derive_closure(k, 1)) > 120:
            depth = 1
        if len(derive_closure(k, depth)) != len(oracle.closure(terms, ctx, depth)):
            mismatch.append((sorted(map(str, terms)), depth))
        sets += 1
    checked = 0
    unequal = []
    for _ in range(300):
        ctx = random_context(rng)
        m = random_term(rng, ctx, 3)
        for alpha in atom_list(m):
            if alpha.kind is Kind.KEY:
                continue
            checked += 1
            if lower_bound(alpha, m, [m], ctx) != f_level(alpha, m, ctx):
                unequal.append((str(alpha), str(m)))
    ok = not mismatch and not unequal
    say("7", ok, f"closure sizes match brute force on {sets} sets; lower bound = F on "
                 f"{checked} ground singleton cases")
    assert not mismatch
    assert not unequal


def test_c8_round_trips(say):
    proto, ctx = load("needham_schroeder_tagged")
    extracted = extract_generalized_roles(proto, ctx, use_declared=False)
    roles_ok = len(extracted) == len(proto.declared_roles) and all(
        got.same_up_to_renaming(want) for got, want in zip(extracted, proto.declared_roles))
    json_ok = True
    for name in bundled_names():
        for mode in Mode:
            report = analyze(*load(name), mode)
            text = to_json(report)
            back = from_json(text)
            json_ok &= back == report and to_json(back) == text
    say("8", roles_ok and json_ok, f"extracted roles = A_G/B_G up to renaming: {roles_ok}; "
                                   f"JSON bit-exact on {len(bundled_names())} specs x 2 modes: {json_ok}")
    assert roles_ok and json_ok
