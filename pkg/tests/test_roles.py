import pytest

from conftest import load
from witnessfn.roles import (
    Direction, MalformedProtocol, extract_generalized_roles, generated_messages, principals,
    rule_steps, unbound_sends,
)
from witnessfn.specfile import parse_spec


class TestExtraction:
    def test_table_one_matches_declared_roles(self, ns):
        proto, ctx = ns
        extracted = extract_generalized_roles(proto, ctx, use_declared=False)
        assert [r.principal for r in extracted] == ["A", "B"]
        for got, want in zip(extracted, proto.declared_roles):
            assert got.same_up_to_renaming(want)

    def test_declared_roles_preferred(self, ns):
        proto, ctx = ns
        assert extract_generalized_roles(proto, ctx) == list(proto.declared_roles)

    def test_sessions_and_variables(self, ns):
        proto, ctx = ns
        a, b = extract_generalized_roles(proto, ctx, use_declared=False)
        assert (a.session, b.session) == ("i", "j")
        assert [str(e) for e in a.events][0] == "send {Na^i.A.B}_kb"
        # fresh variable names avoid the declared X and Y
        assert str(b.events[0]) == "recv {W.A.B}_kb"

    @pytest.mark.parametrize("name", ["symmetric_single", "symmetric_handshake", "nsl_variant"])
    def test_extracted_roles_are_well_formed(self, name):
        proto, ctx = load(name)
        for r in extract_generalized_roles(proto, ctx):
            assert unbound_sends(r) == []

    def test_undecryptable_becomes_variable(self):
        proto, ctx = parse_spec("""
agents I A B C
intruder I
key kc inverse kc_inv of C
nonce N
step 1: A -> B : {N}_kc.A
step 2: B -> C : {N}_kc
""")
        a, b, c = extract_generalized_roles(proto, ctx)
        assert str(b.events[0]) == "recv X.A"
        assert str(b.events[1]) == "send X"
        assert str(c.events[0]) == "recv {Y}_kc"

    def test_sending_unknown_nonce_is_malformed(self):
        proto, ctx = parse_spec("""
agents I A B
intruder I
key kb inverse kb_inv of B
key ka inverse ka_inv of A
nonce N M
step 1: A -> B : {N}_kb
step 2: A -> B : {M}_ka
step 3: B -> A : M
""")
        with pytest.raises(MalformedProtocol):
            extract_generalized_roles(proto, ctx)

    def test_encrypting_without_the_key_is_malformed(self):
        proto, ctx = parse_spec("""
agents I A B
intruder I
key kab inverse kab of B I
nonce N
step 1: A -> B : {N}_kab
""")
        with pytest.raises(MalformedProtocol):
            extract_generalized_roles(proto, ctx)


class TestRules:
    def test_table_one_rules(self, ns):
        proto, _ = ns
        a, b = proto.declared_roles
        ra = rule_steps(a)
        assert [r.label for r in ra] == ["S_A^1", "S_A^2"]
        assert ra[0].received == ()
        assert [str(m) for m in ra[1].received] == ["{A.B.Na^i}_ka.{B.A.X}_ka"]
        rb = rule_steps(b)
        assert [r.label for r in rb] == ["S_B"]
        assert str(rb[0].sent) == "{A.B.Y}_ka.{B.A.Nb^j}_ka"

    def test_principals(self, ns):
        assert principals(ns[0]) == ["A", "B"]

    def test_generated_messages(self, ns):
        proto, _ = ns
        gen = [str(m) for m in generated_messages(proto.declared_roles)]
        assert gen == ["{Na^i.A.B}_kb", "{X.B.A.Na^i}_kb", "{A.B.Y}_ka.{B.A.Nb^j}_ka",
                       "{A.B.Y}_ka", "{B.A.Nb^j}_ka"]

    def test_messages_by_direction(self, ns):
        a = ns[0].declared_roles[0]
        assert len(a.messages(Direction.SEND)) == 2
        assert len(a.messages(Direction.RECV)) == 1
