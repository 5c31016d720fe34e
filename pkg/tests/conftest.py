import pytest

from witnessfn.context import SecurityLevel, VerificationContext
from witnessfn.specfile import bundled_names, bundled_spec, parse_spec
from witnessfn.term import Kind, parse_term


def load(name):
    return parse_spec(bundled_spec(name))


def lv(*names):
    return SecurityLevel(frozenset(names))


def term_in(ctx, text, extra=None):
    """Parse ``text`` resolving names against ``ctx`` (plus ``extra`` kinds)."""
    kinds = dict(extra or {})

    def resolve(name):
        if name in kinds:
            return kinds[name]
        if name in ctx.variables:
            return None
        if name in ctx.agents:
            return Kind.IDENTITY
        if name in ctx.inverse:
            return Kind.KEY
        raise KeyError(name)

    return parse_term(text, resolve)


TAGGED_SPECS = ["needham_schroeder_tagged", "symmetric_single", "symmetric_handshake",
                "nsl_variant", "tag_inserted"]


@pytest.fixture
def ns():
    return load("needham_schroeder_tagged")


@pytest.fixture
def example1():
    """alpha at {A,B,S}; shared keys kac, kab, kas."""
    ctx = VerificationContext(
        agents=frozenset("ABCDS") | {"I"},
        intruder="I",
        inverse={"kac": "kac", "kab": "kab", "kas": "kas"},
        assigned_level={"alpha": lv("A", "B", "S"), "kac": lv("A", "C"),
                        "kab": lv("A", "B"), "kas": lv("A", "S")},
    )
    return ctx


@pytest.fixture(params=bundled_names())
def bundled(request):
    return request.param, load(request.param)
