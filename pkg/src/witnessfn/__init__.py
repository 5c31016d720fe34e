"""Secrecy analysis of cryptographic protocols with witness-functions."""

from .analysis import AnalysisReport, AtomVerdict, Conclusion, Mode, analyze, analyze_general, analyze_tagged
from .context import SecurityLevel, VerificationContext, level
from .levels import f_level, f_prime, lower_bound, upper_bound
from .roles import GeneralizedRole, Protocol, extract_generalized_roles
from .specfile import ParseError, SemanticError, SpecError, load_spec, parse_spec
from .tagging import check_tagged
from .term import Atom, Concat, Enc, Kind, Variable, parse_term, unify

__all__ = [
    "AnalysisReport", "AtomVerdict", "Conclusion", "Mode", "analyze", "analyze_general",
    "analyze_tagged", "SecurityLevel", "VerificationContext", "level", "f_level", "f_prime",
    "lower_bound", "upper_bound", "GeneralizedRole", "Protocol", "extract_generalized_roles",
    "ParseError", "SemanticError", "SpecError", "load_spec",
    "parse_spec", "check_tagged", "Atom", "Concat", "Enc", "Kind",
    "Variable", "parse_term", "unify",
]
