"""Rigorous verification of disjunctive nonlinear inequalities over boxes."""

from .certificate import Certificate, Verdict, deserialize, replay, serialize
from .expr import InequalitySpec, format_expr, parse, to_source
from .interval import Box, Interval
from .solver import SolverConfig, SolveResult, Strategy, verify, verify_many

__all__ = [
    "Box",
    "Certificate",
    "InequalitySpec",
    "Interval",
    "SolveResult",
    "SolverConfig",
    "Strategy",
    "Verdict",
    "deserialize",
    "format_expr",
    "parse",
    "replay",
    "serialize",
    "to_source",
    "verify",
    "verify_many",
]

__version__ = "0.1.0"
