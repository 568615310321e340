"""Symbolic runtime monitoring of stream specifications under uncertain inputs."""

from .errors import (
    CycleError,
    DuplicateStreamError,
    FragmentError,
    InvariantViolation,
    ParseError,
    ReadingError,
    SolverResourceError,
    SortError,
    SpecError,
    SymstreamError,
    TraceError,
    UnknownIdentifierError,
    UnsupportedFutureError,
)
from .interval import Interval, run_abs, step_abs
from .monitor import MonitorConfig, RunResult, Verdict, init_state, memory_profile, run, step
from .spec_ast import Fragment, Specification, classify_fragment, flatten, parse_spec, prepare, rewrite_ite
from .symbolic import UNKNOWN, Exact, Range, eval_concrete

__all__ = [
    "CycleError", "DuplicateStreamError", "FragmentError", "InvariantViolation", "ParseError",
    "ReadingError", "SolverResourceError", "SortError", "SpecError", "SymstreamError", "TraceError",
    "UnknownIdentifierError", "UnsupportedFutureError", "Interval", "run_abs", "step_abs",
    "MonitorConfig", "RunResult", "Verdict", "init_state", "memory_profile", "run", "step",
    "Fragment", "Specification", "classify_fragment", "flatten", "parse_spec", "prepare",
    "rewrite_ite", "UNKNOWN", "Exact", "Range", "eval_concrete",
]
