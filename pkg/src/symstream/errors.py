"""Exception hierarchy shared by every layer of the package."""


class SymstreamError(Exception):
    """Base class for all errors raised by this package."""


class SpecError(SymstreamError):
    """A specification could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            where = f"line {line}" if column is None else f"line {line}, column {column}"
            message = f"{where}: {message}"
        super().__init__(message)


class ParseError(SpecError):
    pass


class UnknownIdentifierError(SpecError):
    pass


class SortError(SpecError):
    pass


class DuplicateStreamError(SpecError):
    pass


class CycleError(SpecError):
    def __init__(self, cycle: list[str], line: int | None = None):
        self.cycle = list(cycle)
        super().__init__("zero-offset cycle: " + " -> ".join(self.cycle + self.cycle[:1]), line)


class UnsupportedFutureError(SpecError):
    pass


class FragmentError(SymstreamError):
    """An input falls outside the fragment an operation supports."""


class ReadingError(SymstreamError):
    """A reading is malformed or does not fit its stream."""


class TraceError(SymstreamError):
    """A trace file is malformed or does not match its specification."""


class SolverResourceError(SymstreamError):
    """A decision procedure exceeded its configured resource cap."""


class InvariantViolation(SymstreamError):
    """An internal invariant (for example a pruning size bound) failed."""
