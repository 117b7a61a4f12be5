"""Exception types shared across the package."""


class KbError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(KbError):
    """Malformed KB document text."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ValidationError(KbError):
    """A knowledge base or constraint set violates a structural invariant."""


class AlignmentError(ValidationError):
    """Two knowledge bases do not share a common variable grid."""

    def __init__(self, variable: str, message: str):
        super().__init__(f"variable '{variable}': {message}")
        self.variable = variable


class NotContextualizedError(ValidationError):
    """A constraint expected to carry a context guard does not."""


class ConstraintNotFoundError(ValidationError):
    """Referenced constraint id is not part of the knowledge base."""


class UnassignedVariableError(KbError):
    """Formula evaluation hit a variable the assignment does not cover."""

    def __init__(self, variable: str):
        super().__init__(f"variable '{variable}' is not assigned")
        self.variable = variable


class InconsistentInputError(KbError):
    """An input knowledge base admits no solution."""


class SpaceTooLargeError(KbError):
    """Assignment space exceeds the brute-force guard."""


class GenerationError(KbError):
    """Random KB generation exhausted its retry budget."""


class BenchError(KbError):
    """Benchmark run failed; message carries the grid coordinates."""
