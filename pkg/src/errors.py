"""Exception hierarchy shared by the library and the command-line front end."""
from typing import Optional


class HyperCRError(Exception):
    """Base class for every error raised by the library.

    Attributes:
        exit_code: Process exit code the CLI uses when this error escapes a command
    """

    exit_code = 2

    def to_dict(self) -> dict:
        """Structured form used by the JSON error document."""
        return {"type": type(self).__name__, "message": str(self)}


# Resource guards

class ExpressionTooLarge(HyperCRError):
    """An expression exceeded the configured node budget."""

    exit_code = 3

    def __init__(self, nodes: int, limit: int):
        super().__init__(f"expression has {nodes} nodes, limit is {limit}")
        self.nodes = nodes
        self.limit = limit


class SamplingExhausted(HyperCRError):
    """Rejection sampling could not collect enough admissible points."""

    exit_code = 3

    def __init__(self, accepted: int, wanted: int, attempts: int):
        super().__init__(
            f"accepted {accepted} of {wanted} samples after {attempts} attempts"
        )
        self.accepted = accepted
        self.wanted = wanted
        self.attempts = attempts


# Evaluation errors

class NonRationalOperation(HyperCRError):
    """Exact evaluation produced an irrational or non-real value."""


class DivisionByZero(HyperCRError):
    """A negative power of a vanishing base was evaluated."""


class DomainError(HyperCRError):
    """Floating evaluation left the real domain of the expression."""


class EvaluationOverflow(HyperCRError, OverflowError):
    """Floating evaluation overflowed."""


# Input errors

class ExpressionSyntaxError(HyperCRError):
    """The equation grammar rejected the input.

    Attributes:
        offset: Zero-based character offset of the offending token
        line: One-based line number
        column: One-based column number
    """

    exit_code = 1

    def __init__(self, message: str, source: str = "", offset: int = 0):
        offset = max(0, min(offset, len(source)))
        line = source.count("\n", 0, offset) + 1
        column = offset - (source.rfind("\n", 0, offset) + 1) + 1
        super().__init__(f"{message} at line {line}, column {column}")
        self.source = source
        self.offset = offset
        self.line = line
        self.column = column

    def to_dict(self) -> dict:
        data = super().to_dict()
        data.update({"offset": self.offset, "line": self.line, "column": self.column})
        return data


class UnknownSymbol(ExpressionSyntaxError):
    """An identifier outside t, x, x', x'', x0, x1, x2, sqrt."""


class BadExponent(ExpressionSyntaxError):
    """An exponent that is not an exact rational."""


class DependsOnJetVariables(HyperCRError):
    """A point transformation component mentions x1 or x2."""

    exit_code = 1


# Geometry errors

class InverseMismatch(HyperCRError):
    """A supplied inverse does not invert the forward map."""


class DegenerateFrame(HyperCRError):
    """The frame {d/dx2, ad d/dx2, ad^2 d/dx2, X_F} is not a basis."""


class DegreeOverflow(HyperCRError):
    """A wedge product would exceed the dimension of the 2-jet space."""


class TrivializableBranch(HyperCRError):
    """The third x2-derivative of F vanishes, so Psi is undefined."""


class PreconditionViolated(HyperCRError):
    """A check was requested outside the hypotheses that make it meaningful."""


class VerificationFailed(HyperCRError):
    """One or more verification suites failed."""

    exit_code = 4

    def __init__(self, failed: Optional[list] = None):
        failed = failed or []
        super().__init__("failed suites: " + ", ".join(failed) if failed else "verification failed")
        self.failed = failed


class UsageError(HyperCRError):
    """Bad command-line usage: unknown flag, missing argument or unknown invariant name."""

    exit_code = 1
