"""Exception hierarchy shared by all isoclouds modules."""


class IsoCloudsError(ValueError):
    """Base class for every error raised deliberately by isoclouds."""


class InvalidInputError(IsoCloudsError):
    """Input violates a precondition (shape, emptiness, range)."""


class DegenerateInputError(IsoCloudsError):
    """Input is geometrically degenerate where a non-degenerate one is required."""


class NonEmbeddableError(IsoCloudsError):
    """Distances cannot be realised by points in the requested Euclidean space."""


class AmbiguousInputError(IsoCloudsError):
    """Input does not determine a unique answer (e.g. a degenerate basis)."""


class IncomparableInputError(IsoCloudsError):
    """Two objects cannot be compared, typically different m or n."""


class InputFormatError(IsoCloudsError):
    """A cloud file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
