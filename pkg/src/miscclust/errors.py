"""Exception types raised across the package."""


class MiscError(Exception):
    """Base class for all errors raised by miscclust."""


class ParseError(MiscError, ValueError):
    """A CSV input could not be parsed.

    ``row`` and ``col`` are 1-based file coordinates when known.
    """

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class DegenerateInputError(MiscError, ValueError):
    """Input data carries no usable signal (constant, rank-deficient, ...)."""


class StageError(MiscError):
    """Wraps an error raised inside one pipeline stage."""

    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
