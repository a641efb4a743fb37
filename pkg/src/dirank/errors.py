"""Exception hierarchy shared by all pipeline stages."""


class DirankError(Exception):
    """Base class for every error raised by this package."""


class ParseError(DirankError, ValueError):
    """A data row could not be parsed or violates a value constraint."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class NonPositiveValue(ParseError):
    pass


class NonMonotoneTimestamps(DirankError, ValueError):
    pass


class DuplicateTimestamp(DirankError, ValueError):
    pass


class EmptyIntersection(DirankError, ValueError):
    pass


class TooShort(DirankError, ValueError):
    pass


class DivisionByZero(DirankError, ZeroDivisionError):
    pass


class DomainError(DirankError, ValueError):
    pass


class TooFewSamples(DirankError, ValueError):
    pass


class DegenerateGeometry(DirankError, ArithmeticError):
    """A joint-space k-th neighbour radius collapsed to zero."""


class UnmappedNode(DirankError, KeyError):
    pass


class NonConvergence(DirankError, RuntimeError):
    pass


class WindowTooLong(DirankError, ValueError):
    pass


class BlockTooShort(DirankError, ValueError):
    pass


class ConfigError(DirankError, ValueError):
    pass


class PairError(DirankError):
    """Wraps a failure of one ordered pair so the caller knows which one."""

    def __init__(self, src: str, dst: str, cause: Exception):
        self.src = src
        self.dst = dst
        self.cause = cause
        super().__init__(f"pair {src} -> {dst}: {type(cause).__name__}: {cause}")
