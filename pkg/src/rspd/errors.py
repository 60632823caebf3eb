"""Exception hierarchy shared by the library and the CLI."""


class RspdError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RspdError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ResourceError(RspdError):
    """The requested build would exceed the configured enumeration budget."""


class ConstructionError(RspdError):
    """The construction could not complete (e.g. no admissible shift found)."""


class NumericalError(RspdError, ArithmeticError):
    """A linear system or factorization failed."""


class DesignParseError(RspdError, ValueError):
    """A design file could not be parsed.

    ``line`` and ``column`` are 1-based and may be ``None`` when the problem is
    not tied to a single cell.
    """

    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.column = column
