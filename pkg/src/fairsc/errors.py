"""Exception types raised by fairsc."""


class FairSCError(Exception):
    """Base class for all package errors."""


class ContractError(FairSCError, ValueError):
    """An input violates a documented precondition (shape, symmetry, ...)."""


class ValidationError(FairSCError, ValueError):
    """A parameter or dataset fails validation."""


class ParseError(FairSCError, ValueError):
    """A dataset file could not be parsed.

    Parameters
    ----------
    message : str
        Human readable description.
    line : int, optional
        1-based line (row) number where the problem was found.
    column : str, optional
        Column name, for tabular inputs.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
