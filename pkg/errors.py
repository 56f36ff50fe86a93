"""Exception types shared across the dynoracle modules."""

from __future__ import annotations


class ContractViolation(ValueError):
    """A documented precondition was not met (shape, ordering, duplicates)."""


class SingularMatrixError(ArithmeticError):
    """The matrix has determinant zero over the field."""


class SingularUpdate(ArithmeticError):
    """Applying the requested rank-1 update would make the matrix singular."""


class RebuildRequired(RuntimeError):
    """An incremental refresh hit a singular inner matrix; rebuild from scratch."""


class UnpredictedEdge(KeyError):
    """The edge does not appear in the predicted sequence."""


class UnknownElement(KeyError):
    """The referenced vertex or element is not live."""


class VerificationError(AssertionError):
    """A structure answer disagreed with its oracle."""


class ParseError(ValueError):
    """A config or script file could not be parsed.

    The message always starts with ``path:line`` so editors can jump to it.
    """

    def __init__(self, path: str, line: int, message: str) -> None:
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line
