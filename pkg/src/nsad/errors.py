"""Exception hierarchy shared by every module of the package."""


class NsadError(Exception):
    """Base class for all package errors."""


class ProgramError(NsadError, ValueError):
    """A program violates the predecessor-relation invariants."""


class CycleError(ProgramError):
    pass


class ArityError(ProgramError):
    pass


class EmptyPredecessorError(ProgramError):
    pass


class UnpricedOpError(NsadError, KeyError):
    pass


class CostError(NsadError, ValueError):
    pass


class DomainError(NsadError, ArithmeticError):
    """An op was evaluated outside its domain (log of a nonpositive, inverse of zero)."""

    def __init__(self, message, node=None):
        self.node = node
        if node is not None:
            message = f"node {node}: {message}"
        super().__init__(message)


class InexactOpError(NsadError, ValueError):
    """A transcendental op was requested in exact rational mode."""


class NoSelectionError(NsadError, LookupError):
    pass


class MultiOutputError(NsadError, ValueError):
    pass


class UnsupportedOpError(NsadError, ValueError):
    pass


class NonTernaryWeightError(NsadError, ValueError):
    pass


class DimensionError(NsadError, ValueError):
    pass


class ChoiceOutOfRange(NsadError, ValueError):
    pass


class IndexMismatch(NsadError, ValueError):
    pass


class BudgetExceeded(NsadError, RuntimeError):
    pass


class WidthError(NsadError, ValueError):
    pass


class SingularityError(NsadError, ArithmeticError):
    pass


class ConstraintViolated(NsadError, AssertionError):
    pass


class FormatError(NsadError, ValueError):
    """Malformed JSON/DIMACS input."""
