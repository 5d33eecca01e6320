"""Exception hierarchy shared by all modules."""


class Inv2ScatterError(Exception):
    """Base class for library errors."""


class DomainError(Inv2ScatterError, ValueError):
    """Argument outside the certified domain of a routine."""


class UnsupportedError(Inv2ScatterError):
    """Requested capability is not available for this input."""


class HypothesisError(Inv2ScatterError):
    """A potential violates a structural hypothesis required by a routine."""


class ConvergenceError(Inv2ScatterError):
    """An iterative procedure failed to converge."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class ConditioningError(Inv2ScatterError):
    """A result would be dominated by cancellation error."""


class NoTurningPointError(DomainError):
    """Energy does not admit a unique pair of turning points."""
