"""Exception hierarchy shared by all modules."""


class CdscError(Exception):
    """Base class for all package errors."""


class InvalidParameter(CdscError, ValueError):
    pass


class StateSpaceTooLarge(CdscError):
    pass


class MissingSepSet(CdscError, KeyError):
    pass


class OrientationConflict(CdscError):
    """Orientation rules demanded both directions of one edge."""

    def __init__(self, edge, message=None):
        self.edge = tuple(edge)
        super().__init__(message or f"conflicting orientations for edge {self.edge}")


class TooFewSamples(CdscError):
    pass


class InsufficientData(CdscError):
    """A fixed dataset holds fewer rows than the Poisson draw asked for."""

    def __init__(self, required: int, available: int):
        self.required = int(required)
        self.available = int(available)
        super().__init__(
            f"dataset has {self.available} rows but the test drew K={self.required}"
        )


class RecoveryFailed(CdscError):
    """Discovery could not produce a consistent pattern; carries the trace."""

    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)


class EmptyFamily(CdscError):
    pass
