"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Raised when model parameters or a run configuration are out of domain."""


class DivergenceError(RuntimeError):
    """Raised when the fixed-point solve cannot produce a usable value.

    Carries the iterate trace so callers can inspect how the iteration failed.
    """

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
