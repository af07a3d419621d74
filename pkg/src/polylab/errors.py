"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the domain of a density or special function."""


class PolygonDomainError(DomainError):
    """A functional was evaluated outside its domain (e.g. a zero-length edge)."""

    def __init__(self, message, index=None, sample=None):
        super().__init__(message)
        self.index = index  # offending edge
        self.sample = sample  # polygon within a batch, when batched


class UnsupportedDimensionError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """Quadrature failed to reach tolerance; carries the best available result."""

    def __init__(self, message, estimate, error_bound, evaluations=0):
        super().__init__(f"{message} (estimate={estimate!r}, error bound={error_bound!r})")
        self.estimate = estimate
        self.error_bound = error_bound
        self.evaluations = evaluations


class SampleEvaluationError(RuntimeError):
    """A functional raised on a Monte Carlo sample; records where to reproduce it."""

    def __init__(self, message, stream_id, index):
        super().__init__(f"{message} [stream_id={stream_id}, index={index}]")
        self.stream_id = stream_id
        self.index = index
