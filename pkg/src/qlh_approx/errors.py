"""Exception types shared across the package."""


class ParameterDomainError(ValueError):
    """A parameter lies outside the domain where the formulas are defined."""


class TruncationError(RuntimeError):
    """A truncated series could not be certified within its term cap."""


class DegenerateWindowError(ValueError):
    """A deferred averaging window carries zero total weight."""


class UnboundedRowError(ValueError):
    """A matrix row has no declared finite support."""


class DivergenceError(RuntimeError):
    """Partial sums of a power series failed the convergence check."""


class InsufficientSamplesError(ValueError):
    """Too few samples were supplied for limit extrapolation."""
