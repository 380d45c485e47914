class WaveholtzError(Exception):
    pass


class DomainError(WaveholtzError, ValueError):
    """Argument outside the domain where an operation is defined."""


class QuadratureError(WaveholtzError, ArithmeticError):
    """Quadrature failed to reach its tolerance."""

    def __init__(self, message, estimate=float("nan"), error=float("nan")):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class ConvergenceError(WaveholtzError, ArithmeticError):
    """An extrapolation or iteration sequence failed to settle."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class InstabilityError(WaveholtzError, ArithmeticError):
    """Iteration error norms grew beyond the allowed factor."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TruncationError(WaveholtzError, ValueError):
    """A field does not decay enough before reaching the box boundary."""


class ConfigError(WaveholtzError, ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
