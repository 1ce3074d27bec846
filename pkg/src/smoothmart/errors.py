"""Exception hierarchy shared by all modules."""


class SmoothMartError(Exception):
    """Base class for library errors."""


class DomainError(SmoothMartError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UsageError(SmoothMartError, ValueError):
    """An operation was called with inconsistent inputs (unbound variable, short path)."""


class NumericOverflowError(SmoothMartError, ArithmeticError):
    """A floating-point evaluation would overflow."""


class ResourceError(SmoothMartError, RuntimeError):
    """A configured resource cap (e.g. term count) was exceeded."""


class UnsupportedFunctionalError(SmoothMartError, ValueError):
    """The functional lies outside what an oracle can handle."""


class ConfigError(SmoothMartError, ValueError):
    """Invalid experiment configuration."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class AnalysisError(SmoothMartError, RuntimeError):
    """A post-processing step (e.g. a regression fit) is degenerate."""
