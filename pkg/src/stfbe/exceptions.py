"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class AdmissibilityError(DomainError):
    """Fractional orders / dimension violate the well-posedness conditions.

    ``condition`` names the violated inequality so that callers (the CLI in
    particular) can report it verbatim.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NumericalFailure(ArithmeticError):
    """A numerical routine failed to converge or produced non-finite output."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
