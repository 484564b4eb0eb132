"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a law or construction is defined."""


class NoOutlierError(DomainError):
    """A spectral value lies inside the bulk, so it cannot be inverted to a spike."""


class ConfigError(ValueError):
    """A configuration violates a hypothesis that a check or experiment declares.

    ``path`` names the offending field (dotted), when known.
    """

    def __init__(self, message, path=None):
        self.message = message
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class PoleError(ArithmeticError):
    """A resolvent or master-equation matrix was evaluated at a pole."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge; ``residual`` holds the last residual."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
