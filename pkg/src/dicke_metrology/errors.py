"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the domain of an operation (bad N, K, imbalance, ...)."""


class ContractError(ValueError):
    """A formula was requested on inputs that violate its assumptions."""


class NumericalError(RuntimeError):
    """A numerical routine produced a result failing its residual check."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
