class DomainError(ValueError):
    """An input violates a documented precondition or cap."""


class DimensionMismatch(DomainError):
    pass


class CapExceeded(DomainError):
    pass
