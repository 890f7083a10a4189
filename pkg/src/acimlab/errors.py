"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Raised when inputs violate a documented precondition or parameter bound."""


class ComputationError(RuntimeError):
    """Raised when a numerical routine cannot deliver its result.

    Extra diagnostic quantities (last residual, best distance achieved, ...)
    are attached as keyword attributes.
    """

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info
        for key, value in info.items():
            setattr(self, key, value)
