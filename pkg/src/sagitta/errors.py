"""Exception hierarchy shared by every module."""


class SagittaError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgumentError(SagittaError, ValueError):
    pass


class NumericalDomainError(SagittaError, ArithmeticError):
    """A computed quantity left its admissible range by more than rounding."""


class InvalidTriangleError(InvalidArgumentError):
    pass


class InvalidPointError(InvalidArgumentError):
    pass


class InvalidDirectionError(InvalidArgumentError):
    pass


class InsufficientDataError(InvalidArgumentError):
    pass


class InvalidActionError(InvalidArgumentError):
    """Requested cyclic action is not free."""


class ConnectivityError(SagittaError):
    def __init__(self, message, n_components=None, sizes=None):
        super().__init__(message)
        self.n_components = n_components
        self.sizes = sizes
