"""Exception hierarchy shared by every contactkit module."""


class ContactKitError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(ContactKitError, ValueError):
    pass


class NumericalError(ContactKitError, ArithmeticError):
    pass


class EvaluationError(ContactKitError, ArithmeticError):
    """A model callback produced a non-finite value."""


class UnknownModelError(ContactKitError, KeyError):
    pass


class ParameterError(ContactKitError, ValueError):
    pass


class ProjectionError(ContactKitError):
    def __init__(self, message, point=None, residual=None):
        super().__init__(message)
        self.point = point
        self.residual = residual


class SearchError(ContactKitError):
    pass


class IntegrationError(ContactKitError):
    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DegenerateError(ContactKitError):
    """Rank of ``Df N`` dropped by two or more; the adjugate vanishes."""

    def __init__(self, message, rank_deficiency=2):
        super().__init__(message)
        self.rank_deficiency = rank_deficiency
