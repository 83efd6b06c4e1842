"""Exception hierarchy shared by every module."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class NumericalError(ArithmeticError):
    """A numerical routine produced a non-finite or otherwise invalid result."""


class NonConvergenceError(NumericalError):
    """A truncated series did not converge within its term budget."""


class ConfigError(ValueError):
    """A configuration, dataset or file failed validation."""


class TrainingDivergence(NumericalError):
    """A training loss became non-finite.

    ``epoch`` is the epoch in which the failure occurred and
    ``last_finite_epoch`` the last epoch whose loss was finite (-1 if none).
    """

    def __init__(self, message, epoch, last_finite_epoch):
        super().__init__(message)
        self.epoch = epoch
        self.last_finite_epoch = last_finite_epoch
