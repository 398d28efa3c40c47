"""Exception hierarchy shared by every module.

Each class name doubles as the machine-parsable error class the CLI prints,
so names are part of the public interface.
"""


class SpilloverError(Exception):
    """Base class for all package errors."""


# linear algebra / sampling
class NotPositiveDefinite(SpilloverError):
    def __init__(self, message="matrix is not positive definite", iteration=None):
        if iteration is not None:
            message = f"{message} (Gibbs iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class NotSymmetric(SpilloverError):
    pass


class InvalidDegreesOfFreedom(SpilloverError):
    pass


class EmptyInput(SpilloverError):
    pass


# ingestion
class SchemaMismatch(SpilloverError):
    pass


class NonMonthlyDates(SpilloverError):
    pass


class InteriorMissing(SpilloverError):
    pass


class NonPositiveLevel(SpilloverError):
    pass


class MissingTick(SpilloverError):
    pass


class ZeroVariance(SpilloverError):
    pass


# VAR estimation and impulse responses
class InsufficientObservations(SpilloverError):
    pass


class DegenerateNormalization(SpilloverError):
    pass


# firm regressions
class NoVariationLeft(SpilloverError):
    pass


class RankDeficient(SpilloverError):
    pass


class FewerClustersThanRegressors(UserWarning):
    """Warning: cluster-robust covariance with fewer clusters than regressors."""


class ConvergenceWarning(UserWarning):
    """Warning: split-half diagnostic flags a poorly mixed chain."""


# entrepreneur model
class ConstraintViolated(SpilloverError):
    pass


class InfeasibleConsumption(SpilloverError):
    pass


class NoBracket(SpilloverError):
    pass


class NegativeMultiplier(SpilloverError):
    pass


class RegimeMismatch(SpilloverError):
    pass


# cli
class ConfigError(SpilloverError):
    pass


class ConfigPathMissing(ConfigError):
    pass
