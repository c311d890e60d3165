"""Exception hierarchy.

Every error carries the process exit code the command line front end maps
it to: 2 for usage or configuration problems, 3 for bad input data and 4
for numerical failures.
"""


class KoopmanSensingError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class UsageError(KoopmanSensingError):
    exit_code = 2


class DataError(KoopmanSensingError):
    exit_code = 3


class NumericalError(KoopmanSensingError):
    exit_code = 4


# configuration / usage
class ConfigError(UsageError):
    pass


class SpecInvalid(UsageError):
    pass


class RankTooLarge(UsageError):
    pass


class MemoryBudgetExceeded(UsageError):
    pass


# data
class NyquistViolation(DataError):
    pass


class SignalTooShort(DataError):
    pass


class DegenerateChannel(DataError):
    def __init__(self, channel, message=None):
        self.channel = channel
        super().__init__(message or f"channel {channel} has (near) zero variance")


class ShapeMismatch(DataError):
    pass


class InsufficientSamples(DataError):
    pass


class OutOfRange(DataError):
    pass


class EmptyMask(DataError):
    pass


class HorizonExceedsData(DataError):
    pass


class ModelDataMismatch(DataError):
    pass


class SensorCountMismatch(DataError):
    pass


class NonUniformSampling(DataError):
    pass


class MissingHeader(DataError):
    pass


class NonFiniteValue(DataError):
    def __init__(self, row, col, message=None):
        self.row = row
        self.col = col
        super().__init__(message or f"non-finite value at row {row}, column {col}")


class InsufficientData(DataError):
    pass


class ZeroVector(DataError):
    pass


class ConstantTruth(DataError):
    pass


class ZeroRange(DataError):
    pass


class EmptySpectrum(DataError):
    pass


# numerical
class RankCrossesNullspace(NumericalError):
    pass


class EigDecompositionFailure(NumericalError):
    pass


class ConjugateImbalance(NumericalError):
    pass


class IllConditionedEigenbasis(NumericalError):
    pass


class UnderdeterminedCalibration(NumericalError):
    pass
