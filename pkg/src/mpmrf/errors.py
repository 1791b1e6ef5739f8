"""Exception hierarchy shared across the package."""


class MpmrfError(Exception):
    """Base class for all package-specific errors."""


# -- trees -------------------------------------------------------------------

class CycleOrDisconnectedError(MpmrfError):
    pass


class DuplicateEdgeError(MpmrfError):
    pass


class VertexOutOfRangeError(MpmrfError):
    pass


class DisconnectedError(MpmrfError):
    pass


class InvalidDegreeError(MpmrfError):
    pass


class InvalidSizeError(MpmrfError):
    pass


# -- frequency model ---------------------------------------------------------

class InvalidParamsError(MpmrfError):
    pass


class NegativeCountError(MpmrfError):
    pass


class ArgumentOutOfRangeError(MpmrfError):
    pass


class DimensionTooLargeError(MpmrfError):
    pass


# -- severities --------------------------------------------------------------

class ThresholdNotOnLatticeError(MpmrfError):
    pass


class TailMassTooLargeError(MpmrfError):
    pass


class InfiniteMomentError(MpmrfError):
    pass


class TooFewExceedancesError(MpmrfError):
    pass


class NonConvergenceError(MpmrfError):
    pass


class ZeroMeanError(MpmrfError):
    pass


class InvalidRateError(MpmrfError):
    pass


class NormalizationError(MpmrfError):
    pass


# -- aggregation / allocation ------------------------------------------------

class LatticeMismatchError(MpmrfError):
    pass


class InvalidKappaError(MpmrfError):
    pass


class ZeroMassOutcomeError(MpmrfError):
    pass


class ZeroVarianceError(MpmrfError):
    pass


class NumericalError(MpmrfError):
    pass


# -- asymptotics -------------------------------------------------------------

class FiniteSupportViolatedError(MpmrfError):
    pass


class SupercriticalRegimeError(MpmrfError):
    pass


class InvalidThetaError(MpmrfError):
    pass


# -- estimation --------------------------------------------------------------

class TooFewPeriodsError(MpmrfError):
    pass


class SampleTooSmallError(MpmrfError):
    pass


class TooManyFailuresError(MpmrfError):
    pass


class InvalidDataError(MpmrfError):
    pass


# -- cli ---------------------------------------------------------------------

class ConfigError(MpmrfError):
    pass
