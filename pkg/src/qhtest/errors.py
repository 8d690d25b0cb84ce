"""Exception types raised across the package.

Every validation error names the violated invariant and carries the offending
magnitude in its message, so failures in long Monte Carlo sweeps are
diagnosable from the traceback alone.
"""


class QhtError(Exception):
    """Base class for all package errors."""


class NotHermitian(QhtError):
    """Matrix deviates from its conjugate transpose beyond tolerance."""


class TraceNotOne(QhtError):
    """Density matrix trace is not 1 within tolerance."""


class NotPSD(QhtError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class DimensionOverflow(QhtError):
    """A tensor power would exceed the configured dimension cap."""


class DimensionMismatch(QhtError):
    """Operator dimensions are incompatible."""


class ConvergenceFailure(QhtError):
    """An eigensolver failed to converge."""


class InvalidBlochVector(QhtError):
    """State family parameters leave the Bloch ball."""


class EmptyGrid(QhtError):
    """A hypothesis set produced no grid points at the given resolution."""


class InconsistentTranscript(QhtError):
    """A transcript round is internally inconsistent (dims, labels)."""


class InvariantViolation(QhtError):
    """A runtime invariant that should be impossible was observed."""


class InfeasibleCalibration(QhtError):
    """No calibration grid point meets the size constraint."""


class HorizonTooLarge(QhtError):
    """Transcript enumeration was asked for an unsupported horizon."""


class ConfigError(QhtError):
    """Experiment configuration is invalid."""


class ParseError(QhtError):
    """Config text could not be parsed."""


class IoError(QhtError):
    """Reading or writing a results file failed."""
