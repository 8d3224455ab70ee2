"""Exception types raised across the package."""


class HeatbenchError(Exception):
    """Base class for all package errors."""


class ShapeMismatchError(HeatbenchError):
    """Operands disagree on length or image shape."""


class NotFiniteError(HeatbenchError):
    """An array that must be finite contains NaN or Inf."""


class ZeroVectorError(HeatbenchError):
    """A vector with (numerically) zero norm where a direction is required."""


class InvalidLabelError(HeatbenchError):
    """Class label outside [0, num_classes)."""


class ParseError(HeatbenchError):
    """A model or dataset file failed to parse; message carries diagnostics."""


class DimensionMismatchError(HeatbenchError):
    """Model file dimensions are internally inconsistent or out of range."""


class EnsembleMismatchError(HeatbenchError):
    """Models in an ensemble disagree on input_dim or num_classes."""


class EnsembleTooSmallError(HeatbenchError):
    """Operation needs at least two models."""


class EmptySpectrumError(HeatbenchError):
    """No singular values remain after the numerical-rank cutoff."""


class RankOutOfRangeError(HeatbenchError):
    """Requested retained rank outside [1, rank]."""


class NonPositiveEntryError(HeatbenchError):
    """Vector entry <= 0 where strictly positive values are required."""


class NonPositiveTauError(HeatbenchError):
    """Temperature must be > 0."""


class OutOfRangeEntryError(HeatbenchError):
    """Normalized factor outside [0, 1]."""


class LengthMismatchError(HeatbenchError):
    """Vectors that must share a length do not."""


class PixelOutOfRangeError(HeatbenchError):
    """Pixel intensity outside [0, 1]."""


class ConfigError(HeatbenchError):
    """Invalid attack/campaign configuration; message names the field."""


class RemoteError(HeatbenchError):
    """Base class for gradient-provider transport errors."""


class ConnectFailureError(RemoteError):
    """Provider endpoint could not be reached or spawned."""


class HandshakeMismatchError(RemoteError):
    """Provider handshake disagrees on version, input_dim, or num_classes."""


class RemoteFailureError(RemoteError):
    """A provider request failed after retries, or the reply was malformed."""
