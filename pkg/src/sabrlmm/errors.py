"""Exception hierarchy shared by all modules."""


class SabrLmmError(Exception):
    """Base class for library errors."""


class CurveError(SabrLmmError):
    """Curve construction failed (non-positive growth factor, bad grid)."""


class ParameterError(SabrLmmError, ValueError):
    """Model or pricer parameters outside their valid domain."""


class QuadratureError(SabrLmmError):
    """Adaptive integration did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class PriceAtIntrinsicError(SabrLmmError):
    """A price equals its intrinsic value, so no implied volatility exists."""


class ImpliedVolError(SabrLmmError):
    """Price lies outside the no-arbitrage band of the Black formula."""


class McError(SabrLmmError):
    """Monte Carlo run aborted (non-finite state or bad configuration)."""


class CalibrationError(SabrLmmError):
    """A calibration target could not be attained."""


class ConfigError(SabrLmmError):
    """Input file failed to parse or validate."""
