"""Exception types shared across the package."""


class BiltrackError(Exception):
    """Base class for all package errors."""


class DimensionError(BiltrackError, ValueError):
    """Operand shapes are inconsistent with the operation's contract."""


class CertificateError(BiltrackError, ValueError):
    """A structural certificate (SPD matrix, gain bound) is invalid."""


class ConfigError(BiltrackError, ValueError):
    """A run configuration is malformed or out of range."""


class SimulationDiverged(BiltrackError, RuntimeError):
    """The integrated state left the finite/bounded regime."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t
