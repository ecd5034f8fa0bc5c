"""Exception types shared across the package."""


class BackscatterError(Exception):
    """Base class for all errors raised by this package."""


class OutOfRangeError(BackscatterError):
    """A physical parameter left its admissible range (e.g. negative
    correlation factor from a too-large Doppler-duration product)."""


class OddSampleCountError(BackscatterError):
    """Manchester framing requires an even number of samples."""


class DivergentFactorError(BackscatterError):
    """A closed-form expression is singular at the requested correlation
    factor (rho = 1); the static-channel limit must be handled by the
    caller instead."""


class DegenerateVariancesError(BackscatterError):
    """OOK threshold detection needs s1 > s0 > 0; with equal variances the
    hypotheses are indistinguishable."""


class InsufficientAntennasError(BackscatterError):
    """Direct-link cancellation needs at least two antennas."""


class SingularCovarianceError(BackscatterError):
    """The residual-noise covariance could not be inverted."""


class QuadratureFailureError(BackscatterError):
    """Adaptive quadrature exhausted its budget before reaching the
    requested tolerance.  The best available estimate and its error
    bound are attached."""

    def __init__(self, message, best_estimate=None, error_estimate=None):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class NoCrossingError(BackscatterError):
    """A BER curve never reaches the target level, so no SNR gain can be
    measured at that level."""


class ConfigError(BackscatterError):
    """Base class for configuration-file problems."""


class ConfigParseError(ConfigError):
    """Malformed config file (bad syntax, unknown key, bad literal)."""


class ConfigValidationError(ConfigError):
    """Config parsed fine but violates a model invariant."""
