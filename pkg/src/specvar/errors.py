"""Exception types raised across the package."""


class SpecvarError(Exception):
    """Base class for all package errors."""


class DomainMismatch(SpecvarError):
    """A measure, region or operation belongs to the wrong domain."""


class Divergent(SpecvarError):
    """A quadrature estimate blew up or refinement did not settle."""


class InvalidIntegrand(SpecvarError):
    """The integrand produced NaN away from a declared singular point."""


class EmptyMeasure(SpecvarError):
    """Sampling was requested from a measure of zero mass."""


class MethodDisagreement(SpecvarError):
    """Independent computations of the same quantity disagree."""


class SigmaInfinite(Divergent):
    """The linear-variance integral is infinite."""


class ThetaInfinite(Divergent):
    """The mean holding time of the chain is infinite."""


class PreconditionFailed(SpecvarError):
    """Inputs fall outside the regime where a check is meaningful."""


class BracketFailure(SpecvarError):
    """A root could not be bracketed."""


class OutOfRange(SpecvarError):
    """A parameter lies outside its admissible range."""


class StepLimit(SpecvarError):
    """A walk-on-spheres path exceeded its step budget."""


class ConfigError(SpecvarError):
    """A configuration document is malformed."""
