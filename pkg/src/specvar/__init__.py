"""Spectral-measure tools for the variance growth of partial sums of normal Markov chains."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BracketFailure,
    ConfigError,
    Divergent,
    DomainMismatch,
    EmptyMeasure,
    InvalidIntegrand,
    MethodDisagreement,
    OutOfRange,
    PreconditionFailed,
    SigmaInfinite,
    SpecvarError,
    StepLimit,
    ThetaInfinite,
)
from .measures import (  # noqa: E402
    DISK,
    HALF_PLANE,
    QuadratureSpec,
    SpectralMeasure,
    annulus,
    arc,
    atom,
    imaginary_segment,
    integrate,
    interval,
    real_segment,
    region_mass,
    uniform_circle,
)
