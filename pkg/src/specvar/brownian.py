"""Walk-on-spheres estimates of Brownian exit laws started from a spectral measure.

In the disk, the probability that Brownian motion started at Z ~ nu/nu(D)
leaves through the arc {e^{it}: |t| <= x} equals G(x)/nu(D), with G the arc
mass of the spectral distribution. In the left half-plane the exit point on
the imaginary axis has a Cauchy law for each start, which gives the oracle
for the continuous-time analogue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .errors import EmptyMeasure, OutOfRange, StepLimit
from .kernels import get_backend
from .measures import DISK, HALF_PLANE, QuadratureSpec, SpectralMeasure, integrate, sample_points


@dataclass(frozen=True)
class WosConfig:
    epsilon: float = 1e-6
    max_steps: int = 10 ** 6
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.1:
            raise OutOfRange("epsilon must lie in (0, 0.1)")
        if self.max_steps < 1000:
            raise OutOfRange("max_steps must be at least 1000")


@dataclass
class MonteCarloEstimate:
    x: float
    value: float
    stderr: float
    paths: int
    seed: int


def _distance(domain: str, z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Distance to the boundary, using the offset w to keep points near 1 accurate."""
    if domain == HALF_PLANE:
        return np.maximum(-z.real, 0.0)
    # 1 - |1 - w| = (2 Re w - |w|^2) / (1 + |1 - w|)
    d = (2.0 * w.real - (w * w.conjugate()).real) / (1.0 + np.abs(z))
    return np.maximum(d, 0.0)


def wos_exits(domain: str, z, config: WosConfig = WosConfig(), w=None,
              backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Exit points and step counts for walks started at each entry of ``z``.

    Path ``i`` uses random stream ``i`` of ``config.seed``. Starts on the
    boundary leave at once.
    """
    if domain not in (DISK, HALF_PLANE):
        raise OutOfRange(f"unknown domain {domain!r}")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if w is None:
        w = 1.0 - z if domain == DISK else z
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    if domain == DISK and np.any(np.abs(z) > 1.0 + 1e-12):
        raise OutOfRange("start outside the unit disk")
    if domain == HALF_PLANE and np.any(z.real > 0.0):
        raise OutOfRange("start outside the left half-plane")
    d0 = _distance(domain, z, w)
    be = get_backend(backend)
    ex, ey, steps, ok = be.walk_on_spheres(domain == HALF_PLANE, z.real.copy(), z.imag.copy(), d0,
                                           float(config.epsilon), int(config.max_steps),
                                           int(config.seed) & 0xFFFFFFFFFFFFFFFF)
    if not ok:
        raise StepLimit(f"a walk exceeded {config.max_steps} steps")
    return ex + 1j * ey, steps


def wos_exit(domain: str, z: complex, config: WosConfig = WosConfig()) -> complex:
    """Single exit point of a walk started at ``z``."""
    return complex(wos_exits(domain, [z], config)[0][0])


def _hits(domain: str, exits: np.ndarray, x: float) -> np.ndarray:
    if domain == DISK:
        return np.abs(np.angle(exits)) <= x
    return np.abs(exits.imag) < x


def harmonic_estimate(measure: SpectralMeasure, xs, paths: int, config: WosConfig = WosConfig(),
                      backend: str | None = None) -> list[MonteCarloEstimate]:
    """Frequency with which walks from Z ~ nu/nu(domain) exit near 1 (disk) or near 0 (half-plane).

    Disk: exit angle in [-x, x]. Half-plane: exit point in (-ix, ix).
    """
    if paths < 1000:
        raise OutOfRange("need at least 1000 paths")
    if not measure.total_mass > 0.0:
        raise EmptyMeasure("measure has no mass")
    rng = np.random.default_rng(config.seed)
    z, w = sample_points(measure, rng, paths)
    exits, _ = wos_exits(measure.domain, z, config, w=w, backend=backend)
    out = []
    for x in np.atleast_1d(np.asarray(xs, dtype=float)):
        p = float(np.mean(_hits(measure.domain, exits, float(x))))
        out.append(MonteCarloEstimate(float(x), p, math.sqrt(p * (1.0 - p) / paths), paths,
                                      int(config.seed)))
    return out


def cauchy_exit_probability(z: complex, x: float) -> float:
    """P(exit in (-ix, ix)) for Brownian motion from z = a + ib in the left half-plane."""
    a, b = abs(z.real), z.imag
    return (math.atan2(x - b, a) + math.atan2(x + b, a)) / math.pi


def harmonic_oracle(measure: SpectralMeasure, x: float, spec: QuadratureSpec | None = None) -> float:
    """Quadrature value matched by :func:`harmonic_estimate`.

    Disk: arc_mass(nu, x)/nu(D). Half-plane: the Cauchy exit probability averaged over nu.
    """
    total = measure.total_mass
    if not total > 0.0:
        raise EmptyMeasure("measure has no mass")
    if measure.domain == DISK:
        return spectral.arc_mass(measure, x, spec=spec) / total

    def f(z, w):
        a, b = np.abs(z.real), z.imag
        return (np.arctan2(x - b, a) + np.arctan2(x + b, a)) / math.pi

    return float(complex(integrate(measure, f, spec)).real) / total
