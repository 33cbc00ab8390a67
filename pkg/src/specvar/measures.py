"""Spectral measures on the closed unit disk or the closed left half-plane.

A measure is a list of components: point masses and a handful of named
density families. ``integrate`` is a panel quadrature that knows where each
family can be singular. Integrands are called as ``f(z, w)`` where ``w`` is
the offset of ``z`` from the domain's special point: ``w = 1 - z`` on the
disk and ``w = z`` on the half-plane. Offsets are built without cancellation,
so integrands such as ``1/(1 - z)`` should be written in terms of ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .errors import (
    ConfigError,
    Divergent,
    DomainMismatch,
    EmptyMeasure,
    InvalidIntegrand,
    OutOfRange,
)

DISK = "disk"
HALF_PLANE = "left-half-plane"
_DOMAINS = (DISK, HALF_PLANE)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_DEEP = 1e-200                  # nodes below this offset feed the divergence test
_ON_CIRCLE_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances for :func:`integrate`.

    ``grading`` is the ratio between successive panel lengths toward a
    singular endpoint (0 < grading < 1); ``depth`` is the smallest offset
    reached there, and the sliver below it is dropped.
    """

    rtol: float = 1e-10
    atol: float = 1e-14
    max_subdivisions: int = 6
    grading: float = math.exp(-1.0)
    depth: float = 1e-300

    def __post_init__(self):
        if not self.rtol > 0 or not self.atol >= 0:
            raise OutOfRange("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise OutOfRange("max_subdivisions must be >= 1")
        if not 0.0 < self.grading < 1.0:
            raise OutOfRange("grading must lie in (0, 1)")
        if not 0.0 < self.depth < 1e-8:
            raise OutOfRange("depth must lie in (0, 1e-8)")


DEFAULT_SPEC = QuadratureSpec()


# ---------------------------------------------------------------- panel rules

def _gl_linear(edges: np.ndarray, level: int):
    """Gauss-Legendre nodes on consecutive panels given by ``edges``."""
    if level:
        k = 2 ** level
        fine = edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * (np.arange(k) / k)
        edges = np.append(fine.ravel(), edges[-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_X).ravel()
    wt = (half[:, None] * _GL_W).ravel()
    return x, wt


def _log_offsets(y_hi: float, y_lo: float, spec: QuadratureSpec, level: int):
    """Nodes in y on [y_lo, y_hi] placed by Gauss-Legendre in s = -ln y.

    ``y_lo == 0`` grades all the way down to ``spec.depth``.
    """
    s_a = -math.log(y_hi)
    s_b = -math.log(spec.depth) if y_lo <= 0.0 else -math.log(y_lo)
    h = -math.log(spec.grading)
    npan = max(1, int(math.ceil((s_b - s_a) / h)))
    s, ws = _gl_linear(np.linspace(s_a, s_b, npan + 1), level)
    y = np.exp(-s)
    return y, ws * y


def _graded_edges(length: float, ratio: float, depth: float, nlin: int) -> np.ndarray:
    """Panel edges on [0, length], geometric toward 0 plus ``nlin`` uniform cuts."""
    geo = [length]
    while geo[-1] > depth * length:
        geo.append(geo[-1] * ratio)
    edges = np.unique(np.concatenate([[0.0], geo, np.linspace(0.0, length, nlin + 1)]))
    return edges


def _trapezoid_angles(m: int):
    theta = -math.pi + 2.0 * math.pi * (np.arange(m) + 0.5) / m
    return theta, np.full(m, 1.0 / m)


def _circle_offset(theta):
    s = np.sin(0.5 * theta)
    return 2.0 * s * s - 1j * np.sin(theta)


# ---------------------------------------------------------- interval families

class IntervalFamily:
    """Normalized probability density on [-1, 1], described in y = 1 - t.

    Subclasses give the density in y, the distribution of offsets
    ``cdf_y(y) = P(1 - t <= y)`` and, where available, closed-form moments.
    """

    name = ""
    y_lo = 0.0
    y_hi = 1.0

    def params(self) -> dict:
        return {}

    def pdf_y(self, y):
        raise NotImplementedError

    def cdf_y(self, y):
        raise NotImplementedError

    def moments(self, count: int):
        """E t^k for k < count, or None when no closed form is coded."""
        return None

    def sample_y(self, u):
        return _table_inverse(self, u)

    @property
    def singular_at_one(self) -> bool:
        return self.y_lo <= 0.0


class UniformFamily(IntervalFamily):
    name = "uniform"

    def __init__(self, lo: float = 0.0, hi: float = 1.0):
        if not -1.0 <= lo < hi <= 1.0:
            raise OutOfRange(f"uniform family needs -1 <= lo < hi <= 1, got {lo}, {hi}")
        self.lo, self.hi = float(lo), float(hi)
        self.y_lo, self.y_hi = 1.0 - self.hi, 1.0 - self.lo

    def params(self):
        return {"lo": self.lo, "hi": self.hi}

    def pdf_y(self, y):
        return np.full(np.shape(y), 1.0 / (self.hi - self.lo))

    def cdf_y(self, y):
        return np.clip((np.asarray(y, dtype=float) - self.y_lo) / (self.hi - self.lo), 0.0, 1.0)

    def moments(self, count):
        k = np.arange(count, dtype=float)
        with np.errstate(under="ignore"):
            num = self.hi ** (k + 1) - self.lo ** (k + 1)
        return num / ((k + 1) * (self.hi - self.lo))

    def sample_y(self, u):
        return self.y_lo + (self.y_hi - self.y_lo) * np.asarray(u)


class PowerFamily(IntervalFamily):
    """Density (1 - gamma)(1 - t)^(-gamma) on [0, 1)."""

    name = "power"

    def __init__(self, gamma: float = 0.0):
        if not gamma < 1.0:
            raise OutOfRange(f"power family needs gamma < 1, got {gamma}")
        self.gamma = float(gamma)

    def params(self):
        return {"gamma": self.gamma}

    def pdf_y(self, y):
        return (1.0 - self.gamma) * np.asarray(y, dtype=float) ** (-self.gamma)

    def cdf_y(self, y):
        return np.clip(np.asarray(y, dtype=float), 0.0, 1.0) ** (1.0 - self.gamma)

    def moments(self, count):
        k = np.arange(count, dtype=float)
        g = 1.0 - self.gamma
        return g * np.exp(special.gammaln(k + 1) + special.gammaln(g) - special.gammaln(k + 1 + g))

    def sample_y(self, u):
        return np.asarray(u, dtype=float) ** (1.0 / (1.0 - self.gamma))


class DefNiuFamily(IntervalFamily):
    """Density 1 + a sin ln(1-t) + a cos ln(1-t) on [0, 1).

    Its offset distribution is y(1 + a sin ln y), which oscillates in log y,
    so the mass near t = 1 is not regularly varying.
    """

    name = "defniu"

    def __init__(self, a: float = 0.25):
        if not abs(a) <= 1.0 / math.sqrt(2.0):
            raise OutOfRange(f"defniu family needs |a| <= 1/sqrt(2), got {a}")
        self.a = float(a)

    def params(self):
        return {"a": self.a}

    def pdf_y(self, y):
        ly = np.log(np.asarray(y, dtype=float))
        return 1.0 + self.a * (np.sin(ly) + np.cos(ly))

    def cdf_y(self, y):
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = y[pos] * (1.0 + self.a * np.sin(np.log(y[pos])))
        return out

    def moments(self, count):
        k = np.arange(count, dtype=float)
        base = 1.0 / (k + 1.0)
        beta_i = np.exp(special.loggamma(k + 1) + special.loggamma(1 + 1j)
                        - special.loggamma(k + 2 + 1j))
        return base + self.a * (beta_i.real + beta_i.imag)


class ExpSqrtLogFamily(IntervalFamily):
    """Density proportional to exp(sqrt(l))/(2 sqrt(l)), l = ln(1/y), for y <= 1/e.

    Integrating against 1/y gives exp(sqrt(ln(1/x))) - e, a slowly varying
    tail. Normalized here to a probability density.
    """

    name = "expsqrtlog"
    y_hi = math.exp(-1.0)
    _ERFC_HALF = special.erfc(0.5)
    raw_mass = math.exp(0.25) * 0.5 * math.sqrt(math.pi) * special.erfc(0.5)

    def pdf_y(self, y):
        y = np.asarray(y, dtype=float)
        ell = -np.log(y)
        out = np.zeros_like(y)
        inside = (y > 0) & (y <= self.y_hi)
        sl = np.sqrt(ell[inside])
        out[inside] = np.exp(sl) / (2.0 * sl) / self.raw_mass
        return out

    def cdf_y(self, y):
        y = np.clip(np.asarray(y, dtype=float), 0.0, None)
        out = np.ones_like(y)
        below = y < self.y_hi
        pos = below & (y > 0)
        out[below] = 0.0
        out[pos] = special.erfc(np.sqrt(-np.log(y[pos])) - 0.5) / self._ERFC_HALF
        return out

    def sample_y(self, u):
        root = special.erfcinv(np.asarray(u, dtype=float) * self._ERFC_HALF) + 0.5
        return np.exp(-root * root)


_FAMILIES = {
    "uniform": UniformFamily,
    "power": PowerFamily,
    "defniu": DefNiuFamily,
    "expsqrtlog": ExpSqrtLogFamily,
}


def make_family(name: str, **params) -> IntervalFamily:
    try:
        cls = _FAMILIES[name]
    except KeyError:
        raise ConfigError(f"unknown interval family {name!r}") from None
    return cls(**params)


# --------------------------------------------------------- inverse-CDF tables

@dataclass(frozen=True)
class OffsetTable:
    """Inverse-CDF table for offsets y, interpolated linearly in (ln K, ln y).

    ``logk`` is uniformly spaced, so the bracketing node is found by division.

    ``atom_y``/``atom_cum`` hold point masses (cumulative probabilities, in the
    order they are tried); the continuous part fills the remaining probability.
    """

    logy: np.ndarray
    logk: np.ndarray
    atom_y: np.ndarray
    atom_cum: np.ndarray

    def arrays(self):
        return self.logy, self.logk, self.atom_y, self.atom_cum


def build_offset_table(cdf: Callable[[np.ndarray], np.ndarray], y_hi: float,
                       points: int = 4097, log_floor: float = -46.0,
                       atoms: Sequence[tuple[float, float]] = ()) -> OffsetTable:
    """Tabulate a continuous offset law on (0, y_hi] with normalized ``cdf``.

    The grid starts where the CDF drops to e^log_floor, far below the
    smallest uniform (2^-54) the generators can emit.
    """
    lo, hi = -745.0, math.log(y_hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        k = float(cdf(np.array([math.exp(mid)]))[0])
        if k > 0 and math.log(k) > log_floor:
            hi = mid
        else:
            lo = mid
    logy = np.linspace(hi, math.log(y_hi), points)
    with np.errstate(divide="ignore"):
        logk = np.log(cdf(np.exp(logy)))
    logk[-1] = 0.0
    keep = np.concatenate([[True], np.diff(logk) > 0])
    logy, logk = logy[keep], logk[keep]
    # resample on a uniform ln K grid so lookups need no search
    grid = np.linspace(logk[0], 0.0, points)
    logy, logk = np.interp(grid, logk, logy), grid
    ay = np.array([a for a, _ in atoms], dtype=float)
    ap = np.array([p for _, p in atoms], dtype=float)
    return OffsetTable(logy, logk, ay, np.cumsum(ap))


def table_inverse(table: OffsetTable, u):
    lu = np.log(np.asarray(u, dtype=float))
    i = np.clip(np.searchsorted(table.logk, lu, side="right") - 1, 0, table.logk.size - 2)
    slope = (table.logy[i + 1] - table.logy[i]) / (table.logk[i + 1] - table.logk[i])
    return np.exp(table.logy[i] + (lu - table.logk[i]) * slope)


_TABLES: dict = {}


def _table_inverse(family: IntervalFamily, u):
    key = (family.name, tuple(sorted(family.params().items())))
    table = _TABLES.get(key)
    if table is None:
        table = build_offset_table(family.cdf_y, family.y_hi)
        _TABLES[key] = table
    return table_inverse(table, u)


# ---------------------------------------------------------------- components

class Component:
    kind = ""
    on_circle = False

    mass: float

    def params(self) -> dict:
        raise NotImplementedError

    def rule(self, spec: QuadratureSpec, level: int, frequency: float, y_range):
        """Nodes (z, w), weights including mass, and a mask of deep nodes."""
        raise NotImplementedError

    def moments(self, count: int):
        return None

    def sample(self, rng: np.random.Generator, size: int):
        raise NotImplementedError


@dataclass(frozen=True)
class Atom(Component):
    location: complex
    mass: float
    kind = "atom"

    def __post_init__(self):
        object.__setattr__(self, "location", complex(self.location))

    @property
    def on_circle(self) -> bool:
        return abs(abs(self.location) - 1.0) <= _ON_CIRCLE_TOL

    def offset(self, domain: str) -> complex:
        return (1.0 - self.location) if domain == DISK else self.location

    def params(self):
        return {"re": self.location.real, "im": self.location.imag}

    def moments(self, count):
        return self.location ** np.arange(count)

    def sample(self, rng, size):
        return np.full(size, self.location, dtype=complex)


@dataclass(frozen=True)
class IntervalDensity(Component):
    family: IntervalFamily
    mass: float
    kind = "interval"

    def params(self):
        return {"family": self.family.name, **self.family.params()}

    def rule(self, spec, level, frequency, y_range):
        lo, hi = self.family.y_lo, self.family.y_hi
        if y_range is not None:
            lo, hi = max(lo, y_range[0]), min(hi, y_range[1])
        ys, wts = [], []
        if lo < min(hi, 1.0):
            top = min(hi, 1.0)
            if lo <= 0.0 or top / lo > 2.0:
                y, wt = _log_offsets(top, lo, spec, level)
            else:
                y, wt = _gl_linear(np.linspace(lo, top, 5), level)
            ys.append(y)
            wts.append(wt)
        if hi > 1.0 and hi > lo:
            bottom = max(lo, 1.0)
            if hi >= 2.0:
                v, wt = _log_offsets(2.0 - bottom, 1e-16, spec, level)
                ys.append(2.0 - v)
            else:
                v, wt = _gl_linear(np.linspace(bottom, hi, 5), level)
                ys.append(v)
            wts.append(wt)
        if not ys:
            e = np.empty(0)
            return e.astype(complex), e.astype(complex), e, np.empty(0, dtype=bool)
        y = np.concatenate(ys)
        wt = np.concatenate(wts) * self.family.pdf_y(y) * self.mass
        w = y.astype(complex)
        return (1.0 - y).astype(complex), w, wt, y < _DEEP

    def moments(self, count):
        m = self.family.moments(count)
        return None if m is None else m.astype(complex)

    def sample(self, rng, size):
        y = self.family.sample_y(rng.random(size))
        return (1.0 - y).astype(complex)

    def sample_offsets(self, rng, size):
        return self.family.sample_y(rng.random(size))


@dataclass(frozen=True)
class ArcDensity(Component):
    """Uniform angle on the arc |theta| <= half_width of the unit circle."""

    half_width: float
    mass: float
    kind = "arc_uniform"
    on_circle = True

    def __post_init__(self):
        if not 0.0 < self.half_width <= math.pi:
            raise OutOfRange("arc half-width must lie in (0, pi]")

    @property
    def full(self) -> bool:
        return self.half_width >= math.pi

    def params(self):
        return {"half_width": self.half_width}

    def rule(self, spec, level, frequency, y_range):
        if self.full:
            m = (64 + 2 * int(frequency)) * 2 ** level
            theta, wt = _trapezoid_angles(m)
        else:
            wd = self.half_width
            nlin = max(4, int(math.ceil(2.0 * wd * (frequency + 1) / math.pi)))
            edges = _graded_edges(wd, 0.5, 1e-12, nlin)
            t, wt = _gl_linear(edges, level)
            theta = np.concatenate([-t[::-1], t])
            wt = np.concatenate([wt[::-1], wt]) / (2.0 * wd)
        z = np.exp(1j * theta)
        return z, _circle_offset(theta), wt * self.mass, np.zeros(theta.size, dtype=bool)

    def moments(self, count):
        k = np.arange(count, dtype=float)
        if self.full:
            out = np.zeros(count)
            out[0] = 1.0
            return out.astype(complex)
        return np.sinc(k * self.half_width / math.pi).astype(complex)

    def sample(self, rng, size):
        theta = self.half_width * (2.0 * rng.random(size) - 1.0)
        return np.exp(1j * theta)


@dataclass(frozen=True)
class PolarDensity(Component):
    """Radius uniform on [r0, r1] (r1 < 1), angle uniform on the circle."""

    r0: float
    r1: float
    mass: float
    kind = "annulus"

    def __post_init__(self):
        if not 0.0 <= self.r0 <= self.r1 < 1.0:
            raise OutOfRange("annulus needs 0 <= r0 <= r1 < 1")

    def params(self):
        return {"r0": self.r0, "r1": self.r1}

    def rule(self, spec, level, frequency, y_range):
        if self.r1 > self.r0:
            r, wr = _gl_linear(np.linspace(self.r0, self.r1, 5), level)
            wr = wr / (self.r1 - self.r0)
        else:
            r, wr = np.array([self.r0]), np.array([1.0])
        m = (64 + 2 * int(frequency)) * 2 ** level
        theta, wt = _trapezoid_angles(m)
        z = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
        wts = (wr[:, None] * wt[None, :]).ravel() * self.mass
        return z, 1.0 - z, wts, np.zeros(z.size, dtype=bool)

    def moments(self, count):
        out = np.zeros(count, dtype=complex)
        out[0] = 1.0
        return out

    def sample(self, rng, size):
        r = self.r0 + (self.r1 - self.r0) * rng.random(size)
        return r * np.exp(2j * math.pi * rng.random(size))


@dataclass(frozen=True)
class HalfPlaneDensity(Component):
    """Uniform density on the real segment [lo, hi] with hi <= 0."""

    lo: float
    hi: float
    mass: float
    kind = "real_uniform"

    def __post_init__(self):
        if not self.lo < self.hi <= 0.0:
            raise OutOfRange("real_uniform needs lo < hi <= 0")

    def params(self):
        return {"lo": self.lo, "hi": self.hi}

    def rule(self, spec, level, frequency, y_range):
        a, b = -self.hi, -self.lo
        if a <= 0.0 or b / a > 2.0:
            v, wt = _log_offsets(b, a, spec, level)
        else:
            v, wt = _gl_linear(np.linspace(a, b, 5), level)
        z = (-v).astype(complex)
        return z, z, wt * self.mass / (b - a), v < _DEEP

    def sample(self, rng, size):
        return (self.lo + (self.hi - self.lo) * rng.random(size)).astype(complex)


@dataclass(frozen=True)
class ImaginarySegmentDensity(Component):
    """Uniform density on the segment {i b : |b| <= half_height}."""

    half_height: float
    mass: float
    kind = "imag_uniform"

    def __post_init__(self):
        if not self.half_height > 0.0:
            raise OutOfRange("imaginary segment needs half_height > 0")

    def params(self):
        return {"half_height": self.half_height}

    def rule(self, spec, level, frequency, y_range):
        bb = self.half_height
        nlin = max(4, int(math.ceil(2.0 * bb * (frequency + 1) / math.pi)))
        b, wt = _gl_linear(_graded_edges(bb, 0.5, 1e-12, nlin), level)
        b = np.concatenate([-b[::-1], b])
        wt = np.concatenate([wt[::-1], wt]) * self.mass / (2.0 * bb)
        z = 1j * b
        return z, z, wt, np.zeros(b.size, dtype=bool)

    def sample(self, rng, size):
        return 1j * self.half_height * (2.0 * rng.random(size) - 1.0)


_DISK_KINDS = (Atom, IntervalDensity, ArcDensity, PolarDensity)
_HALF_KINDS = (Atom, HalfPlaneDensity, ImaginarySegmentDensity)


# ------------------------------------------------------------------- measure

@dataclass(frozen=True)
class SpectralMeasure:
    domain: str
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.domain not in _DOMAINS:
            raise ConfigError(f"unknown domain {self.domain!r}")
        comps = tuple(self.components)
        object.__setattr__(self, "components", comps)
        allowed = _DISK_KINDS if self.domain == DISK else _HALF_KINDS
        for c in comps:
            if not isinstance(c, allowed):
                raise DomainMismatch(f"{c.kind} component not allowed on {self.domain}")
            if not (c.mass >= 0.0 and math.isfinite(c.mass)):
                raise OutOfRange("component masses must be finite and nonnegative")
            if isinstance(c, Atom):
                z = c.location
                if self.domain == DISK and abs(z) > 1.0 + _ON_CIRCLE_TOL:
                    raise DomainMismatch(f"atom {z} outside the unit disk")
                if self.domain == HALF_PLANE and z.real > 0.0:
                    raise DomainMismatch(f"atom {z} outside the left half-plane")

    @property
    def total_mass(self) -> float:
        return math.fsum(c.mass for c in self.components)

    @property
    def is_disk(self) -> bool:
        return self.domain == DISK

    def interior(self) -> "SpectralMeasure":
        """Components off the unit circle (the part seen by the Poisson kernel)."""
        return SpectralMeasure(self.domain, tuple(c for c in self.components if not c.on_circle))

    def boundary(self) -> "SpectralMeasure":
        return SpectralMeasure(self.domain, tuple(c for c in self.components if c.on_circle))

    @property
    def is_real(self) -> bool:
        """True when the support lies in [-1, 1]."""
        for c in self.components:
            if isinstance(c, Atom):
                if c.location.imag != 0.0:
                    return False
            elif not isinstance(c, IntervalDensity):
                return False
        return True

    def __add__(self, other: "SpectralMeasure") -> "SpectralMeasure":
        if other.domain != self.domain:
            raise DomainMismatch("cannot add measures on different domains")
        return SpectralMeasure(self.domain, self.components + other.components)

    def scaled(self, factor: float) -> "SpectralMeasure":
        out = []
        for c in self.components:
            kw = {f: getattr(c, f) for f in c.__dataclass_fields__}
            kw["mass"] = c.mass * factor
            out.append(type(c)(**kw))
        return SpectralMeasure(self.domain, tuple(out))


# convenience constructors ---------------------------------------------------

def atom(location, mass: float = 1.0, domain: str = DISK) -> SpectralMeasure:
    return SpectralMeasure(domain, (Atom(complex(location), float(mass)),))


def interval(family: str = "uniform", mass: float = 1.0, **params) -> SpectralMeasure:
    return SpectralMeasure(DISK, (IntervalDensity(make_family(family, **params), float(mass)),))


def uniform_circle(mass: float = 1.0) -> SpectralMeasure:
    return SpectralMeasure(DISK, (ArcDensity(math.pi, float(mass)),))


def arc(half_width: float, mass: float = 1.0) -> SpectralMeasure:
    return SpectralMeasure(DISK, (ArcDensity(float(half_width), float(mass)),))


def annulus(r0: float, r1: float, mass: float = 1.0) -> SpectralMeasure:
    return SpectralMeasure(DISK, (PolarDensity(float(r0), float(r1), float(mass)),))


def imaginary_segment(half_height: float, mass: float = 1.0) -> SpectralMeasure:
    return SpectralMeasure(HALF_PLANE, (ImaginarySegmentDensity(float(half_height), float(mass)),))


def real_segment(lo: float, hi: float, mass: float = 1.0) -> SpectralMeasure:
    return SpectralMeasure(HALF_PLANE, (HalfPlaneDensity(float(lo), float(hi), float(mass)),))


# ---------------------------------------------------------------- quadrature

def _component_integral(comp, domain, f, spec, frequency, y_range):
    prev = None
    mass_scale = max(comp.mass, 1e-300)
    for level in range(spec.max_subdivisions + 1):
        z, w, wt, deep = comp.rule(spec, level, frequency, y_range)
        if z.size == 0:
            return 0.0
        with np.errstate(all="ignore"):
            vals = np.asarray(f(z, w))
        if np.isnan(vals).any():
            raise InvalidIntegrand(f"NaN from integrand on {comp.kind} component")
        with np.errstate(all="ignore"):
            contrib = vals * wt
            est = contrib.sum(axis=-1)
        if not np.all(np.isfinite(est)):
            raise Divergent(f"integral over {comp.kind} component overflowed")
        scale = np.max(np.abs(est))
        if scale > 1e12 * mass_scale:
            raise Divergent(f"integral over {comp.kind} component exceeds guard")
        if deep.any():
            tail = np.max(np.abs(contrib[..., deep].sum(axis=-1)))
            if tail > 1e-9 * scale + spec.atol:
                raise Divergent(f"integral over {comp.kind} component does not settle "
                                "toward the singular endpoint")
        if prev is not None:
            err = np.max(np.abs(est - prev))
            if err <= spec.rtol * scale + spec.atol:
                return est
        prev = est
    raise Divergent(f"refinement on {comp.kind} component did not converge "
                    f"(last change {err:.3g})")


def integrate(measure: SpectralMeasure, f: Callable, spec: QuadratureSpec | None = None, *,
              frequency: float = 0.0, y_range: tuple[float, float] | None = None,
              components: Sequence[Component] | None = None):
    """Integrate ``f(z, w)`` against ``measure``.

    ``f`` receives complex arrays whose last axis runs over nodes and may
    return an array with extra leading axes (a batch of integrands).
    ``frequency`` is the largest angular frequency of the integrand and sets
    the initial resolution on the circle and the imaginary axis.
    ``y_range`` restricts interval densities to offsets 1 - t in that range
    (atoms are not filtered).
    """
    spec = spec or DEFAULT_SPEC
    comps = measure.components if components is None else components
    total = 0.0
    for comp in comps:
        if comp.mass == 0.0:
            continue
        if isinstance(comp, Atom):
            z = np.array([comp.location])
            w = np.array([comp.offset(measure.domain)])
            with np.errstate(all="ignore"):
                val = np.asarray(f(z, w))[..., 0] * comp.mass
            if np.isnan(val).any():
                raise InvalidIntegrand(f"NaN from integrand at atom {comp.location}")
            if not np.all(np.isfinite(val)):
                raise Divergent(f"integrand infinite at atom {comp.location}")
            total = total + val
        else:
            total = total + _component_integral(comp, measure.domain, f, spec, frequency, y_range)
    if np.ndim(total) == 0:
        return complex(total) if np.iscomplexobj(total) else float(total)
    return total


# ------------------------------------------------------------------- regions

@dataclass(frozen=True)
class WedgeU:
    """{(1 - r) e^{iu} : 0 <= r <= |u| <= x} near z = 1."""

    x: float

    def __post_init__(self):
        if not 0.0 < self.x <= math.pi:
            raise OutOfRange("WedgeU needs x in (0, pi]")


@dataclass(frozen=True)
class BoxD:
    """{1 - 1/n <= |z| <= 1, |arg z| <= 1/n} near z = 1."""

    n: float

    def __post_init__(self):
        if not self.n >= 1:
            raise OutOfRange("BoxD needs n >= 1")


@dataclass(frozen=True)
class CtsWedgeU:
    """{a + ib : 0 <= -a <= |b| <= x} near 0 in the half-plane."""

    x: float

    def __post_init__(self):
        if not self.x > 0.0:
            raise OutOfRange("CtsWedgeU needs x > 0")


@dataclass(frozen=True)
class ArcGamma:
    """Open arc {e^{iy} : |y| < x} of the unit circle."""

    x: float


@dataclass(frozen=True)
class Interval:
    """Real points a < t <= b."""

    a: float
    b: float


@dataclass(frozen=True)
class WholeDomain:
    pass


def _angle_fraction(limit: float, half_width: float) -> float:
    return min(max(limit, 0.0), half_width) / half_width


def _ramp_integral(x: float, a: float, b: float) -> float:
    """int_0^x clip((u - a)/(b - a), 0, 1) du for 0 <= a <= b."""
    if x <= a:
        return 0.0
    if b <= a:
        return x - a
    if x <= b:
        return 0.5 * (x - a) ** 2 / (b - a)
    return 0.5 * (b - a) + (x - b)


def region_mass(measure: SpectralMeasure, region) -> float:
    """nu(region), with closed inequalities except where the region says otherwise."""
    cts_region = isinstance(region, CtsWedgeU)
    disk_region = isinstance(region, (WedgeU, BoxD, ArcGamma))
    if cts_region and measure.domain != HALF_PLANE:
        raise DomainMismatch("CtsWedgeU applies to half-plane measures")
    if disk_region and measure.domain != DISK:
        raise DomainMismatch(f"{type(region).__name__} applies to disk measures")
    if isinstance(region, WholeDomain):
        return measure.total_mass
    total = []
    for c in measure.components:
        total.append(c.mass * _component_fraction(c, measure.domain, region))
    return math.fsum(total)


def _component_fraction(c, domain, region) -> float:
    if isinstance(c, Atom):
        return 1.0 if _atom_in(c, domain, region) else 0.0
    if isinstance(region, WedgeU):
        if isinstance(c, IntervalDensity):
            # real points: t > 0 need r = 0 (null); t < 0 sit at angle pi
            return float(region.x >= math.pi) * (1.0 - float(c.family.cdf_y(np.array([1.0]))[0]))
        if isinstance(c, ArcDensity):
            return _angle_fraction(region.x, c.half_width)
        if isinstance(c, PolarDensity):
            a, b = 1.0 - c.r1, 1.0 - c.r0
            x = min(region.x, math.pi)
            return _ramp_integral(x, a, b) / math.pi
    if isinstance(region, BoxD):
        h = 1.0 / region.n
        if isinstance(c, IntervalDensity):
            return float(c.family.cdf_y(np.array([min(h, 1.0)]))[0])
        if isinstance(c, ArcDensity):
            return _angle_fraction(h, c.half_width)
        if isinstance(c, PolarDensity):
            if c.r1 > c.r0:
                rad = min(max((c.r1 - (1.0 - h)) / (c.r1 - c.r0), 0.0), 1.0)
            else:
                rad = float(c.r0 >= 1.0 - h)
            return rad * min(h, math.pi) / math.pi
    if isinstance(region, ArcGamma):
        if isinstance(c, ArcDensity):
            return _angle_fraction(region.x, c.half_width)
        return 0.0
    if isinstance(region, Interval):
        if isinstance(c, IntervalDensity):
            cdf = c.family.cdf_y
            hi_y, lo_y = 1.0 - region.a, 1.0 - region.b
            return float(cdf(np.array([hi_y]))[0] - cdf(np.array([lo_y]))[0])
        return 0.0
    if isinstance(region, CtsWedgeU):
        if isinstance(c, ImaginarySegmentDensity):
            return _angle_fraction(region.x, c.half_height)
        return 0.0
    raise TypeError(f"unsupported region {region!r}")


def _atom_in(c: Atom, domain: str, region) -> bool:
    z = c.location
    if isinstance(region, WedgeU):
        w = 1.0 - z
        r = 1.0 - abs(z)
        if abs(z) <= 1.0 and abs(z) > 0.5:
            r = (2.0 * w.real - abs(w) ** 2) / (1.0 + abs(z))
        u = abs(math.atan2(z.imag, z.real))
        return r <= u <= region.x
    if isinstance(region, BoxD):
        h = 1.0 / region.n
        return abs(z) >= 1.0 - h and abs(math.atan2(z.imag, z.real)) <= h
    if isinstance(region, ArcGamma):
        return c.on_circle and abs(math.atan2(z.imag, z.real)) < region.x
    if isinstance(region, Interval):
        return z.imag == 0.0 and region.a < z.real <= region.b
    if isinstance(region, CtsWedgeU):
        return 0.0 <= -z.real <= abs(z.imag) <= region.x
    raise TypeError(f"unsupported region {region!r}")


# ------------------------------------------------------------------ sampling

def sample_points(measure: SpectralMeasure, rng: np.random.Generator, size: int):
    """Draw ``size`` points from nu / nu(domain).

    Returns ``(z, w)`` with ``w`` the accurate offset (1 - z on the disk).
    """
    total = measure.total_mass
    if not total > 0.0:
        raise EmptyMeasure("cannot sample from a zero measure")
    masses = np.array([c.mass for c in measure.components]) / total
    idx = rng.choice(len(masses), size=size, p=masses)
    z = np.empty(size, dtype=complex)
    w = np.empty(size, dtype=complex)
    for k, comp in enumerate(measure.components):
        sel = np.flatnonzero(idx == k)
        if sel.size == 0:
            continue
        if isinstance(comp, IntervalDensity):
            y = comp.sample_offsets(rng, sel.size)
            z[sel] = 1.0 - y
            w[sel] = y
            continue
        pts = comp.sample(rng, sel.size)
        z[sel] = pts
        if measure.domain == DISK:
            if comp.on_circle and isinstance(comp, ArcDensity):
                w[sel] = _circle_offset(np.angle(pts))
            else:
                w[sel] = 1.0 - pts
        else:
            w[sel] = pts
    return z, w


def sample_point(measure: SpectralMeasure, rng: np.random.Generator) -> complex:
    z, _ = sample_points(measure, rng, 1)
    return complex(z[0])


# ------------------------------------------------------------- serialization

_KIND_PARAMS = {
    "atom": ("re", "im"),
    "interval": None,
    "arc_uniform": ("half_width",),
    "annulus": ("r0", "r1"),
    "real_uniform": ("lo", "hi"),
    "imag_uniform": ("half_height",),
}


def component_to_dict(c: Component) -> dict:
    return {"kind": c.kind, "params": dict(c.params()), "mass": c.mass}


def measure_to_dict(measure: SpectralMeasure) -> dict:
    return {"domain": measure.domain,
            "components": [component_to_dict(c) for c in measure.components]}


def _num(params: dict, key: str, default=None) -> float:
    if key not in params:
        if default is None:
            raise ConfigError(f"missing parameter {key!r}")
        return default
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"parameter {key!r} must be a number")
    return float(v)


def component_from_dict(doc: dict) -> Component:
    if not isinstance(doc, dict):
        raise ConfigError("component must be an object")
    kind = doc.get("kind")
    params = doc.get("params", {})
    if kind not in _KIND_PARAMS:
        raise ConfigError(f"unknown component kind {kind!r}")
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    mass = _num(doc, "mass")
    try:
        if kind == "atom":
            return Atom(complex(_num(params, "re"), _num(params, "im", 0.0)), mass)
        if kind == "interval":
            fam = dict(params)
            name = fam.pop("family", None)
            if not isinstance(name, str):
                raise ConfigError("interval component needs a family name")
            return IntervalDensity(make_family(name, **{k: _num(fam, k) for k in fam}), mass)
        if kind == "arc_uniform":
            return ArcDensity(_num(params, "half_width", math.pi), mass)
        if kind == "annulus":
            return PolarDensity(_num(params, "r0"), _num(params, "r1"), mass)
        if kind == "real_uniform":
            return HalfPlaneDensity(_num(params, "lo"), _num(params, "hi"), mass)
        return ImaginarySegmentDensity(_num(params, "half_height"), mass)
    except (TypeError, OutOfRange) as exc:
        raise ConfigError(f"bad {kind} component: {exc}") from exc


def measure_from_dict(doc: dict) -> SpectralMeasure:
    if not isinstance(doc, dict):
        raise ConfigError("measure must be an object")
    comps = doc.get("components")
    if not isinstance(comps, list):
        raise ConfigError("measure needs a components list")
    try:
        return SpectralMeasure(doc.get("domain", DISK),
                               tuple(component_from_dict(c) for c in comps))
    except (DomainMismatch, OutOfRange) as exc:
        raise ConfigError(str(exc)) from exc
