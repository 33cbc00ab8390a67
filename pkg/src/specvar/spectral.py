"""Discrete-time spectral functionals of a measure on the unit disk."""

from __future__ import annotations

import math

import numpy as np

from . import _numerics as nx
from .errors import Divergent, DomainMismatch, OutOfRange
from .measures import (
    DISK,
    _gl_linear,
    ArcDensity,
    Atom,
    PolarDensity,
    QuadratureSpec,
    SpectralMeasure,
    integrate,
)

TWO_PI = 2.0 * math.pi
_IMAG_TOL = 1e-9


def _require_disk(measure: SpectralMeasure):
    if measure.domain != DISK:
        raise DomainMismatch("operation needs a disk-domain measure")


def _real(value, what: str, scale: float = 1.0) -> float:
    value = complex(value)
    if abs(value.imag) > _IMAG_TOL * max(scale, abs(value.real), 1.0):
        raise ArithmeticError(f"{what} has imaginary part {value.imag:.3g}; "
                              "measure is not conjugation symmetric")
    return value.real


def covariance(measure: SpectralMeasure, n: int, spec: QuadratureSpec | None = None) -> float:
    """cov(X_0, X_n) = Re of the n-th moment of the measure."""
    _require_disk(measure)
    if n < 0:
        raise OutOfRange("lag must be nonnegative")
    val = integrate(measure, lambda z, w: nx.power(w, n), spec, frequency=n)
    return _real(val, "covariance", measure.total_mass)


def moments(measure: SpectralMeasure, count: int, spec: QuadratureSpec | None = None) -> np.ndarray:
    """Covariances cov(0), ..., cov(count - 1).

    Components with closed-form moments use them; the rest are integrated
    with the lag handled in chunks.
    """
    _require_disk(measure)
    out = np.zeros(count, dtype=complex)
    for comp in measure.components:
        if comp.mass == 0.0:
            continue
        m = comp.moments(count)
        if m is None:
            m = _quadrature_moments(measure, comp, count, spec)
        out += comp.mass * m
    return out.real


def _quadrature_moments(measure, comp, count, spec, chunk: int = 256):
    res = np.empty(count, dtype=complex)
    for start in range(0, count, chunk):
        ks = np.arange(start, min(count, start + chunk), dtype=float)

        def f(z, w, ks=ks):
            return np.exp(ks[:, None] * nx.clog1p(-w)[None, :])

        res[start:start + ks.size] = integrate(measure, f, spec, frequency=ks[-1],
                                               components=[comp])
    return res / comp.mass


def _sigma_integrand(z, w):
    # (2 Re w - |w|^2)/|w|^2 arranged so that tiny offsets do not underflow
    m = np.abs(w)
    return (2.0 * (w.real / m) - m) / m


def sigma_squared(measure: SpectralMeasure, spec: QuadratureSpec | None = None) -> float:
    """Integral of (1 - |z|^2)/|1 - z|^2; ``math.inf`` when it diverges.

    Components on the unit circle contribute nothing (the numerator vanishes).
    """
    _require_disk(measure)
    inner = measure.interior()
    for c in inner.components:
        if isinstance(c, Atom) and c.mass > 0 and c.location == 1.0:
            return math.inf
    try:
        return _real(integrate(inner, _sigma_integrand, spec), "sigma^2")
    except Divergent:
        return math.inf


def _poisson_batch(t: np.ndarray):
    # 1 - z e^{it} = a + w e^{it} with a = 1 - e^{it}; its squared modulus is
    # |a|^2 - 2 Re(a w) + |w|^2, which only cancels when z is on the circle.
    sh = np.sin(0.5 * t)
    ar = (2.0 * sh * sh)[:, None]
    ai = (-np.sin(t))[:, None]
    a2 = ar * ar + ai * ai

    def f(z, w):
        wr, wi = w.real[None, :], w.imag[None, :]
        cross = ar * wr
        if np.any(wi):
            cross = cross - ai * wi
        den = a2 - 2.0 * cross + (wr * wr + wi * wi)
        return nx.one_minus_abs2(w)[None, :] / den

    return f


def spectral_density(measure: SpectralMeasure, t, spec: QuadratureSpec | None = None):
    """Poisson-kernel density f(t) of the absolutely continuous part."""
    _require_disk(measure)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if spec is None:
        # the kernel at angle t only resolves offsets down to about t^2
        absd = np.abs(t_arr)
        wrapped = np.abs(np.remainder(t_arr + math.pi, TWO_PI) - math.pi)
        gap = np.where(absd <= math.pi, absd, wrapped).min()
        spec = QuadratureSpec(depth=min(1e-40, max(1e-300, gap * gap)))
    from .kernels import backend

    out = np.zeros(t_arr.size)
    for comp in measure.interior().components:
        if comp.mass == 0.0:
            continue
        if isinstance(comp, PolarDensity):
            # rotation invariant: the Poisson kernel averages to 1 over angles
            out += comp.mass
            continue
        if isinstance(comp, Atom):
            w = np.array([1.0 - comp.location])
            wt = np.array([comp.mass * nx.one_minus_abs2(w)[0]])
            out += backend.poisson_sums(t_arr, w.real.copy(), w.imag.copy(), wt)
            continue
        prev = None
        for level in range(spec.max_subdivisions + 1):
            _, w, wt, _ = comp.rule(spec, level, 0.0, None)
            weight = wt * nx.one_minus_abs2(w)
            val = backend.poisson_sums(t_arr, np.ascontiguousarray(w.real),
                                       np.ascontiguousarray(w.imag), weight)
            if prev is not None and np.all(np.abs(val - prev) <= spec.rtol * np.abs(val) + spec.atol):
                break
            prev = val
        else:
            raise Divergent("Poisson-kernel quadrature did not converge")
        out += val
    out /= TWO_PI
    return out if np.ndim(t) else float(out[0])


# ---------------------------------------------------- distribution function

def _phi_antiderivative(s, r, one_minus_r):
    """Antiderivative in s of (1/2pi)(1 - r^2)/(1 - 2 r cos s + r^2)."""
    sh = np.sin(0.5 * s)
    den = one_minus_r + 2.0 * r * sh * sh   # 1 - r cos s, written without cancellation
    return s / TWO_PI + np.arctan2(r * np.sin(s), den) / math.pi


def _kernel_cdf_batch(a: float, b: float):
    """Integrand z -> int_a^b of the Poisson kernel of z, in closed form.

    For z = r e^{i phi} the kernel in t depends on s = t + phi, and
    s/2pi + atan2(r sin s, 1 - r cos s)/pi is a continuous antiderivative
    for r < 1 (the second argument stays positive).
    """

    def f(z, w):
        r = np.abs(z)
        one_minus_r = nx.one_minus_abs2(w) / (1.0 + r)
        phi = np.arctan2(z.imag, z.real)
        return (_phi_antiderivative(b + phi, r, one_minus_r)
                - _phi_antiderivative(a + phi, r, one_minus_r))

    return f


def _gamma_arc_mass(measure: SpectralMeasure, a: float, b: float) -> float:
    """Mass of the boundary part on the closed arc of angles [a, b] (a <= b, b - a <= 2pi)."""
    total = 0.0
    for c in measure.boundary().components:
        if isinstance(c, Atom):
            ang = math.atan2(c.location.imag, c.location.real)
            for shift in (-TWO_PI, 0.0, TWO_PI):
                if a <= ang + shift <= b:
                    total += c.mass
                    break
        elif isinstance(c, ArcDensity):
            lo, hi = -c.half_width, c.half_width
            cover = 0.0
            for shift in (-TWO_PI, 0.0, TWO_PI):
                cover += max(0.0, min(b, hi + shift) - max(a, lo + shift))
            total += c.mass * min(cover, 2.0 * c.half_width) / (2.0 * c.half_width)
    return total


def _kernel_between(measure, a, b, spec):
    inner = measure.interior()
    if not inner.components:
        return 0.0
    return _real(integrate(inner, _kernel_cdf_batch(a, b), spec), "distribution")


# Poisson-kernel values at angles >= 1e-20 ignore offsets below 1e-40.
_KERNEL_SPEC = QuadratureSpec(depth=1e-40)
_T_FLOOR = 1e-20


def _graded_angles(lo: float, hi: float, extra: int = 64) -> np.ndarray:
    """Panel edges on [lo, hi], geometric toward any endpoint at angle 0."""
    seg = [lo, hi]
    for end, sign in ((lo, 1.0), (hi, -1.0)):
        if end == 0.0:
            g = hi - lo
            while g > _T_FLOOR:
                g *= 0.25
                seg.append(end + sign * g)
    seg.extend(np.linspace(lo, hi, extra + 1)[1:-1])
    return np.unique(seg)


def _angle_edges(a: float, b: float, extra: int = 64) -> np.ndarray:
    cuts = sorted({a, b} | ({0.0} if a < 0.0 < b else set()))
    parts = [_graded_angles(lo, hi, extra) for lo, hi in zip(cuts[:-1], cuts[1:])]
    return np.unique(np.concatenate(parts))


def _density_quadrature(measure, edges, weights_fn, spec, tol):
    """Integrate f(t) * weights_fn(t) over panels ``edges`` with level doubling."""
    inner = measure.interior()
    prev = None
    for level in range(5):
        t, wt = _gl_linear(edges, level)
        dens = spectral_density(inner, t, spec)
        val = np.asarray(weights_fn(t) @ (dens * wt))
        if prev is not None and np.max(np.abs(val - prev)) <= tol:
            return val
        prev = val
    raise Divergent("density quadrature in t did not converge")


def _density_between(measure, a, b, spec):
    """int_a^b f(t) dt by Gauss-Legendre in t, graded toward angle 0."""
    inner = measure.interior()
    if not inner.components or b <= a:
        return 0.0
    tol = 1e-10 * inner.total_mass
    return float(_density_quadrature(inner, _angle_edges(a, b), lambda t: np.ones((1, t.size)),
                                     spec, tol)[0])


def spectral_cdf(measure: SpectralMeasure, x: float, method: str = "kernel",
                 spec: QuadratureSpec | None = None) -> float:
    """F(x) = int_0^x f(t) dt + mass of the boundary part on angles [0, x]."""
    _require_disk(measure)
    if not 0.0 <= x <= math.pi + 1e-15:
        raise OutOfRange("x must lie in [0, pi]")
    if method == "kernel":
        ac = _kernel_between(measure, 0.0, x, spec)
    elif method == "density":
        ac = _density_between(measure, 0.0, x, spec)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ac + _gamma_arc_mass(measure, 0.0, x)


def arc_mass(measure: SpectralMeasure, x: float, method: str = "kernel",
             spec: QuadratureSpec | None = None) -> float:
    """G(x): spectral mass of the closed arc of angles [-x, x]."""
    _require_disk(measure)
    if not 0.0 <= x <= math.pi + 1e-15:
        raise OutOfRange("x must lie in [0, pi]")
    if method == "kernel":
        ac = _kernel_between(measure, -x, x, spec)
    elif method == "density":
        ac = _density_between(measure, -x, x, spec)
    else:
        raise ValueError(f"unknown method {method!r}")
    if x >= math.pi:
        return ac + measure.boundary().total_mass
    return ac + _gamma_arc_mass(measure, -x, x)


def fourier_coefficients(measure: SpectralMeasure, lags, spec: QuadratureSpec | None = None):
    """Re of int e^{int} F(dt) for each n in ``lags``.

    Independent of :func:`covariance`: the absolutely continuous part goes
    through :func:`spectral_density` on a t-grid graded toward angle 0, and
    the boundary part is summed from its atoms and arcs.
    """
    _require_disk(measure)
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    out = np.zeros(lags.size)
    inner = measure.interior()
    if inner.components:
        edges = _angle_edges(-math.pi, math.pi, extra=64 + 4 * int(lags.max()))
        tol = 1e-11 * inner.total_mass
        out += _density_quadrature(inner, edges, lambda t: np.cos(lags[:, None] * t[None, :]),
                                   spec, tol)
    for c in measure.boundary().components:
        if isinstance(c, Atom):
            out += c.mass * (c.location ** lags).real
        elif isinstance(c, ArcDensity):
            if c.full:
                out += c.mass * (lags == 0)
            else:
                out += c.mass * np.sinc(lags * c.half_width / math.pi)
    return out


# -------------------------------------------------------------- tail V(x)

def V_tail(measure: SpectralMeasure, x: float, spec: QuadratureSpec | None = None) -> float:
    """Integral of 1/(1 - t) over t in [-1, 1 - x]."""
    _require_disk(measure)
    if not measure.is_real:
        raise DomainMismatch("V_tail needs a measure supported on [-1, 1]")
    if not 0.0 < x < 1.0:
        raise OutOfRange("x must lie in (0, 1)")
    total = 0.0
    dens = []
    for c in measure.components:
        if isinstance(c, Atom):
            y = 1.0 - c.location.real
            if y >= x:
                total += c.mass / y
        else:
            dens.append(c)
    if dens:
        val = integrate(measure, lambda z, w: 1.0 / w, spec, y_range=(x, 2.0), components=dens)
        total += complex(val).real
    return total


def V_limit(measure: SpectralMeasure, spec: QuadratureSpec | None = None) -> float:
    """Integral of 1/(1 - t) over the whole measure; ``math.inf`` if infinite."""
    _require_disk(measure)
    if not measure.is_real:
        raise DomainMismatch("needs a measure supported on [-1, 1]")
    try:
        return complex(integrate(measure, lambda z, w: 1.0 / w, spec)).real
    except (Divergent, ZeroDivisionError):
        return math.inf


# ------------------------------------------------------- Fejer functionals

EXPLICIT_SUM_MAX = 4096


def fejer_functional(measure: SpectralMeasure, n: int,
                     spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """(I_n, M_n) with M_n = int |1 - z^n|^2/|1 - z|^2 and I_n = M_n / n."""
    _require_disk(measure)
    if n < 1:
        raise OutOfRange("n must be >= 1")
    if n <= EXPLICIT_SUM_MAX:
        from .kernels import backend

        def f(z, w):
            last, _ = backend.geometric_energy(np.ascontiguousarray(z.real),
                                               np.ascontiguousarray(z.imag), n)
            return last
    else:
        def f(z, w):
            g = nx.geometric_sum(w, n)
            return g.real * g.real + g.imag * g.imag

    m = complex(integrate(measure, f, spec, frequency=n)).real
    return m / n, m


def variance_generating(measure: SpectralMeasure, lam: complex,
                        spec: QuadratureSpec | None = None) -> complex:
    """Sum over n of var(S_n) lam^n, from the symmetrized Cauchy-type integral."""
    _require_disk(measure)
    lam = complex(lam)
    if not abs(lam) < 1.0:
        raise OutOfRange("|lambda| must be < 1")

    def f(z, w):
        zc = np.conj(z)
        return 0.5 * ((1 + lam * z) / (1 - lam * z) + (1 + lam * zc) / (1 - lam * zc))

    return lam / (1.0 - lam) ** 2 * complex(integrate(measure, f, spec))
