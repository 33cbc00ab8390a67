"""Continuous-time analogues for measures on the closed left half-plane."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sint

from . import _numerics as nx
from .errors import Divergent, DomainMismatch, OutOfRange
from .measures import HALF_PLANE, Atom, CtsWedgeU, QuadratureSpec, SpectralMeasure, integrate, region_mass
from .variance_class import Verdict


def _require_half_plane(measure: SpectralMeasure):
    if measure.domain != HALF_PLANE:
        raise DomainMismatch("operation needs a left-half-plane measure")


def _max_imag(measure: SpectralMeasure) -> float:
    top = 0.0
    for c in measure.components:
        if isinstance(c, Atom):
            top = max(top, abs(c.location.imag))
        elif hasattr(c, "half_height"):
            top = max(top, c.half_height)
    return top


def cts_covariance(measure: SpectralMeasure, t: float, spec: QuadratureSpec | None = None) -> float:
    """Re of the integral of e^{zt}."""
    _require_half_plane(measure)
    if t < 0:
        raise OutOfRange("t must be nonnegative")
    val = complex(integrate(measure, lambda z, w: np.exp(z * t), spec,
                            frequency=t * _max_imag(measure)))
    if abs(val.imag) > 1e-9 * max(1.0, measure.total_mass):
        raise ArithmeticError("covariance has an imaginary part; measure not symmetric")
    return val.real


def varsigma_squared(measure: SpectralMeasure, spec: QuadratureSpec | None = None) -> float:
    """-2 times the integral of Re(1/z); ``math.inf`` if divergent or an atom sits at 0."""
    _require_half_plane(measure)
    for c in measure.components:
        if isinstance(c, Atom) and c.location == 0 and c.mass > 0:
            return math.inf

    def f(z, w):
        # Re(1/z) = x/|z|^2, scaled to avoid overflow for tiny |z|
        m = np.abs(z)
        return (z.real / m) / m

    try:
        return -2.0 * complex(integrate(measure, f, spec)).real
    except Divergent:
        return math.inf


def cts_variance(measure: SpectralMeasure, T: float, spec: QuadratureSpec | None = None) -> float:
    """var(S_T) = 2 T^2 times the integral of Re phi2(zT), phi2(u) = (e^u - 1 - u)/u^2."""
    _require_half_plane(measure)
    if T < 0:
        raise OutOfRange("T must be nonnegative")
    if T == 0:
        return 0.0
    val = integrate(measure, lambda z, w: nx.phi2(z * T).real, spec,
                    frequency=T * _max_imag(measure))
    return 2.0 * T * T * complex(val).real


def cts_variance_by_time_integral(measure: SpectralMeasure, T: float,
                                  spec: QuadratureSpec | None = None) -> float:
    """2 int_0^T (T - s) cov(s) ds by adaptive quadrature over s."""
    _require_half_plane(measure)
    limit = max(200, int(4 * T * _max_imag(measure)) + 50)
    val, _ = sint.quad(lambda s: (T - s) * cts_covariance(measure, s, spec), 0.0, T,
                       epsabs=1e-13, epsrel=1e-11, limit=limit)
    return 2.0 * val


@dataclass
class CtsReport:
    varsigma2: float
    C: float
    L_pred: float
    L_obs: float
    verdict: Verdict
    alpha_hat: float | None = None
    rows: list = field(default_factory=list)
    wedge_profile: list = field(default_factory=list)


def cts_excess_constant(measure: SpectralMeasure) -> tuple[float, list]:
    """lim nu(U_x)/x from a straight-line fit over x = 2^-k, k = 4..20."""
    xs = 2.0 ** -np.arange(4, 21)
    vals = np.array([region_mass(measure, CtsWedgeU(float(x))) / x for x in xs])
    if np.ptp(vals[-8:]) == 0.0:
        c = float(vals[-1])
    else:
        c = float(np.polyfit(xs[-8:], vals[-8:], 1)[1])
    return c, list(zip(xs.tolist(), vals.tolist()))


def cts_classify(measure: SpectralMeasure, T_grid=None, spec: QuadratureSpec | None = None,
                 rtol: float = 0.02) -> CtsReport:
    """Predict lim var(S_T)/T = varsigma^2 + pi C and compare with the T-grid."""
    _require_half_plane(measure)
    T = np.asarray(T_grid if T_grid is not None else np.geomspace(10.0, 1e4, 10), dtype=float)
    if T.size < 8:
        raise OutOfRange("T-grid needs at least 8 points")
    ratios = np.diff(np.log(T))
    if np.any(ratios <= 0) or np.ptp(ratios) > 1e-9 * abs(ratios).max():
        raise OutOfRange("T-grid must be geometric and increasing")
    s2 = varsigma_squared(measure, spec)
    C, wprof = cts_excess_constant(measure)
    var = np.array([cts_variance(measure, float(t), spec) for t in T])
    per_t = var / T
    rows = list(zip(T.tolist(), var.tolist(), per_t.tolist()))
    top = T >= T[T.size // 2]
    # var/T ~ L + c/T over the upper half of the grid
    design = np.vstack([np.ones(top.sum()), 1.0 / T[top]]).T
    L_obs = float(np.linalg.lstsq(design, per_t[top], rcond=None)[0][0])
    L_pred = s2 + math.pi * C
    floor = 1e-3 * measure.total_mass
    if math.isfinite(L_pred) and abs(L_pred - L_obs) <= rtol * abs(L_pred) + floor:
        verdict = Verdict.DEGENERATE if L_pred <= floor else Verdict.LINEAR
        return CtsReport(s2, C, L_pred, L_obs, verdict, rows=rows, wedge_profile=wprof)
    pos = var[top] > 0
    alpha = None
    if pos.sum() >= 2:
        alpha = float(np.polyfit(np.log(T[top][pos]), np.log(var[top][pos]), 1)[0])
    verdict = Verdict.REGULAR if alpha is not None and alpha > 1.0 + rtol else Verdict.INCONCLUSIVE
    return CtsReport(s2, C, L_pred, L_obs, verdict, alpha_hat=alpha, rows=rows, wedge_profile=wprof)
