"""Variance of partial sums and classification of its growth."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate as sint
from scipy import special

from . import _numerics as nx
from . import spectral
from .errors import (
    DomainMismatch,
    MethodDisagreement,
    OutOfRange,
    PreconditionFailed,
    SigmaInfinite,
)
from .measures import BoxD, Interval, QuadratureSpec, SpectralMeasure, WedgeU, integrate, region_mass

EXPLICIT_MAX = 4096
AGREEMENT_RTOL = 1e-9


# ----------------------------------------------------------- constants

@dataclass(frozen=True)
class TauberianConstants:
    alpha: float
    C: float | None
    c: float | None
    d: float | None


def C_alpha(alpha: float) -> float:
    """Gamma(1+a) sin(a pi/2) / (pi (2-a)) for a in (0, 2)."""
    if not 0.0 < alpha < 2.0:
        raise OutOfRange("C(alpha) needs alpha in (0, 2)")
    return math.gamma(1.0 + alpha) * math.sin(0.5 * alpha * math.pi) / (math.pi * (2.0 - alpha))


def c_alpha(alpha: float) -> float:
    """a (2-a) / (2 Gamma(3-a)) for a in [1, 2)."""
    if not 1.0 <= alpha < 2.0:
        raise OutOfRange("c_alpha needs alpha in [1, 2)")
    return alpha * (2.0 - alpha) / (2.0 * math.gamma(3.0 - alpha))


def d_alpha(alpha: float) -> float:
    """a (a-1) / (2 Gamma(3-a)) for a in (1, 2)."""
    if not 1.0 < alpha < 2.0:
        raise OutOfRange("d_alpha needs alpha in (1, 2)")
    return alpha * (alpha - 1.0) / (2.0 * math.gamma(3.0 - alpha))


def growth_constants(alpha: float) -> TauberianConstants:
    """All constants defined at ``alpha`` (None where out of range)."""
    if not 0.0 < alpha < 2.0:
        raise OutOfRange("alpha must lie in (0, 2)")

    def maybe(fn):
        try:
            return fn(alpha)
        except OutOfRange:
            return None

    return TauberianConstants(alpha, C_alpha(alpha), maybe(c_alpha), maybe(d_alpha))


# ----------------------------------------------------- variance routes

def _require_disk(measure):
    if not measure.is_disk:
        raise DomainMismatch("variance routes need a disk-domain measure")


def variance_by_covariances(measure: SpectralMeasure, n: int,
                            spec: QuadratureSpec | None = None) -> float:
    """n c_0 + 2 sum_{k=1}^{n-1} (n-k) c_k, written as 2 sum_{k<=n} C(k) - n c_0."""
    _require_disk(measure)
    c = spectral.moments(measure, n, spec)
    prefix = np.cumsum(c)
    return float(2.0 * prefix.sum() - n * c[0])


def variance_sequence(measure: SpectralMeasure, N: int,
                      spec: QuadratureSpec | None = None) -> np.ndarray:
    """var(S_n) for n = 1..N from one pass of prefix sums over the covariances."""
    _require_disk(measure)
    c = spectral.moments(measure, N, spec)
    return 2.0 * np.cumsum(np.cumsum(c)) - np.arange(1, N + 1) * c[0]


def _explicit_kernel(n: int):
    from .kernels import backend

    def f(z, w):
        return backend.variance_power_sum(np.ascontiguousarray(z.real),
                                          np.ascontiguousarray(z.imag), n)
    return f


def variance_by_kernel(measure: SpectralMeasure, n: int,
                       spec: QuadratureSpec | None = None) -> float:
    """Integral of n + sum_{k=1}^{n-1} (n-k)(z^k + conj z^k).

    Explicit power sums up to n = 4096, the closed form above that.
    """
    _require_disk(measure)
    if n <= EXPLICIT_MAX:
        f = _explicit_kernel(n)
    else:
        def f(z, w):
            return nx.variance_kernel(w, n)
    return float(complex(integrate(measure, f, spec, frequency=n)).real)


def variance_by_martingale(measure: SpectralMeasure, n: int,
                           spec: QuadratureSpec | None = None) -> float:
    """Integral of |z|^2 |G_n|^2 + (1 - |z|^2) sum_{j=1}^n |G_j|^2."""
    _require_disk(measure)
    if n > EXPLICIT_MAX:
        raise OutOfRange(f"martingale route is explicit only up to n = {EXPLICIT_MAX}")
    from .kernels import backend

    def f(z, w):
        last, acc = backend.geometric_energy(np.ascontiguousarray(z.real),
                                             np.ascontiguousarray(z.imag), n)
        return (z.real ** 2 + z.imag ** 2) * last + nx.one_minus_abs2(w) * acc

    return float(complex(integrate(measure, f, spec, frequency=n)).real)


_ROUTES = {
    "covariance-sum": variance_by_covariances,
    "kernel": variance_by_kernel,
    "martingale": variance_by_martingale,
}


def variance_routes(measure: SpectralMeasure, n: int, spec: QuadratureSpec | None = None) -> dict:
    return {name: fn(measure, n, spec) for name, fn in _ROUTES.items()}


def variance_of_partial_sum(measure: SpectralMeasure, n: int, method: str = "covariance-sum",
                            spec: QuadratureSpec | None = None) -> float:
    """var(S_n). With ``method='all'`` the three routes must agree first."""
    if n < 1:
        raise OutOfRange("n must be >= 1")
    if method == "all":
        vals = variance_routes(measure, n, spec)
        ref = max(abs(v) for v in vals.values())
        spread = max(vals.values()) - min(vals.values())
        tol = AGREEMENT_RTOL if n <= 64 else 1e-7
        if spread > tol * max(ref, measure.total_mass):
            raise MethodDisagreement(f"variance routes disagree at n={n}: {vals}")
        return vals["covariance-sum"]
    try:
        return _ROUTES[method](measure, n, spec)
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None


# ------------------------------------------------------ classification

class Verdict(str, enum.Enum):
    LINEAR = "LINEAR"
    REGULAR = "REGULAR"
    SLOWLY_VARYING_MULTIPLE = "SLOWLY-VARYING-MULTIPLE"
    DEGENERATE = "DEGENERATE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class GrowthReport:
    alpha_hat: float
    h_samples: list
    verdict: Verdict
    K: float | None = None
    alpha: float | None = None
    diagnostics: dict = field(default_factory=dict)


def _dyadic(N: int) -> np.ndarray:
    kmax = int(math.floor(math.log2(N)))
    return 2 ** np.arange(0, kmax + 1)


def classify_growth(source, N: int = 2 ** 20, spec: QuadratureSpec | None = None) -> GrowthReport:
    """Classify var(S_n) growth on the dyadic grid up to N.

    ``source`` is a disk measure or a precomputed array of var(S_n), n = 1..N.
    """
    if N < 2 ** 10:
        raise OutOfRange("N must be at least 2^10")
    if isinstance(source, SpectralMeasure):
        seq = variance_sequence(source, N, spec)
    else:
        seq = np.asarray(source, dtype=float)
        if seq.size < N:
            raise OutOfRange("variance sequence shorter than N")
    grid = _dyadic(N)
    var = seq[grid - 1]
    top = grid >= grid[len(grid) // 2]
    n_top, v_top = grid[top], var[top]
    scale = max(abs(seq[0]), 1e-300)
    diag: dict = {"grid": grid.tolist(), "variance": var.tolist()}

    if np.any(v_top <= 1e-12 * scale * n_top):
        return GrowthReport(0.0, [(int(n), 0.0) for n in n_top], Verdict.DEGENERATE,
                            K=0.0, diagnostics=diag)
    ln, lv = np.log(n_top), np.log(v_top)
    slope, icpt = np.polyfit(ln, lv, 1)
    alpha_hat = float(min(max(slope, 0.0), 2.0))
    diag["fit_residual"] = float(np.sqrt(np.mean((lv - (slope * ln + icpt)) ** 2)))
    h = v_top / n_top ** alpha_hat
    h_samples = [(int(n), float(v)) for n, v in zip(n_top, h)]
    ratio = v_top / n_top

    # local slopes between neighbouring dyadic points, extrapolated in 1/ln n
    local = np.diff(lv) / np.diff(ln)
    mid = np.exp(0.5 * (ln[1:] + ln[:-1]))
    beta, alpha_inf = np.polyfit(1.0 / np.log(mid), local, 1)
    diag.update(local_slopes=local.tolist(), alpha_inf=float(alpha_inf), beta=float(beta))

    if alpha_hat < 0.98:
        return GrowthReport(alpha_hat, h_samples, Verdict.DEGENERATE, K=0.0, diagnostics=diag)
    flat = ratio.max() / ratio.min() - 1.0
    diag["h_flatness"] = float(flat)
    if 0.98 <= alpha_hat <= 1.02 and flat <= 0.02:
        return GrowthReport(alpha_hat, h_samples, Verdict.LINEAR, K=float(ratio[-1]),
                            alpha=1.0, diagnostics=diag)
    increasing = bool(np.all(np.diff(ratio) > 0))
    if abs(alpha_inf - 1.0) <= 0.05 and increasing:
        diag["h_over_log"] = float(ratio[-1] / math.log(n_top[-1]))
        return GrowthReport(alpha_hat, h_samples, Verdict.SLOWLY_VARYING_MULTIPLE,
                            alpha=1.0, diagnostics=diag)
    if alpha_hat > 1.02 and increasing:
        return GrowthReport(alpha_hat, h_samples, Verdict.REGULAR, alpha=alpha_hat,
                            diagnostics=diag)
    return GrowthReport(alpha_hat, h_samples, Verdict.INCONCLUSIVE, diagnostics=diag)


# ------------------------------------------------------------- NSC check

@dataclass
class NscReport:
    sigma2: float
    C_wedge: float
    C_box: float
    C: float
    K_pred: float
    K_obs: float
    verdict: str
    wedge_profile: list = field(default_factory=list)
    box_profile: list = field(default_factory=list)


def _intercept(x: np.ndarray, y: np.ndarray) -> float:
    """Value at x = 0 of a straight-line fit through the points."""
    if np.ptp(y) == 0.0:
        return float(y[0])
    return float(np.polyfit(x, y, 1)[1])


def excess_constant(measure: SpectralMeasure) -> tuple[float, float, list, list]:
    """C from nu(U_x)/x as x -> 0 and from n nu(D_n) as n -> infinity."""
    xs = 2.0 ** -np.arange(4, 21)
    wedge = np.array([region_mass(measure, WedgeU(float(x))) / x for x in xs])
    ns = 2.0 ** np.arange(4, 21)
    box = np.array([n * region_mass(measure, BoxD(float(n))) for n in ns])
    c_w = _intercept(xs[-8:], wedge[-8:])
    c_b = _intercept(1.0 / ns[-8:], box[-8:])
    return c_w, c_b, list(zip(xs.tolist(), wedge.tolist())), list(zip(ns.tolist(), box.tolist()))


def check_nsc(measure: SpectralMeasure, N: int = 2 ** 16, spec: QuadratureSpec | None = None) -> NscReport:
    """Compare var(S_N)/N with sigma^2 + pi C."""
    if N < 2 ** 14:
        raise OutOfRange("N must be at least 2^14")
    sigma2 = spectral.sigma_squared(measure, spec)
    if math.isinf(sigma2):
        raise SigmaInfinite("sigma^2 is infinite: var(S_n)/n has no finite limit")
    c_w, c_b, wprof, bprof = excess_constant(measure)
    seq = variance_sequence(measure, N, spec)
    k_obs = float(seq[N - 1] / N)
    trend = abs(k_obs - float(seq[N // 2 - 1] / (N // 2)))
    C = 0.5 * (c_w + c_b)
    k_pred = sigma2 + math.pi * C
    mass = measure.total_mass
    if abs(c_w - c_b) > 0.05 * max(abs(c_w), abs(c_b)) + 1e-12 * mass:
        verdict = "INCONCLUSIVE"
    elif abs(k_pred - k_obs) <= max(0.02 * k_pred, 2.0 * trend) + 1e-9 * mass:
        verdict = "CONSISTENT"
    else:
        verdict = "INCONSISTENT"
    return NscReport(sigma2, c_w, c_b, C, k_pred, k_obs, verdict, wprof, bprof)


# ----------------------------------------------------------- Tauberian

@dataclass
class TauberianReport:
    alpha: float
    rows: list
    verdict: str
    V_ratio: float
    r_ratio: float | None
    diagnostics: dict = field(default_factory=dict)


def tauberian_reversible(measure: SpectralMeasure, alpha: float, N: int = 2 ** 20,
                         grid=None, spec: QuadratureSpec | None = None) -> TauberianReport:
    """Ratio profiles linking V(x), nu(1-x, 1] and var(S_n) at x = 1/n."""
    if not measure.is_real:
        raise DomainMismatch("needs a measure supported on [-1, 1]")
    if not 1.0 <= alpha < 2.0:
        raise OutOfRange("alpha must lie in [1, 2)")
    seq = variance_sequence(measure, N, spec)
    ns = np.asarray(grid if grid is not None else _dyadic(N)[10:], dtype=np.int64)
    ratio_n = seq[N - 1] / N
    ratio_root = seq[int(math.isqrt(N)) - 1] / math.isqrt(N)
    if not ratio_n > 1.2 * ratio_root:
        raise PreconditionFailed("var(S_n)/n does not grow; the Tauberian link needs it unbounded")
    ca = c_alpha(alpha)
    da = d_alpha(alpha) if alpha > 1.0 else None
    rows = []
    for n in ns:
        var = seq[n - 1]
        x = 1.0 / n
        v_ratio = n * spectral.V_tail(measure, x, spec) / (ca * var)
        r_ratio = None
        if da is not None:
            r = region_mass(measure, Interval(1.0 - x, 1.0))
            r_ratio = r * float(n) ** 2 / (da * var)
        rows.append((int(n), float(var), float(v_ratio), r_ratio))
    v_last, r_last = rows[-1][2], rows[-1][3]
    ok = abs(v_last - 1.0) <= 0.10 and (r_last is None or abs(r_last - 1.0) <= 0.10)
    return TauberianReport(alpha, rows, "PASS" if ok else "FAIL", v_last, r_last)


# ------------------------------------------------------------ Cuny-Lin

def cuny_lin_bounds(measure: SpectralMeasure, n: int, spec: QuadratureSpec | None = None) -> dict:
    """n nu(D_n)/36 <= M_n/n <= (4/n) sum_{j<n} j nu(D_j), reported, not enforced.

    ``middle`` uses M_n = int |1 - z^n|^2/|1 - z|^2; ``middle_e0`` weights the
    same integrand by |z|^2.
    """
    if n < 1:
        raise OutOfRange("n must be >= 1")
    lower = n * region_mass(measure, BoxD(float(n))) / 36.0
    _, m = spectral.fejer_functional(measure, n, spec)
    from .kernels import backend

    def f(z, w):
        last, _ = backend.geometric_energy(np.ascontiguousarray(z.real),
                                           np.ascontiguousarray(z.imag), n)
        return (z.real ** 2 + z.imag ** 2) * last

    if n <= EXPLICIT_MAX:
        m0 = float(complex(integrate(measure, f, spec, frequency=n)).real)
    else:
        def f_big(z, w):
            g = nx.geometric_sum(w, n)
            return (z.real ** 2 + z.imag ** 2) * (g.real ** 2 + g.imag ** 2)
        m0 = float(complex(integrate(measure, f_big, spec, frequency=n)).real)
    upper = 4.0 / n * math.fsum(j * region_mass(measure, BoxD(float(j))) for j in range(1, n))
    middle = m / n
    return {
        "lower": lower,
        "middle": middle,
        "middle_e0": m0 / n,
        "upper": upper,
        "holds": bool(lower <= middle <= upper),
        "holds_e0": bool(lower <= m0 / n <= upper),
    }


# ------------------------------------------------------------- Karamata

@dataclass(frozen=True)
class PowerPair:
    """U(x) = A x^p, a monotone function with U(0) = 0."""

    A: float = 1.0
    p: float = 1.0

    def U(self, x):
        return self.A * np.asarray(x, dtype=float) ** self.p


@dataclass
class KaramataReport:
    verdict: str
    rows: list
    final: dict


def laplace_stieltjes(pair: PowerPair, x: float) -> float:
    """w(x) = int e^{-xu} dU(u) = x int e^{-xu} U(u) du, by quadrature."""
    val, _ = sint.quad(lambda v: math.exp(-v) * float(pair.U(v / x)), 0.0, math.inf,
                       epsabs=0.0, epsrel=1e-12, limit=200)
    return val


def karamata_check(pair: PowerPair, rho: float, L: Callable[[float], float] | float,
                   grid=None, mode: str = "laplace") -> KaramataReport:
    """Ratio profiles for the Karamata pair and for the monotone-density variant.

    mode 'laplace': w(x)/(x^-rho L(x)) and U(x)/(x^rho L(1/x)/Gamma(rho+1)).
    mode 'density': u(x)/(rho x^(rho-1) L(x)) with u the numerical derivative of U.
    """
    Lf = L if callable(L) else (lambda _x, c=float(L): c)
    xs = np.asarray(grid if grid is not None else np.geomspace(1e-3, 1e3, 13), dtype=float)
    rows = []
    if mode == "laplace":
        g = special.gamma(rho + 1.0)
        for x in xs:
            rw = laplace_stieltjes(pair, x) / (x ** -rho * Lf(x))
            ru = float(pair.U(x)) / (x ** rho * Lf(1.0 / x) / g)
            rows.append((float(x), rw, ru))
        final = {"w_ratio_large_x": rows[-1][1], "U_ratio_small_x": rows[0][2]}
    elif mode == "density":
        for x in xs:
            h = 1e-5 * x
            u = float(pair.U(x + h) - pair.U(x - h)) / (2.0 * h)
            rows.append((float(x), u / (rho * x ** (rho - 1.0) * Lf(x))))
        final = {"u_ratio_large_x": rows[-1][1]}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ok = all(abs(v - 1.0) <= 0.05 for v in final.values())
    return KaramataReport("PASS" if ok else "FAIL", rows, final)
