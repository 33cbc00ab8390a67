"""A holding chain on [-1, 1] and its regenerative simulation.

From state x the chain stays put with probability |x| and otherwise jumps to
a fresh draw from a symmetric base law upsilon. With
theta = int upsilon(dx)/(1 - |x|) < infinity the invariant law is
mu(dx) = upsilon(dx) / (theta (1 - |x|)), and for g = sgn the spectral
measure is the law of |xi_0| under mu (mass 1 on [0, 1]).

Everything is parameterized by the offset y = 1 - |x|. Each family supplies
the offset law of upsilon (a density ``u(y)`` plus optional atoms), from
which theta, nu and the sampling tables follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate as sint
from scipy import optimize, special, stats

from . import spectral
from .errors import BracketFailure, OutOfRange, PreconditionFailed, ThetaInfinite
from .kernels import get_backend
from .measures import (
    DISK,
    Atom,
    ExpSqrtLogFamily,
    IntervalDensity,
    OffsetTable,
    QuadratureSpec,
    SpectralMeasure,
    build_offset_table,
    integrate,
    make_family,
)


# --------------------------------------------------------------- families

@dataclass(frozen=True)
class _Family:
    """Offset law of upsilon: density u(y) on (0, 1] plus atoms (y, prob)."""

    name: str
    params: dict
    u_pdf: Callable[[np.ndarray], np.ndarray] | None
    u_cdf: Callable[[np.ndarray], np.ndarray] | None
    atoms: tuple = ()
    nu: SpectralMeasure | None = None
    nu_cdf: Callable[[np.ndarray], np.ndarray] | None = None
    norm_const: float | None = None


def _power_family(beta: float, name: str = "power") -> _Family:
    if not beta > -1.0:
        raise OutOfRange("power base law needs beta > -1")
    nu = None
    if beta > 0.0:
        nu = SpectralMeasure(DISK, (IntervalDensity(make_family("power", gamma=1.0 - beta), 1.0),))
    return _Family(
        name, {"beta": beta} if name == "power" else {},
        u_pdf=lambda y: (beta + 1.0) * y ** beta,
        u_cdf=lambda y: np.clip(y, 0.0, 1.0) ** (beta + 1.0),
        nu=nu,
        nu_cdf=lambda y: np.clip(y, 0.0, 1.0) ** beta,
    )


def _defniu_family(a: float) -> _Family:
    c = 1.0 + 2.0 * a / 5.0

    def u_pdf(y):
        ly = np.log(y)
        return (2.0 / c) * y * (1.0 + a * (np.sin(ly) + np.cos(ly)))

    def u_cdf(y):
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        out = np.zeros_like(y)
        pos = y > 0
        yp, lp = y[pos], np.log(y[pos])
        out[pos] = (2.0 / c) * (0.5 * yp * yp + a * yp * yp * (3.0 * np.sin(lp) + np.cos(lp)) / 5.0)
        return out

    fam = make_family("defniu", a=a)
    nu = SpectralMeasure(DISK, (IntervalDensity(fam, 1.0),))
    return _Family("defniu", {"a": a}, u_pdf, u_cdf, nu=nu, nu_cdf=fam.cdf_y, norm_const=c)


def _expsqrtlog_family() -> _Family:
    fam = ExpSqrtLogFamily()
    m0 = fam.raw_mass
    b_atom = 1.0 - m0
    y_star = b_atom / math.e   # makes V(x) = exp(sqrt(ln 1/x)) exactly for x < y_star
    nu = SpectralMeasure(DISK, (IntervalDensity(fam, m0), Atom(1.0 - y_star, b_atom)))
    # int y nu(dy): density part in closed form plus the atom
    first = (math.exp(0.125) / math.sqrt(2.0) * 0.5 * math.sqrt(math.pi)
             * special.erfc(math.sqrt(2.0) * 0.75))
    mean_y = first + b_atom * y_star
    theta = 1.0 / mean_y

    def u_pdf(y):
        return theta * m0 * y * fam.pdf_y(y)

    def u_cdf(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros_like(y)
        inside = (y > 0) & (y < fam.y_hi)
        root = np.sqrt(-np.log(y[inside]))
        out[inside] = theta * (math.exp(0.125) / math.sqrt(2.0) * 0.5 * math.sqrt(math.pi)
                               * special.erfc(math.sqrt(2.0) * (root - 0.25)))
        out[y >= fam.y_hi] = theta * first
        return out

    def nu_cdf(y):
        y = np.asarray(y, dtype=float)
        return m0 * fam.cdf_y(y) + b_atom * (y >= y_star)

    return _Family("expsqrtlog", {}, u_pdf, u_cdf,
                   atoms=((y_star, theta * b_atom * y_star),), nu=nu, nu_cdf=nu_cdf)


def _atoms_family(c: float) -> _Family:
    if not 0.0 <= c < 1.0:
        raise OutOfRange("atom base law needs 0 <= c < 1")
    nu = SpectralMeasure(DISK, (Atom(c, 1.0),))
    return _Family("atoms", {"c": c}, None, None, atoms=((1.0 - c, 1.0),), nu=nu)


FAMILIES = ("triangular", "uniform", "power", "defniu", "expsqrtlog", "atoms")


def _family(name: str, params: dict) -> _Family:
    if name == "triangular":
        return _power_family(1.0, "triangular")
    if name == "uniform":
        return _power_family(0.0, "uniform")
    if name == "power":
        return _power_family(float(params.get("beta", 1.0)))
    if name == "defniu":
        return _defniu_family(float(params.get("a", 0.25)))
    if name == "expsqrtlog":
        return _expsqrtlog_family()
    if name == "atoms":
        return _atoms_family(float(params.get("c", 0.5)))
    raise OutOfRange(f"unknown chain family {name!r}")


# ------------------------------------------------------------------ model

@dataclass
class ChainModel:
    family: str
    params: dict
    theta: float
    nu: SpectralMeasure
    site_table: OffsetTable
    nu_table: OffsetTable
    norm_const: float | None = None
    u_pdf: Callable | None = field(default=None, repr=False)
    site_atoms: tuple = ()

    def upsilon_density(self, x):
        """Density of the continuous part of upsilon on [-1, 1]."""
        y = 1.0 - np.abs(np.asarray(x, dtype=float))
        return 0.5 * self.u_pdf(y) if self.u_pdf is not None else np.zeros_like(y)

    def mu_density(self, x):
        y = 1.0 - np.abs(np.asarray(x, dtype=float))
        return self.upsilon_density(x) / (self.theta * y)


def _theta_by_quadrature(fam: _Family) -> float:
    """int u(y)/y dy over (0, 1] plus atoms, in s = -ln y; inf if it diverges."""
    total = math.fsum(p / y for y, p in fam.atoms)
    if fam.u_pdf is None:
        return total

    def g(s):
        return float(fam.u_pdf(np.array([math.exp(-s)]))[0])

    cuts = [0.0, 1.0, 5.0, 20.0, 50.0, 100.0, 200.0, 350.0, 700.0]
    pieces = [sint.quad(g, a, b, epsabs=0.0, epsrel=1e-13, limit=200)[0]
              for a, b in zip(cuts[:-1], cuts[1:])]
    body = math.fsum(pieces)
    if pieces[-1] > 1e-9 * body:
        return math.inf
    return total + body


def build_chain(family: str, **params) -> ChainModel:
    """Assemble theta, nu and sampling tables for a named base law."""
    fam = _family(family, params)
    theta = _theta_by_quadrature(fam)
    if not math.isfinite(theta):
        raise ThetaInfinite(f"{family} base law has infinite mean holding time")
    if fam.u_cdf is not None:
        cont = 1.0 - math.fsum(p for _, p in fam.atoms)
        site_table = build_offset_table(lambda y: fam.u_cdf(y) / cont, 1.0, atoms=fam.atoms)
    else:
        site_table = OffsetTable(np.array([0.0, 0.0]), np.array([-1.0, 0.0]),
                                 np.array([y for y, _ in fam.atoms]),
                                 np.cumsum([p for _, p in fam.atoms]))
    nu_atoms = tuple((1.0 - c.location.real, c.mass) for c in fam.nu.components
                     if isinstance(c, Atom))
    if fam.nu_cdf is not None:
        cont = 1.0 - math.fsum(p for _, p in nu_atoms)
        atom_part = (lambda y: sum(p * (np.asarray(y) >= ya) for ya, p in nu_atoms))
        nu_table = build_offset_table(lambda y: (fam.nu_cdf(y) - atom_part(y)) / cont, 1.0,
                                      atoms=nu_atoms)
    else:
        nu_table = OffsetTable(np.array([0.0, 0.0]), np.array([-1.0, 0.0]),
                               np.array([y for y, _ in nu_atoms]),
                               np.cumsum([p for _, p in nu_atoms]))
    return ChainModel(family, dict(fam.params), theta, fam.nu, site_table, nu_table,
                      fam.norm_const, fam.u_pdf, fam.atoms)


def chain_from_dict(doc: dict) -> ChainModel:
    params = {k: v for k, v in doc.get("params", {}).items()}
    return build_chain(doc.get("family", "triangular"), **params)


# ---------------------------------------------------------- holding times

def _psi_scaled(v):
    """(2 - e^{-v}(2 + 2v + v^2)) / v^2, linear at 0."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    small = v < 0.5
    if small.any():
        vs = v[small]
        acc = np.zeros_like(vs)
        term = vs / 6.0
        for k in range(3, 30):
            acc += (-1) ** (k + 1) * (k - 1) * (k - 2) * term
            term = term * vs / (k + 1)
        out[small] = acc
    big = ~small
    with np.errstate(over="ignore", invalid="ignore"):
        vb = v[big]
        out[big] = (2.0 - np.exp(-vb) * (2.0 + 2.0 * vb + vb * vb)) / (vb * vb)
    out[np.isinf(v)] = 0.0
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def _panels(a: float, b: float) -> np.ndarray:
    """Edges on [a, b]: width 1/2 up to a + 60, then doubling."""
    lin = np.arange(a, min(b, a + 60.0), 0.5)
    geo = [lin[-1]]
    while geo[-1] < b:
        geo.append(min(b, a + 2.0 * (geo[-1] - a)))
    return np.unique(np.concatenate([lin, geo]))


def _gl_nodes(edges: np.ndarray):
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    w = (half[:, None] * _GL_W[None, :]).ravel()
    return x, w


def _nu_expect(model: ChainModel, g: Callable) -> float:
    """int g(y, lam) nu(dy) with lam = -ln(1 - y).

    Densities are integrated in s = -ln y for small offsets and in
    r = -ln(1 - y) near y = 1, so both endpoint behaviours are resolved.
    """
    total = 0.0
    for comp in model.nu.components:
        if isinstance(comp, Atom):
            y = 1.0 - comp.location.real
            lam = math.inf if y >= 1.0 else -math.log1p(-y)
            total += comp.mass * float(g(np.array([y]), np.array([lam]))[0])
            continue
        fam = comp.family
        split = min(0.5, fam.y_hi)
        s, ws = _gl_nodes(_panels(-math.log(split), 745.0))
        y = np.exp(-s)
        part = np.sum(ws * y * fam.pdf_y(y) * g(y, -np.log1p(-y)))
        if fam.y_hi > split:
            r, wr = _gl_nodes(_panels(-math.log1p(-split), 745.0))
            t = np.exp(-r)
            y = 1.0 - t
            part += np.sum(wr * t * fam.pdf_y(y) * g(y, r))
        total += comp.mass * part
    return float(total)


def holding_tail(model: ChainModel, u: float) -> dict:
    """P(tau > u) and H(u) = E[tau^2; tau <= u] with continuous survival |x|^s.

    H(u) = 2 int_0^u s P(tau > s) ds - u^2 P(tau > u); integrating first over
    s for a fixed site gives psi(lam u)/lam^2 with lam = -ln|x| and
    psi(v) = 2 - e^{-v}(2 + 2v + v^2).
    """
    if u < 0:
        raise OutOfRange("u must be nonnegative")
    if u == 0:
        return {"tail": 1.0, "H": 0.0}
    th = model.theta
    tail = _nu_expect(model, lambda y, lam: th * y * np.exp(-u * lam))
    h = _nu_expect(model, lambda y, lam: th * y * u * u * _psi_scaled(lam * u))
    return {"tail": tail, "H": h}


def H_by_time_integral(model: ChainModel, u: float) -> float:
    """H(u) from 2 int_0^u s P(tau > s) ds - u^2 P(tau > u) with quadrature in s."""
    if u == 0:
        return 0.0
    grid = np.unique(np.concatenate([[0.0], np.geomspace(1e-6, u, 60)]))
    total = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        total += sint.quad(lambda s: 2.0 * s * holding_tail(model, s)["tail"], a, b,
                           epsabs=0.0, epsrel=1e-10)[0]
    return total - u * u * holding_tail(model, u)["tail"]


def solve_bn(model: ChainModel, n: float) -> float:
    """Root b of b^2 = n H(b), bracketed on [1, 10 sqrt(n H(n))]."""
    if n < 1:
        raise OutOfRange("n must be >= 1")

    def g(b):
        return math.log(n * holding_tail(model, b)["H"]) - 2.0 * math.log(b)

    hi = 10.0 * math.sqrt(n * holding_tail(model, n)["H"])
    lo = 1.0
    if not (hi > lo and g(lo) >= 0.0 >= g(hi)):
        raise BracketFailure(f"b^2 = n H(b) not bracketed on [{lo}, {hi}]")
    if g(lo) == 0.0:
        return lo
    return optimize.brentq(g, lo, hi, xtol=1e-12, rtol=1e-10)


def b_closed_form(model: ChainModel, n: float) -> float:
    """sqrt(2 n theta exp(sqrt(ln(n)/2))), the closed-form scale for expsqrtlog."""
    return math.sqrt(2.0 * n * model.theta * math.exp(math.sqrt(0.5 * math.log(n))))


# ------------------------------------------------------------- simulation

@dataclass
class BlockSample:
    tau: np.ndarray
    site: np.ndarray
    offset: np.ndarray

    @property
    def contribution(self) -> np.ndarray:
        return self.tau * np.sign(self.site)


def simulate_blocks(model: ChainModel, m: int, seed: int, backend: str | None = None) -> BlockSample:
    """m i.i.d. regeneration blocks (holding time, site) from one seeded stream."""
    if m < 1:
        raise OutOfRange("m must be >= 1")
    be = get_backend(backend)
    tau, off, sgn = be.blocks(int(m), _u64(seed), *model.site_table.arrays())
    return BlockSample(tau, sgn * (1.0 - off), off)


def simulate_path(model: ChainModel, n: int, seed: int, index: int = 0, nbins: int = 50,
                  backend: str | None = None) -> tuple[int, np.ndarray]:
    """Step-by-step trajectory started from mu: (S_n, histogram of states)."""
    if n < 1:
        raise OutOfRange("n must be >= 1")
    be = get_backend(backend)
    s, hist = be.path(int(n), _u64(seed), int(index), int(nbins), *model.nu_table.arrays(),
                      *model.site_table.arrays())
    return int(s), hist


def simulate_partial_sums(model: ChainModel, n: int, reps: int, seed: int,
                          backend: str | None = None) -> np.ndarray:
    """S_n for ``reps`` stationary replications, block by block."""
    be = get_backend(backend)
    return be.partial_sums(int(n), int(reps), _u64(seed), *model.nu_table.arrays(),
                           *model.site_table.arrays())


def _u64(seed: int) -> int:
    return int(seed) & 0xFFFFFFFFFFFFFFFF


@dataclass
class CltReport:
    n: int
    b: float
    replications: int
    ks: float
    ks_pvalue: float
    mean: float
    variance: float
    seed: int
    empirical_var_Sn: float
    spectral_var_Sn: float
    sums: np.ndarray = field(repr=False, default=None)

    def rows(self):
        return [(self.n, i, int(s), float(s) / self.b) for i, s in enumerate(self.sums)]


def spectral_variance(model: ChainModel, n: int) -> float:
    """var(S_n) from the spectral measure (closed-form kernel)."""
    from .variance_class import variance_by_kernel
    return variance_by_kernel(model.nu, n)


def clt_experiment(model: ChainModel, n: int, replications: int, seed: int,
                   normalization: str = "solve_bn", backend: str | None = None) -> CltReport:
    """KS distance of S_n / b_[n/theta] from N(0, 1) over independent replications."""
    if replications < 100:
        raise OutOfRange("need at least 100 replications")
    m = max(1, int(n // model.theta))
    if normalization == "solve_bn":
        b = solve_bn(model, m)
    elif normalization == "closed-form":
        b = b_closed_form(model, m)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    sums = simulate_partial_sums(model, n, replications, seed, backend)
    z = sums / b
    ks = stats.kstest(z, "norm")
    return CltReport(int(n), float(b), int(replications), float(ks.statistic), float(ks.pvalue),
                     float(z.mean()), float(z.var()), int(seed), float(sums.astype(float).var()),
                     spectral_variance(model, n), sums)


# ------------------------------------------------------------- Lemma check

@dataclass
class LemmaReport:
    rows: list
    final_ratio: float
    verdict: str


def lemma_aux_check(model: ChainModel, xs=None, spec: QuadratureSpec | None = None) -> LemmaReport:
    """Profile of H(1/x) / (2 theta V(x)) on a geometric x-grid."""
    if math.isfinite(spectral.V_limit(model.nu, spec)):
        raise PreconditionFailed("V(x) stays bounded as x -> 0; the ratio has no unit limit")
    xs = np.asarray(xs if xs is not None else np.geomspace(1e-2, 1e-6, 9), dtype=float)
    rows = []
    for x in xs:
        h = holding_tail(model, 1.0 / x)["H"]
        v = spectral.V_tail(model.nu, float(x), spec)
        rows.append((float(x), h, v, h / (2.0 * model.theta * v)))
    final = rows[-1][3]
    return LemmaReport(rows, final, "PASS" if abs(final - 1.0) <= 0.05 else "FAIL")
