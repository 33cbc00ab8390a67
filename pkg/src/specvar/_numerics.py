"""Cancellation-free elementary functions near z = 1.

Callers pass both a point z and its offset w = 1 - z (computed exactly where
possible); everything that vanishes at z = 1 is evaluated from w.
"""

import numpy as np


def clog1p(v):
    """log(1 + v) for complex v, accurate when |v| is small."""
    v = np.asarray(v, dtype=np.complex128)
    re, im = v.real, v.imag
    with np.errstate(divide="ignore", invalid="ignore"):
        real = 0.5 * np.log1p(2.0 * re + re * re + im * im)
    return real + 1j * np.arctan2(im, 1.0 + re)


def cexpm1(u):
    """exp(u) - 1 for complex u, accurate when |u| is small."""
    u = np.asarray(u, dtype=np.complex128)
    a, b = u.real, u.imag
    em1 = np.expm1(a)
    s = np.sin(0.5 * b)
    real = em1 * np.cos(b) - 2.0 * s * s
    return real + 1j * np.exp(a) * np.sin(b)


def _log1p_plus(w):
    """log(1 - w) + w, second order in w."""
    w = np.asarray(w, dtype=np.complex128)
    out = np.empty_like(w)
    small = np.abs(w) < 0.1
    if small.any():
        ws = w[small]
        acc = np.zeros_like(ws)
        p = ws * ws
        for k in range(2, 40):
            acc -= p / k
            p = p * ws
        out[small] = acc
    big = ~small
    if big.any():
        out[big] = clog1p(-w[big]) + w[big]
    return out


def _expm1_minus(u):
    """exp(u) - 1 - u, second order in u."""
    u = np.asarray(u, dtype=np.complex128)
    out = np.empty_like(u)
    small = np.abs(u) < 0.5
    if small.any():
        us = u[small]
        acc = np.zeros_like(us)
        term = us * us / 2.0
        for k in range(3, 30):
            acc += term
            term = term * us / k
        out[small] = acc
    big = ~small
    if big.any():
        out[big] = cexpm1(u[big]) - u[big]
    return out


def phi2(u):
    """(e^u - 1 - u)/u^2, continuous at 0 with value 1/2."""
    u = np.asarray(u, dtype=np.complex128)
    out = np.empty_like(u)
    small = np.abs(u) < 0.5
    if small.any():
        us = u[small]
        acc = np.zeros_like(us)
        term = np.full(us.shape, 0.5, dtype=np.complex128)
        for k in range(3, 30):
            acc += term
            term = term * us / k
        out[small] = acc
    big = ~small
    if big.any():
        ub = u[big]
        out[big] = (cexpm1(ub) - ub) / (ub * ub)
    return out


def power(w, n):
    """z**n for z = 1 - w, via exp(n log(1 - w)); z**0 = 1 also at z = 0."""
    w = np.asarray(w, dtype=np.complex128)
    if np.all(n == 0):
        return np.ones(np.broadcast(w, n).shape, dtype=np.complex128)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(n * clog1p(-w))
    return np.where(np.isnan(out) & (w == 1.0) & (np.asarray(n) == 0), 1.0 + 0j, out)


def geometric_sum(w, n):
    """G_n = sum_{j<n} z^j = (1 - z^n)/(1 - z) for z = 1 - w."""
    w = np.asarray(w, dtype=np.complex128)
    n = float(n)
    out = np.empty_like(w)
    small = np.abs(n * w) < 1e-3
    if small.any():
        ws = w[small]
        c2 = n * (n - 1) / 2.0
        c3 = c2 * (n - 2) / 3.0
        c4 = c3 * (n - 3) / 4.0
        out[small] = n - c2 * ws + c3 * ws * ws - c4 * ws * ws * ws
    big = ~small
    if big.any():
        wb = w[big]
        out[big] = -cexpm1(n * clog1p(-wb)) / wb
    return out


def variance_kernel(w, n):
    """n + sum_{k=1}^{n-1} (n-k)(z^k + conj(z)^k) for z = 1 - w, closed form.

    Uses A = z [phi(nL) + n(L + w)] / w^2 with L = log(1 - w) and
    phi(u) = e^u - 1 - u; the kernel is n + 2 Re A. Points with |n w| tiny
    fall back to the Taylor expansion n^2 - (n^3 - n) Re(w)/3.
    """
    w = np.asarray(w, dtype=np.complex128)
    n = float(n)
    out = np.empty(w.shape)
    tiny = np.abs(n * w) < 1e-6
    if tiny.any():
        out[tiny] = n * n - (n ** 3 - n) * w[tiny].real / 3.0
    rest = ~tiny
    if rest.any():
        wr = w[rest]
        lg = clog1p(-wr)
        a = (1.0 - wr) * (_expm1_minus(n * lg) + n * _log1p_plus(wr)) / (wr * wr)
        out[rest] = n + 2.0 * a.real
    return out


def one_minus_abs2(w):
    """1 - |z|^2 for z = 1 - w."""
    w = np.asarray(w, dtype=np.complex128)
    return 2.0 * w.real - (w.real * w.real + w.imag * w.imag)
