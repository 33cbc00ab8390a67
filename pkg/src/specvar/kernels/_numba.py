"""Compiled kernels. Every function here has a twin in ``_numpy`` with the
same signature and the same random stream, so results agree draw for draw."""

import math

import numpy as np
from numba import njit

NAME = "numba"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0x632BE59BD9B4E019)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi
_U_FLOOR = 2.0 ** -54


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True, inline="always")
def _stream_start(seed, index):
    return _mix(seed ^ _mix(np.uint64(index) * _GOLDEN + _STREAM_SALT))


@njit(cache=True, inline="always")
def _next(state):
    state = state + _GOLDEN
    return state, _mix(state)


@njit(cache=True, inline="always")
def _to_unit(bits):
    return (float(bits >> _S11) + 0.5) * _INV53


@njit(cache=True)
def uniforms(seed, index, count):
    """First ``count`` uniforms of stream ``index`` (used for parity tests)."""
    out = np.empty(count)
    st = _stream_start(np.uint64(seed), index)
    for k in range(count):
        st, bits = _next(st)
        out[k] = _to_unit(bits)
    return out


@njit(cache=True, inline="always")
def _draw_continuous(u, logy, logk):
    lu = math.log(u)
    m = logk.shape[0]
    pos = (lu - logk[0]) * ((m - 1) / (logk[m - 1] - logk[0]))
    if pos <= 0.0:
        i = 0
    elif pos >= m - 2:
        i = m - 2
    else:
        i = int(pos)
    slope = (logy[i + 1] - logy[i]) / (logk[i + 1] - logk[i])
    return math.exp(logy[i] + (lu - logk[i]) * slope)


@njit(cache=True)
def _draw_with_atoms(u, logy, logk, atom_y, atom_cum):
    na = atom_y.shape[0]
    for j in range(na):
        if u < atom_cum[j]:
            return atom_y[j]
    total = atom_cum[na - 1]
    if total >= 1.0:
        return atom_y[na - 1]
    u = (u - total) / (1.0 - total)
    if u < _U_FLOOR:
        u = _U_FLOOR
    return _draw_continuous(u, logy, logk)


@njit(cache=True, inline="always")
def _draw_offset(u, logy, logk, atom_y, atom_cum):
    # the atom path lives out of line; inlining it slows the common case
    if atom_y.shape[0] > 0:
        return _draw_with_atoms(u, logy, logk, atom_y, atom_cum)
    return _draw_continuous(u, logy, logk)


@njit(cache=True, inline="always")
def _holding(u, y):
    # ceil(ln u / ln(1 - y)) is 1 exactly when u >= 1 - y; test that first
    if u >= 1.0 - y:
        return 1.0
    tau = np.ceil(math.log(u) / math.log1p(-y))
    if tau < 1.0:
        tau = 1.0
    return tau


@njit(cache=True)
def partial_sums(n, reps, seed, nu_logy, nu_logk, nu_atom_y, nu_atom_cum,
                 site_logy, site_logk, site_atom_y, site_atom_cum):
    """S_n of the holding chain for each replication, built block by block."""
    out = np.empty(reps, dtype=np.int64)
    s64 = np.uint64(seed)
    nf = float(n)
    for r in range(reps):
        st = _stream_start(s64, r)
        st, bits = _next(st)
        y = _draw_offset(_to_unit(bits), nu_logy, nu_logk, nu_atom_y, nu_atom_cum)
        sign = 1 if (bits & _ONE) == 0 else -1
        st, bits = _next(st)
        t = 1.0
        u = _to_unit(bits)
        if u < 1.0 - y:
            t += np.floor(math.log(u) / math.log1p(-y))
        if t > nf:
            t = nf
        total = sign * int(t)
        while t < nf:
            st, bits = _next(st)
            y = _draw_offset(_to_unit(bits), site_logy, site_logk, site_atom_y, site_atom_cum)
            sign = 1 if (bits & _ONE) == 0 else -1
            st, bits = _next(st)
            tau = _holding(_to_unit(bits), y)
            if tau > nf - t:
                tau = nf - t
            t += tau
            total += sign * int(tau)
        out[r] = total
    return out


@njit(cache=True)
def blocks(m, seed, site_logy, site_logk, site_atom_y, site_atom_cum):
    """``m`` i.i.d. regeneration blocks: holding time, site offset 1-|x|, sign."""
    tau = np.empty(m, dtype=np.int64)
    off = np.empty(m)
    sgn = np.empty(m, dtype=np.int64)
    st = _stream_start(np.uint64(seed), 0)
    for k in range(m):
        st, bits = _next(st)
        y = _draw_offset(_to_unit(bits), site_logy, site_logk, site_atom_y, site_atom_cum)
        sgn[k] = 1 if (bits & _ONE) == 0 else -1
        st, bits = _next(st)
        h = _holding(_to_unit(bits), y)
        if h > 9.0e18:
            h = 9.0e18
        tau[k] = int(h)
        off[k] = y
    return tau, off, sgn


@njit(cache=True)
def path(n, seed, index, nbins, nu_logy, nu_logk, nu_atom_y, nu_atom_cum,
         site_logy, site_logk, site_atom_y, site_atom_cum):
    """Step-by-step trajectory: partial sum of signs and a histogram of states."""
    hist = np.zeros(nbins, dtype=np.int64)
    st = _stream_start(np.uint64(seed), index)
    st, bits = _next(st)
    y = _draw_offset(_to_unit(bits), nu_logy, nu_logk, nu_atom_y, nu_atom_cum)
    sign = 1 if (bits & _ONE) == 0 else -1
    total = 0
    for i in range(n):
        if i > 0:
            st, bits = _next(st)
            if _to_unit(bits) >= 1.0 - y:
                st, bits = _next(st)
                y = _draw_offset(_to_unit(bits), site_logy, site_logk, site_atom_y,
                                 site_atom_cum)
                sign = 1 if (bits & _ONE) == 0 else -1
        total += sign
        x = sign * (1.0 - y)
        b = int((x + 1.0) * 0.5 * nbins)
        if b >= nbins:
            b = nbins - 1
        if b < 0:
            b = 0
        hist[b] += 1
    return total, hist


@njit(cache=True)
def walk_on_spheres(half_plane, x0, y0, d0, eps, max_steps, seed):
    """Exit points of Brownian paths from the unit disk or the left half-plane."""
    npath = x0.shape[0]
    ex = np.empty(npath)
    ey = np.empty(npath)
    steps = np.zeros(npath, dtype=np.int64)
    ok = True
    s64 = np.uint64(seed)
    for i in range(npath):
        st = _stream_start(s64, i)
        x = x0[i]
        y = y0[i]
        d = d0[i]
        k = 0
        while d >= eps:
            if k >= max_steps:
                ok = False
                break
            st, bits = _next(st)
            ang = _TWO_PI * _to_unit(bits)
            x += d * math.cos(ang)
            y += d * math.sin(ang)
            if half_plane:
                d = -x
            else:
                d = 1.0 - math.hypot(x, y)
            k += 1
        steps[i] = k
        if half_plane:
            ex[i] = 0.0
            ey[i] = y
        else:
            r = math.hypot(x, y)
            if r > 0.0:
                ex[i] = x / r
                ey[i] = y / r
            else:
                ex[i] = 1.0
                ey[i] = 0.0
    return ex, ey, steps, ok


@njit(cache=True)
def geometric_energy(zr, zi, n):
    """For each z: |G_n|^2 and sum_{j=1..n} |G_j|^2 with G_j = sum_{i<j} z^i."""
    m = zr.shape[0]
    last = np.empty(m)
    acc = np.empty(m)
    for k in range(m):
        a = zr[k]
        b = zi[k]
        gr = 0.0
        gi = 0.0
        pr = 1.0
        pi = 0.0
        s = 0.0
        for _ in range(n):
            gr += pr
            gi += pi
            pr, pi = pr * a - pi * b, pr * b + pi * a
            s += gr * gr + gi * gi
        last[k] = gr * gr + gi * gi
        acc[k] = s
    return last, acc


@njit(cache=True)
def variance_power_sum(zr, zi, n):
    """For each z: n + 2 sum_{k=1}^{n-1} (n - k) Re z^k."""
    m = zr.shape[0]
    out = np.empty(m)
    for j in range(m):
        a = zr[j]
        b = zi[j]
        pr = 1.0
        pi = 0.0
        s = float(n)
        for k in range(1, n):
            pr, pi = pr * a - pi * b, pr * b + pi * a
            s += 2.0 * (n - k) * pr
        out[j] = s
    return out


@njit(cache=True, error_model="numpy")
def poisson_sums(t, wr, wi, weight):
    """sum_j weight_j / |1 - z_j e^{it}|^2 for each angle t, with w_j = 1 - z_j."""
    out = np.empty(t.shape[0])
    for k in range(t.shape[0]):
        sh = math.sin(0.5 * t[k])
        ar = 2.0 * sh * sh
        ai = -math.sin(t[k])
        a2 = ar * ar + ai * ai
        acc = 0.0
        for j in range(wr.shape[0]):
            a = wr[j]
            b = wi[j]
            acc += weight[j] / (a2 - 2.0 * (ar * a - ai * b) + a * a + b * b)
        out[k] = acc
    return out
