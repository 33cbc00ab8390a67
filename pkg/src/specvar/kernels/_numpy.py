"""Pure-numpy twins of the compiled kernels.

Loops run in lock-step across replications or paths; the random streams are
the same splitmix64 sequences as in the compiled versions.
"""

import math

import numpy as np

NAME = "numpy"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0x632BE59BD9B4E019)
_INV53 = 1.0 / 9007199254740992.0
_U_FLOOR = 2.0 ** -54


def _mix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _stream_start(seed, index):
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(np.uint64(seed) ^ _mix(idx * _GOLDEN + _STREAM_SALT))


def _next(state):
    with np.errstate(over="ignore"):
        state = state + _GOLDEN
    return state, _mix(state)


def _to_unit(bits):
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53


def _sign(bits):
    return np.where((bits & np.uint64(1)) == 0, 1, -1).astype(np.int64)


def uniforms(seed, index, count):
    st = _stream_start(seed, np.array([index]))
    out = np.empty(count)
    for k in range(count):
        st, bits = _next(st)
        out[k] = _to_unit(bits)[0]
    return out


def _draw_offset(u, logy, logk, atom_y, atom_cum):
    u = np.asarray(u, dtype=np.float64)
    out = np.empty_like(u)
    cont = np.ones(u.shape, dtype=bool)
    if atom_y.shape[0] > 0:
        j = np.searchsorted(atom_cum, u, side="right")
        total = atom_cum[-1]
        hit = j < atom_y.shape[0]
        out[hit] = atom_y[j[hit]]
        cont = ~hit
        if total >= 1.0:
            out[cont] = atom_y[-1]
            return out
        u = np.maximum((u - total) / (1.0 - total), _U_FLOOR)
    if not cont.any():
        return out
    lu = np.log(u[cont])
    m = logk.shape[0]
    pos = (lu - logk[0]) * ((m - 1) / (logk[m - 1] - logk[0]))
    i = np.clip(np.floor(pos), 0, m - 2).astype(np.int64)
    slope = (logy[i + 1] - logy[i]) / (logk[i + 1] - logk[i])
    out[cont] = np.exp(logy[i] + (lu - logk[i]) * slope)
    return out


def _holding(u, y):
    tau = np.ones_like(y)
    move = u < 1.0 - y
    with np.errstate(divide="ignore"):
        t = np.ceil(np.log(u[move]) / np.log1p(-y[move]))
    tau[move] = np.maximum(t, 1.0)
    return tau


def partial_sums(n, reps, seed, nu_logy, nu_logk, nu_atom_y, nu_atom_cum,
                 site_logy, site_logk, site_atom_y, site_atom_cum):
    nf = float(n)
    st = _stream_start(seed, np.arange(reps, dtype=np.uint64))
    st, bits = _next(st)
    y = _draw_offset(_to_unit(bits), nu_logy, nu_logk, nu_atom_y, nu_atom_cum)
    sign = _sign(bits)
    st, bits = _next(st)
    t = np.ones(reps)
    u = _to_unit(bits)
    move = u < 1.0 - y
    t[move] += np.floor(np.log(u[move]) / np.log1p(-y[move]))
    t = np.minimum(t, nf)
    total = sign * t.astype(np.int64)
    active = np.flatnonzero(t < nf)
    while active.size:
        sa, bits = _next(st[active])
        y = _draw_offset(_to_unit(bits), site_logy, site_logk, site_atom_y, site_atom_cum)
        sign = _sign(bits)
        sa, bits = _next(sa)
        st[active] = sa
        tau = np.minimum(_holding(_to_unit(bits), y), nf - t[active])
        t[active] += tau
        total[active] += sign * tau.astype(np.int64)
        active = active[t[active] < nf]
    return total


def blocks(m, seed, site_logy, site_logk, site_atom_y, site_atom_cum):
    # one sequential stream, so the draws are generated in order
    st = _stream_start(seed, np.array([0], dtype=np.uint64))[0]
    raw = np.empty(2 * m, dtype=np.uint64)
    with np.errstate(over="ignore"):
        counters = st + _GOLDEN * np.arange(1, 2 * m + 1, dtype=np.uint64)
    raw[:] = _mix(counters)
    b_site = raw[0::2]
    b_hold = raw[1::2]
    y = _draw_offset(_to_unit(b_site), site_logy, site_logk, site_atom_y, site_atom_cum)
    tau = np.minimum(_holding(_to_unit(b_hold), y), 9.0e18).astype(np.int64)
    return tau, y, _sign(b_site)


def path(n, seed, index, nbins, nu_logy, nu_logk, nu_atom_y, nu_atom_cum,
         site_logy, site_logk, site_atom_y, site_atom_cum):
    hist = np.zeros(nbins, dtype=np.int64)
    st = _stream_start(seed, np.array([index], dtype=np.uint64))
    st, bits = _next(st)
    y = _draw_offset(_to_unit(bits), nu_logy, nu_logk, nu_atom_y, nu_atom_cum)[0]
    sign = int(_sign(bits)[0])
    total = 0
    for i in range(n):
        if i > 0:
            st, bits = _next(st)
            if _to_unit(bits)[0] >= 1.0 - y:
                st, bits = _next(st)
                y = _draw_offset(_to_unit(bits), site_logy, site_logk, site_atom_y,
                                 site_atom_cum)[0]
                sign = int(_sign(bits)[0])
        total += sign
        b = min(max(int((sign * (1.0 - y) + 1.0) * 0.5 * nbins), 0), nbins - 1)
        hist[b] += 1
    return total, hist


def walk_on_spheres(half_plane, x0, y0, d0, eps, max_steps, seed):
    npath = x0.shape[0]
    x = np.array(x0, dtype=np.float64)
    y = np.array(y0, dtype=np.float64)
    d = np.array(d0, dtype=np.float64)
    steps = np.zeros(npath, dtype=np.int64)
    st = _stream_start(seed, np.arange(npath, dtype=np.uint64))
    active = np.flatnonzero(d >= eps)
    ok = True
    while active.size:
        if steps[active].max() >= max_steps:
            ok = False
            break
        sa, bits = _next(st[active])
        st[active] = sa
        ang = 2.0 * math.pi * _to_unit(bits)
        da = d[active]
        xa = x[active] + da * np.cos(ang)
        ya = y[active] + da * np.sin(ang)
        x[active] = xa
        y[active] = ya
        d[active] = -xa if half_plane else 1.0 - np.hypot(xa, ya)
        steps[active] += 1
        active = active[d[active] >= eps]
    if half_plane:
        return np.zeros(npath), y, steps, ok
    r = np.hypot(x, y)
    safe = r > 0.0
    ex = np.where(safe, x / np.where(safe, r, 1.0), 1.0)
    ey = np.where(safe, y / np.where(safe, r, 1.0), 0.0)
    return ex, ey, steps, ok


def geometric_energy(zr, zi, n):
    z = np.asarray(zr) + 1j * np.asarray(zi)
    g = np.zeros(z.shape, dtype=np.complex128)
    p = np.ones(z.shape, dtype=np.complex128)
    acc = np.zeros(z.shape)
    for _ in range(n):
        g = g + p
        p = p * z
        acc += g.real * g.real + g.imag * g.imag
    return g.real * g.real + g.imag * g.imag, acc


def variance_power_sum(zr, zi, n):
    z = np.asarray(zr) + 1j * np.asarray(zi)
    p = np.ones(z.shape, dtype=np.complex128)
    s = np.full(z.shape, float(n))
    for k in range(1, n):
        p = p * z
        s += 2.0 * (n - k) * p.real
    return s


def poisson_sums(t, wr, wi, weight, chunk=256):
    out = np.empty(t.shape[0])
    w2 = wr * wr + wi * wi
    for s in range(0, t.shape[0], chunk):
        tt = t[s:s + chunk]
        sh = np.sin(0.5 * tt)
        ar = (2.0 * sh * sh)[:, None]
        ai = (-np.sin(tt))[:, None]
        den = (ar * ar + ai * ai) - 2.0 * (ar * wr - ai * wi) + w2
        out[s:s + chunk] = (weight / den).sum(axis=1)
    return out
