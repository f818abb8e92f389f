"""Compiled inner loops for governor and swing-equation integration.

Every governor kind is encoded as an integer plus a flat float64 parameter
row so the fleet can be integrated inside a single jitted RK4 loop.  When
numba is unavailable the same functions run as plain Python (slowly).
"""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


TGOV1, GAST, IEESGO, IEEEG1, WSIEG1 = 0, 1, 2, 3, 4
NSTATES = np.array([2, 3, 5, 6, 6], dtype=np.int64)
NPARAM = 20

DB_CONTINUOUS, DB_STEP = 0, 1


@njit(cache=True, nogil=True)
def deadband(x, width, shape):
    if abs(x) <= width:
        return 0.0
    if shape == DB_STEP:
        return x
    if x > 0.0:
        return x - width
    return x + width


@njit(cache=True, nogil=True)
def _lag(u, x, T, dx, i):
    # T == 0 collapses the stage to a wire; its state is left untouched.
    if T > 0.0:
        dx[i] = (u - x) / T
        return x
    dx[i] = 0.0
    return u


@njit(cache=True, nogil=True)
def _nonwindup(d, x, hi, lo):
    if x >= hi and d > 0.0:
        return 0.0
    if x <= lo and d < 0.0:
        return 0.0
    return d


@njit(cache=True, nogil=True)
def gov_deriv(kind, p, x, dw, pref, dx):
    """Write state derivatives into ``dx``; return mechanical power (machine pu)."""
    if kind == TGOV1:
        R, T1, T2, T3, Dt, vmax, vmin = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
        u = pref - dw / R
        dx[0] = _nonwindup((u - x[0]) / T1, x[0], vmax, vmin)
        dx[1] = (x[0] - x[1]) / T3
        return x[1] + (T2 / T3) * (x[0] - x[1]) - Dt * dw
    if kind == GAST:
        R, T1, T2, T3 = p[0], p[1], p[2], p[3]
        at, kt, vmax, vmin, dturb = p[4], p[5], p[6], p[7], p[8]
        demand = pref - dw / R
        limit = at + kt * (at - x[2])
        u = demand if demand < limit else limit
        dx[0] = _nonwindup((u - x[0]) / T1, x[0], vmax, vmin)
        dx[1] = (x[0] - x[1]) / T2
        dx[2] = (x[1] - x[2]) / T3
        return x[1] - dturb * dw
    if kind == IEESGO:
        k1, k2, k3 = p[0], p[1], p[2]
        T1, T2, T3, T4, T5, T6 = p[3], p[4], p[5], p[6], p[7], p[8]
        pmax, pmin = p[9], p[10]
        dx[0] = (-k1 * dw - x[0]) / T1
        dx[1] = (x[0] - x[1]) / T3
        y = x[1] + (T2 / T3) * (x[0] - x[1])
        v = pref + y
        if v > pmax:
            v = pmax
        elif v < pmin:
            v = pmin
        dx[2] = (v - x[2]) / T4
        y5 = _lag(k2 * x[2], x[3], T5, dx, 3)
        y6 = _lag(k3 * y5, x[4], T6, dx, 4)
        return (1.0 - k2) * x[2] + (1.0 - k3) * y5 + y6
    # IEEEG1 / WSIEG1 share one structure; IEEEG1 rows carry zero deadband.
    K, T1, T2, T3 = p[0], p[1], p[2], p[3]
    uo, uc, pmax, pmin = p[4], p[5], p[6], p[7]
    e = -deadband(dw, p[16], int(p[17]))
    if T1 > 0.0:
        dx[0] = (e - x[0]) / T1
        ll = K * (x[0] + (T2 / T1) * (e - x[0]))
    else:
        dx[0] = 0.0
        ll = K * e
    rate = (pref + ll - x[1]) / T3
    if rate > uo:
        rate = uo
    elif rate < uc:
        rate = uc
    dx[1] = _nonwindup(rate, x[1], pmax, pmin)
    s4 = _lag(x[1], x[2], p[8], dx, 2)
    s5 = _lag(s4, x[3], p[9], dx, 3)
    s6 = _lag(s5, x[4], p[10], dx, 4)
    s7 = _lag(s6, x[5], p[11], dx, 5)
    return p[12] * s4 + p[13] * s5 + p[14] * s6 + p[15] * s7


@njit(cache=True, nogil=True)
def gov_clamp(kind, p, x):
    """Pin limited integrator states onto their limits after a step."""
    if kind == TGOV1:
        hi, lo, i = p[5], p[6], 0
    elif kind == GAST:
        hi, lo, i = p[6], p[7], 0
    elif kind == IEESGO:
        return
    else:
        hi, lo, i = p[6], p[7], 1
    if x[i] > hi:
        x[i] = hi
    elif x[i] < lo:
        x[i] = lo


@njit(cache=True, nogil=True)
def _gov_rk4_into(kind, p, x, dw, pref, dt, k1, k2, k3, k4, xt):
    n = x.shape[0]
    gov_deriv(kind, p, x, dw, pref, k1)
    for i in range(n):
        xt[i] = x[i] + 0.5 * dt * k1[i]
    gov_deriv(kind, p, xt, dw, pref, k2)
    for i in range(n):
        xt[i] = x[i] + 0.5 * dt * k2[i]
    gov_deriv(kind, p, xt, dw, pref, k3)
    for i in range(n):
        xt[i] = x[i] + dt * k3[i]
    gov_deriv(kind, p, xt, dw, pref, k4)
    for i in range(n):
        x[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    gov_clamp(kind, p, x)
    return gov_deriv(kind, p, x, dw, pref, k1)


@njit(cache=True, nogil=True)
def gov_rk4_step(kind, p, x, dw, pref, dt):
    """One RK4 step with the speed input held constant; returns new state and output."""
    n = x.shape[0]
    xn = x.copy()
    pm = _gov_rk4_into(kind, p, xn, dw, pref, dt, np.empty(n), np.empty(n), np.empty(n),
                       np.empty(n), np.empty(n))
    return xn, pm


@njit(cache=True, nogil=True)
def gov_response(kind, p, x0, pref, dw, dt):
    """Output trajectory for a sampled speed-deviation signal ``dw`` (len n+1)."""
    n = dw.shape[0]
    m = x0.shape[0]
    out = np.empty(n)
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    xt = np.empty(m)
    x = x0.copy()
    out[0] = gov_deriv(kind, p, x, dw[0], pref, k1)
    for k in range(1, n):
        out[k] = _gov_rk4_into(kind, p, x, dw[k], pref, dt, k1, k2, k3, k4, xt)
    return out


@njit(cache=True, nogil=True)
def sys_deriv(y, na, inv2h, damp, ties, wscale, pev,
              kinds, P, offs, nst, area, scale, pref, pm0, dy, acc):
    """Swing-equation right-hand side for the whole grid.

    Layout of ``y``: area speed deviations, area angles, then governor states.
    ``acc`` receives each area's governor power deviation on system base.
    """
    for i in range(na):
        acc[i] = 0.0
    for m in range(kinds.shape[0]):
        o = offs[m]
        e = o + nst[m]
        pm = gov_deriv(kinds[m], P[m], y[o:e], y[area[m]], pref[m], dy[o:e])
        acc[area[m]] += (pm - pm0[m]) * scale[m]
    for i in range(na):
        tie = 0.0
        for j in range(na):
            if ties[i, j] != 0.0:
                tie += ties[i, j] * (y[na + i] - y[na + j])
        dy[i] = (acc[i] - damp[i] * y[i] - tie - pev[i]) * inv2h[i]
        dy[na + i] = wscale * y[i]


@njit(cache=True, nogil=True)
def integrate(y0, na, inv2h, damp, ties, wscale, pev_on, k_event, n_steps, dt,
              kinds, P, offs, nst, area, scale, pref, pm0):
    """Fixed-step RK4 over ``n_steps``; returns (speed deviations per step, ok flag)."""
    n = y0.shape[0]
    out = np.zeros((n_steps + 1, na))
    y = y0.copy()
    for i in range(na):
        out[0, i] = y[i]
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    acc = np.empty(na)
    zero = np.zeros(na)
    for k in range(n_steps):
        pev = pev_on if k >= k_event else zero
        sys_deriv(y, na, inv2h, damp, ties, wscale, pev, kinds, P, offs, nst, area, scale, pref, pm0, k1, acc)
        sys_deriv(y + 0.5 * dt * k1, na, inv2h, damp, ties, wscale, pev, kinds, P, offs, nst, area, scale, pref, pm0, k2, acc)
        sys_deriv(y + 0.5 * dt * k2, na, inv2h, damp, ties, wscale, pev, kinds, P, offs, nst, area, scale, pref, pm0, k3, acc)
        sys_deriv(y + dt * k3, na, inv2h, damp, ties, wscale, pev, kinds, P, offs, nst, area, scale, pref, pm0, k4, acc)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for m in range(kinds.shape[0]):
            o = offs[m]
            gov_clamp(kinds[m], P[m], y[o:o + nst[m]])
        for i in range(n):
            if not math.isfinite(y[i]):
                return out[:k + 1], False
        for i in range(na):
            out[k + 1, i] = y[i]
    return out, True
