"""Bounded Nelder-Mead simplex search.

The simplex lives in the unit cube; points are mapped affinely onto the
box ``[lower, upper]`` and clamped, so every evaluated point respects the
bounds exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from gridfreq.errors import NumericInputError


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    nfev: int
    history: list = field(default_factory=list)
    reason: str = ""


def nelder_mead(fun: Callable[[np.ndarray], float], x0, lower, upper, *,
                step: float = 0.15, max_iter: int = 200, ftol: float = 1e-6,
                stop: Optional[Callable[[np.ndarray, float], bool]] = None) -> SimplexResult:
    """Minimise ``fun`` over the box from ``x0``.

    ``history`` holds the best objective after each iteration, so it is
    non-increasing by construction.  ``stop(x, f)`` is consulted whenever a
    new best point appears and ends the search early when it returns True.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    span = upper - lower
    n = len(lower)
    nfev = 0

    def to_x(u):
        return lower + np.clip(u, 0.0, 1.0) * span

    def f(u):
        nonlocal nfev
        nfev += 1
        val = float(fun(to_x(u)))
        if np.isnan(val):
            raise NumericInputError("objective returned NaN")
        return val

    u0 = np.clip((np.asarray(x0, dtype=float) - lower) / np.where(span > 0, span, 1.0), 0.0, 1.0)
    pts = [u0]
    for i in range(n):
        u = u0.copy()
        u[i] = u[i] + step if u[i] + step <= 1.0 else u[i] - step
        pts.append(u)
    sim = np.array(pts)
    fs = np.array([f(u) for u in sim])

    def done():
        b = int(np.argmin(fs))
        return stop is not None and stop(to_x(sim[b]), fs[b])

    history = [float(fs.min())]
    it = 0
    reason = "max_iter"
    if done():
        reason = "stop"
    else:
        while it < max_iter:
            order = np.argsort(fs, kind="stable")
            sim, fs = sim[order], fs[order]
            if fs[-1] - fs[0] < ftol:
                reason = "stagnation"
                break
            it += 1
            best_before = fs[0]
            centroid = sim[:-1].mean(axis=0)
            xr = np.clip(centroid + (centroid - sim[-1]), 0.0, 1.0)
            fr = f(xr)
            if fr < fs[0]:
                xe = np.clip(centroid + 2.0 * (centroid - sim[-1]), 0.0, 1.0)
                fe = f(xe)
                sim[-1], fs[-1] = (xe, fe) if fe < fr else (xr, fr)
            elif fr < fs[-2]:
                sim[-1], fs[-1] = xr, fr
            else:
                if fr < fs[-1]:
                    xc = centroid + 0.5 * (xr - centroid)
                else:
                    xc = centroid + 0.5 * (sim[-1] - centroid)
                fc = f(xc)
                if fc < min(fr, fs[-1]):
                    sim[-1], fs[-1] = xc, fc
                else:
                    for i in range(1, n + 1):
                        sim[i] = sim[0] + 0.5 * (sim[i] - sim[0])
                        fs[i] = f(sim[i])
            history.append(float(min(fs.min(), history[-1])))
            if fs.min() < best_before and done():
                reason = "stop"
                break
    b = int(np.argmin(fs))
    return SimplexResult(to_x(sim[b]), float(fs[b]), it, nfev, history, reason)
