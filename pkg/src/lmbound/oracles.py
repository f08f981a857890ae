"""Brute-force reference computations used by the test suite.

Nothing here imports the solver modules: the projection oracle searches a
candidate grid, the root oracle bisects, and the PDE oracle is an explicit
second-order finite-difference march on a small periodic grid.
"""
from __future__ import annotations

import math

import numpy as np

PROJECTION_CANDIDATES = 10**6


def projection_oracle(v: float, a: float, b: float, n: int = PROJECTION_CANDIDATES) -> float:
    """argmin of ``(u - v)^2`` over ``n`` uniformly spaced candidates in ``[a, b]``."""
    if not b > a:
        raise ValueError("need b > a")
    cand = np.linspace(a, b, n)
    return float(cand[np.argmin((cand - v) ** 2)])


def projection_oracle_many(v: np.ndarray, a: float, b: float, n: int = PROJECTION_CANDIDATES) -> np.ndarray:
    """Vectorized :func:`projection_oracle`.

    The candidates are sorted, so the minimizer of ``(u - v)^2`` is one of the
    two candidates neighbouring ``v``; only those two are compared.
    """
    if not b > a:
        raise ValueError("need b > a")
    cand = np.linspace(a, b, n)
    v = np.asarray(v, dtype=float)
    hi = np.clip(np.searchsorted(cand, v), 1, n - 1)
    lo = hi - 1
    pick_hi = (cand[hi] - v) ** 2 < (cand[lo] - v) ** 2
    return np.where(pick_hi, cand[hi], cand[lo])


def bisection_oracle(residual, lo: float, hi: float, tol: float = 1e-14, max_iter: int = 500) -> float:
    """Root of ``residual`` on ``[lo, hi]`` to an interval width of ``tol``."""
    flo, fhi = residual(lo), residual(hi)
    if flo * fhi > 0:
        raise ValueError("residual does not change sign on [lo, hi]")
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol or mid in (lo, hi):
            return mid
        fmid = residual(mid)
        if fmid == 0:
            return mid
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dense_fd_reference(problem: str, u0: np.ndarray, dt: float, steps: int, length: float = 2 * math.pi,
                       x0: float = 0.0, epsilon2: float = 1.0) -> np.ndarray:
    """Forward-Euler march with second-order centred differences (periodic 1D).

    ``problem`` is ``"heat"`` (u_t = u_xx), ``"allen_cahn"``
    (u_t = u_xx - (u^3 - u)/eps^2) or ``"fokker_planck"``
    (u_t = (x u (1 - u))_x + u_xx on ``[x0, x0 + length)``). ``dt`` must
    satisfy ``dt <= h^2 / 4``.
    """
    u = np.array(u0, dtype=float)
    n = u.size
    h = length / n
    if dt > h * h / 4 * (1 + 1e-12):
        raise ValueError(f"dt={dt:g} exceeds the explicit limit h^2/4={h * h / 4:g}")
    x = x0 + h * np.arange(n)
    for _ in range(steps):
        up = np.roll(u, -1)
        um = np.roll(u, 1)
        rate = (up - 2 * u + um) / (h * h)
        if problem == "allen_cahn":
            rate -= (u**3 - u) / epsilon2
        elif problem == "fokker_planck":
            flux = x * u * (1 - u)
            rate += (np.roll(flux, -1) - np.roll(flux, 1)) / (2 * h)
        elif problem != "heat":
            raise ValueError(f"unknown problem {problem!r}")
        u = u + dt * rate
    return u
