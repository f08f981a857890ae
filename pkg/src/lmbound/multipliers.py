"""Pointwise KKT correctors for box constraints ``a <= u <= b``.

The constraint is encoded through ``g(u) = (b - u)(u - a)``; the corrector
solves, node by node,

    (u - v) / s = lam * g'(u),   lam >= 0,  g(u) >= 0,  lam * g(u) = 0,

where ``v = u_tilde + eta`` and ``s = dt / alpha`` is the effective step of the
time scheme. The solution is the clamp of ``v`` with the multiplier recovered
from the residual deficit. The mass-conserving variant adds a scalar
multiplier ``xi`` found by a secant iteration on the (monotone,
piecewise-linear) clamped-mass deficit.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .spectral import Field, GridSpec

log = logging.getLogger(__name__)

BRACKET_LIMIT = 1e6


class InfeasibleMassError(ValueError):
    pass


class SecantFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class BoundConstraint:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("bounds must be finite")
        if not self.b > self.a:
            raise ValueError(f"need b > a, got a={self.a}, b={self.b}")

    def g(self, u):
        return (self.b - u) * (u - self.a)

    def dg(self, u):
        return self.a + self.b - 2.0 * u

    def clamp(self, u):
        return np.clip(u, self.a, self.b)

    def contains(self, u) -> bool:
        u = np.asarray(u)
        return bool(np.all((u >= self.a) & (u <= self.b)))


@dataclass(frozen=True)
class CorrectorOutput:
    u: Field
    lam: Field


@dataclass(frozen=True)
class MassCorrectorOutput:
    u: Field
    lam: Field
    xi: float
    secant_iters: int


# ---------------------------------------------------------------------------
# array kernels (used directly by the time steppers)


def correct_array(v: np.ndarray, bc: BoundConstraint, dt_over_alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Three-case closed form on ``v = u_tilde + eta``; returns ``(u, lam)``."""
    u = np.clip(v, bc.a, bc.b)
    lam = np.zeros_like(u)
    lo = v <= bc.a
    hi = v >= bc.b
    lam[lo] = (bc.a - v[lo]) / (dt_over_alpha * bc.dg(bc.a))
    lam[hi] = (bc.b - v[hi]) / (dt_over_alpha * bc.dg(bc.b))
    return u, lam


def clamped_mass(v: np.ndarray, shift: float, bc: BoundConstraint, weights: np.ndarray) -> float:
    return float(np.sum(np.clip(v + shift, bc.a, bc.b) * weights))


# ---------------------------------------------------------------------------
# Field-level operations


def corrector_pointwise(u_tilde: Field, eta: Field, bc: BoundConstraint, dt_over_alpha: float) -> CorrectorOutput:
    if not dt_over_alpha > 0:
        raise ValueError("dt_over_alpha must be positive")
    if not u_tilde.grid.same_as(eta.grid):
        raise ValueError("u_tilde and eta live on different grids")
    u, lam = correct_array(u_tilde.values + eta.values, bc, dt_over_alpha)
    return CorrectorOutput(Field(u_tilde.grid, u), Field(u_tilde.grid, lam))


def cutoff_corrector(u_tilde: Field, bc: BoundConstraint, dt_over_alpha: float | None = None) -> CorrectorOutput:
    """Clamp ``u_tilde`` into ``[a, b]``.

    With ``dt_over_alpha`` the multiplier is the one satisfying the corrector
    identity with zero lag; without it the raw deficit ``u - u_tilde`` is
    reported instead.
    """
    v = u_tilde.values
    u = np.clip(v, bc.a, bc.b)
    if dt_over_alpha is None:
        lam = u - v
    else:
        lam = np.zeros_like(u)
        moved = u != v
        lam[moved] = (u[moved] - v[moved]) / (dt_over_alpha * bc.dg(u[moved]))
    return CorrectorOutput(Field(u_tilde.grid, u), Field(u_tilde.grid, lam))


def mass_residual(u_tilde: Field, eta: float, bc: BoundConstraint, grid: GridSpec, target_mass: float) -> float:
    """Clamped-mass deficit ``sum_z clamp(u_tilde(z) + eta) w_z - target``."""
    return clamped_mass(u_tilde.values, eta, bc, grid.weights) - target_mass


def _bisect(residual, lo, hi, flo, fhi, tol, max_iters):
    iters = 0
    mid, fmid = lo, flo
    while iters < max_iters:
        mid = 0.5 * (lo + hi)
        fmid = residual(mid)
        iters += 1
        if abs(fmid) <= tol or mid in (lo, hi):
            return mid, fmid, iters
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
    return mid, fmid, iters


def _find_bracket(residual, x0, f0, x1, f1):
    """Expand outward from two points until the residual changes sign."""
    if f0 * f1 <= 0:
        return (x0, f0, x1, f1), 0
    lo, hi = min(x0, x1), max(x0, x1)
    flo, fhi = (f0, f1) if x0 < x1 else (f1, f0)
    width = max(hi - lo, 1e-12)
    evals = 0
    while lo > -BRACKET_LIMIT or hi < BRACKET_LIMIT:
        width *= 2.0
        # step toward the side a monotone residual points to
        increasing = fhi >= flo
        go_left = (flo > 0) == increasing
        if go_left and lo <= -BRACKET_LIMIT or not go_left and hi >= BRACKET_LIMIT:
            go_left = not go_left
        if go_left:
            lo = max(lo - width, -BRACKET_LIMIT)
            flo = residual(lo)
        else:
            hi = min(hi + width, BRACKET_LIMIT)
            fhi = residual(hi)
        evals += 1
        if flo * fhi <= 0:
            return (lo, flo, hi, fhi), evals
    raise SecantFailure(f"no sign change of the residual within [-{BRACKET_LIMIT:g}, {BRACKET_LIMIT:g}]")


def secant_solve(
    residual: Callable[[float], float],
    xi0: float,
    xi1: float,
    tol: float,
    max_iters: int = 50,
) -> tuple[float, int]:
    """Secant iteration for a scalar root with a bisection safeguard.

    Returns ``(xi, iters)`` with ``|residual(xi)| <= tol``. On stagnation
    (flat secant) or when ``max_iters`` is exhausted, the last two iterates
    seed a bracket search and bisection finishes the job; the returned count
    then includes those extra evaluations.
    """
    if xi0 == xi1:
        raise ValueError("secant needs two distinct starting points")
    f0, f1 = residual(xi0), residual(xi1)
    if abs(f0) <= tol:
        return xi0, 0
    iters = 0
    while iters < max_iters:
        if abs(f1) <= tol:
            return xi1, iters
        df = f1 - f0
        if abs(df) <= 4 * np.finfo(float).eps * max(abs(f0), abs(f1)) or not math.isfinite(df):
            break
        xi2 = xi1 - f1 * (xi1 - xi0) / df
        if not math.isfinite(xi2) or abs(xi2) > BRACKET_LIMIT:
            break
        xi0, f0 = xi1, f1
        xi1, f1 = xi2, residual(xi2)
        iters += 1
    if abs(f1) <= tol:
        return xi1, iters
    log.debug("secant stalled after %d iterations (|F|=%g); bisecting", iters, abs(f1))
    (lo, flo, hi, fhi), evals = _find_bracket(residual, xi0, f0, xi1, f1)
    if abs(flo) <= tol:
        return lo, iters + evals
    if abs(fhi) <= tol:
        return hi, iters + evals
    xi, fxi, nb = _bisect(residual, lo, hi, flo, fhi, tol, 400)
    if abs(fxi) > tol:
        raise SecantFailure(f"bisection fallback ended with |F| = {abs(fxi):g} > tol = {tol:g}")
    return xi, iters + evals + nb


def default_mass_tol(target_mass: float) -> float:
    return 1e-12 * max(1.0, abs(target_mass))


def mass_correct_array(
    u_tilde: np.ndarray,
    weights: np.ndarray,
    bc: BoundConstraint,
    dt_over_alpha: float,
    lag: np.ndarray | float,
    xi_lag: float,
    target_mass: float,
    xi1: float | None = None,
    tol: float | None = None,
    max_iters: int = 50,
):
    """Array version of :func:`mass_corrector`; returns ``(u, lam, xi, iters)``."""
    measure = float(np.sum(weights))
    if not (bc.a * measure <= target_mass <= bc.b * measure):
        raise InfeasibleMassError(
            f"target mass {target_mass:g} outside [{bc.a * measure:g}, {bc.b * measure:g}]"
        )
    tol = default_mass_tol(target_mass) if tol is None else tol
    # eta = s (xi - xi_lag - lag); split into a fixed field and the xi shift
    base = u_tilde - dt_over_alpha * (xi_lag + np.asarray(lag))

    def residual(xi):
        return clamped_mass(base, dt_over_alpha * xi, bc, weights) - target_mass

    xi1 = dt_over_alpha if xi1 is None else xi1
    xi, iters = secant_solve(residual, 0.0, xi1, tol, max_iters)
    v = base + dt_over_alpha * xi
    u, lam = correct_array(v, bc, dt_over_alpha)
    return u, lam, xi, iters


def mass_corrector(
    u_tilde: Field,
    bc: BoundConstraint,
    dt_over_alpha: float,
    lag_terms: Field,
    xi_lag: float,
    target_mass: float,
    *,
    xi1: float | None = None,
    tol: float | None = None,
    max_iters: int = 50,
) -> MassCorrectorOutput:
    """Bound- and mass-preserving corrector.

    ``lag_terms`` is the extrapolated ``lam^n g'(u^n)`` field and ``xi_lag``
    the extrapolated scalar multiplier; the node update is
    ``u = clamp(u_tilde + eta)`` with ``eta = s (xi - xi_lag - lag_terms)``.
    The secant starts from ``xi = 0`` and ``xi = xi1`` (default ``s``).
    """
    if not dt_over_alpha > 0:
        raise ValueError("dt_over_alpha must be positive")
    grid = u_tilde.grid
    u, lam, xi, iters = mass_correct_array(
        u_tilde.values, grid.weights, bc, dt_over_alpha, lag_terms.values, xi_lag, target_mass,
        xi1=xi1, tol=tol, max_iters=max_iters,
    )
    return MassCorrectorOutput(Field(grid, u), Field(grid, lam), float(xi), iters)
