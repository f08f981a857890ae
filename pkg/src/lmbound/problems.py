"""Allen-Cahn, Cahn-Hilliard, Fokker-Planck and heat problems as ``ProblemOps``.

Every nonlinearity vanishes at ``u = 0``. Splittings used:

* Allen-Cahn: ``L = -Lap + 1/eps^2``, ``N(u) = (u^3 - u)/eps^2 - u/eps^2``;
* Cahn-Hilliard: ``L u = eps^2 div(M(u*) grad Lap u)``,
  ``N(u*) = -div(M(u*) grad f(u*))`` with ``f(u) = ln(1+u) - ln(1-u) - theta0 u``
  and ``M(u) = 1 - u^2`` frozen at the extrapolated state ``u*``;
* Fokker-Planck: ``L = -d_xx``, ``N(u) = -d_x(x u (1 - u))``;
* heat: ``L = -Lap``, ``N = 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .integrators import BlowUp, ProblemOps
from .multipliers import BoundConstraint
from .spectral import GridSpec

log = logging.getLogger(__name__)

LCG_MULT = 6364136223846793005
LCG_INC = 1442695040888963407
_MASK64 = (1 << 64) - 1


class LinearSolveError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class AllenCahnSpec:
    """``stabilization`` is the multiple ``S`` of ``u/eps^2`` moved from the
    explicit to the implicit side: ``L = -Lap + S/eps^2``,
    ``N(u) = (u^3 - u)/eps^2 - S u/eps^2``."""

    epsilon2: float = 0.001
    stabilization: float = 1.0

    def __post_init__(self):
        if not self.epsilon2 > 0:
            raise ValueError("epsilon2 must be positive")
        if self.stabilization < 0:
            raise ValueError("stabilization must be nonnegative")

    @property
    def bounds(self) -> BoundConstraint:
        return BoundConstraint(-1.0, 1.0)


@dataclass(frozen=True)
class CahnHilliardSpec:
    epsilon: float = 0.1
    theta0: float = 5.0
    delta: float = 0.01
    solver_rtol: float = 1e-8
    solver_maxiter: int = 500

    def __post_init__(self):
        if not (self.epsilon > 0 and self.theta0 > 0):
            raise ValueError("epsilon and theta0 must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def bounds(self) -> BoundConstraint:
        return BoundConstraint(-1.0 + self.delta, 1.0 - self.delta)


@dataclass(frozen=True)
class FokkerPlanckSpec:
    half_width: float = 2 * np.pi

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def bounds(self) -> BoundConstraint:
        return BoundConstraint(0.0, 1.0)

    @property
    def extent(self) -> tuple[float, float]:
        return (-self.half_width, self.half_width)


@dataclass(frozen=True)
class HeatSpec:
    a: float = -1.0
    b: float = 1.0
    diffusivity: float = 1.0

    @property
    def bounds(self) -> BoundConstraint:
        return BoundConstraint(self.a, self.b)


# ---------------------------------------------------------------------------
# ops factories


def _require_periodic(grid: GridSpec):
    if not grid.is_periodic:
        raise ValueError("this problem needs a periodic Fourier grid")


def allen_cahn_ops(spec: AllenCahnSpec, grid: GridSpec) -> ProblemOps:
    _require_periodic(grid)
    inv = 1.0 / spec.epsilon2
    shift = spec.stabilization * inv

    def linear_solve(rhs, sigma, ext=None):
        return grid.shifted_solve(rhs, sigma + shift, 1.0)

    def linear_apply(u, ext=None):
        return -grid.lap(u) + shift * u

    def nonlinear_eval(u):
        return inv * (u**3 - u) - shift * u

    def energy(u):
        grad2 = sum(grid.deriv(u, ax) ** 2 for ax in range(grid.ndim))
        return float(np.sum(grid.weights * (0.5 * grad2 + 0.25 * inv * (u**2 - 1.0) ** 2)))

    return ProblemOps(grid, spec.bounds, linear_solve, linear_apply, nonlinear_eval,
                      mass_conserving=False, energy=energy, name="allen_cahn")


def _ch_potential(u, theta0):
    if np.any(np.abs(u) >= 1.0) or not np.all(np.isfinite(u)):
        raise BlowUp("Cahn-Hilliard logarithm evaluated outside (-1, 1)")
    return np.log1p(u) - np.log1p(-u) - theta0 * u


def ch_mobility(u):
    return 1.0 - u**2


class CahnHilliardLinearSolver:
    """Solve ``(sigma I + eps^2 div(M grad Lap)) u = rhs`` for frozen ``M``.

    GMRES preconditioned with the constant-coefficient operator at
    ``M_bar = max M``, which is diagonal in Fourier space.
    """

    def __init__(self, grid: GridSpec, epsilon: float, rtol: float = 1e-8, maxiter: int = 500):
        _require_periodic(grid)
        self.grid = grid
        self.eps2 = epsilon**2
        self.rtol = rtol
        self.maxiter = maxiter
        self.last_iters = 0
        self.last_residual = 0.0
        self._kx = grid._k_odd
        # symbol of div(grad Lap) with the Nyquist-free first derivatives
        self._k4 = grid.ksq * sum(k * k for k in self._kx)

    def apply(self, u, mob, sigma):
        g = self.grid
        uh = g.rfft(u)
        lap_h = -g.ksq * uh
        flux_h = 0.0
        for k in self._kx:
            comp = g.irfft(1j * k * lap_h) * mob
            flux_h = flux_h + 1j * k * g.rfft(comp)
        return sigma * u + self.eps2 * g.irfft(flux_h)

    def solve(self, rhs, sigma, mob, x0=None):
        g = self.grid
        shape = g.shape
        n = g.size
        mbar = float(np.max(mob))
        if np.allclose(mob, mbar, rtol=0, atol=1e-15):
            self.last_iters = 0
            return g.irfft(g.rfft(rhs) / (sigma + self.eps2 * mbar * self._k4))
        denom = sigma + self.eps2 * mbar * self._k4

        def matvec(v):
            return self.apply(v.reshape(shape), mob, sigma).ravel()

        def precond(v):
            return g.irfft(g.rfft(v.reshape(shape)) / denom).ravel()

        A = LinearOperator((n, n), matvec=matvec, dtype=float)
        M = LinearOperator((n, n), matvec=precond, dtype=float)
        count = [0]

        def cb(_):
            count[0] += 1

        restart = min(50, self.maxiter)
        x, info = gmres(
            A, rhs.ravel(), x0=None if x0 is None else x0.ravel(), rtol=self.rtol, atol=0.0,
            restart=restart, maxiter=max(1, self.maxiter // restart), M=M,
            callback=cb, callback_type="pr_norm",
        )
        self.last_iters = count[0]
        x = x.reshape(shape)
        res = np.linalg.norm(self.apply(x, mob, sigma) - rhs) / max(np.linalg.norm(rhs), 1e-300)
        self.last_residual = float(res)
        if info != 0 and res > self.rtol * 10:
            raise LinearSolveError(
                f"Cahn-Hilliard solve did not converge in {self.maxiter} iterations "
                f"(relative residual {res:.3e})"
            )
        return x


def cahn_hilliard_ops(spec: CahnHilliardSpec, grid: GridSpec) -> ProblemOps:
    _require_periodic(grid)
    solver = CahnHilliardLinearSolver(grid, spec.epsilon, spec.solver_rtol, spec.solver_maxiter)
    eps2 = spec.epsilon**2

    def mobility_of(ext):
        mob = ch_mobility(ext)
        if np.any(mob <= 0):
            raise BlowUp("mobility nonpositive: extrapolated state outside (-1, 1)")
        return mob

    def linear_solve(rhs, sigma, ext):
        return solver.solve(rhs, sigma, mobility_of(ext))

    def linear_apply(u, ext):
        return solver.apply(u, mobility_of(ext), 0.0)

    def nonlinear_eval(ext):
        mu = _ch_potential(ext, spec.theta0)
        mob = mobility_of(ext)
        return -sum(grid.deriv(mob * grid.deriv(mu, ax), ax) for ax in range(grid.ndim))

    ops = ProblemOps(grid, spec.bounds, linear_solve, linear_apply, nonlinear_eval,
                     mass_conserving=True, name="cahn_hilliard")
    ops.energy = lambda u: ch_energy_array(u, grid, spec)
    ops.solver = solver  # exposes iteration counts to the driver
    return ops


def fokker_planck_ops(spec: FokkerPlanckSpec, grid: GridSpec) -> ProblemOps:
    _require_periodic(grid)
    if grid.ndim != 1:
        raise ValueError("Fokker-Planck preset is one-dimensional")
    x = grid.coords[0]

    def linear_solve(rhs, sigma, ext=None):
        return grid.shifted_solve(rhs, sigma, 1.0)

    def linear_apply(u, ext=None):
        return -grid.lap(u)

    def nonlinear_eval(u):
        return -grid.deriv(x * u * (1.0 - u), 0)

    ops = ProblemOps(grid, spec.bounds, linear_solve, linear_apply, nonlinear_eval,
                     mass_conserving=True, name="fokker_planck")
    ops.energy = lambda u: fp_entropy_array(u, grid)[0]
    return ops


def heat_ops(spec: HeatSpec, grid: GridSpec) -> ProblemOps:
    nu = spec.diffusivity

    def linear_solve(rhs, sigma, ext=None):
        return grid.shifted_solve(rhs, sigma, nu)

    def linear_apply(u, ext=None):
        return -nu * grid.lap(u)

    def nonlinear_eval(u):
        return np.zeros_like(u)

    def energy(u):
        grad2 = sum(grid.deriv(u, ax) ** 2 for ax in range(grid.ndim))
        return float(0.5 * np.sum(grid.weights * grad2))

    return ProblemOps(grid, spec.bounds, linear_solve, linear_apply, nonlinear_eval,
                      mass_conserving=grid.is_periodic, energy=energy, name="heat")


# ---------------------------------------------------------------------------
# energies (array level; Field wrappers live in diagnostics)


def ch_energy_array(u, grid: GridSpec, spec: CahnHilliardSpec) -> float:
    if np.any(np.abs(u) >= 1.0):
        return float("nan")
    grad2 = sum(grid.deriv(u, ax) ** 2 for ax in range(grid.ndim))
    dens = (1 + u) * np.log1p(u) + (1 - u) * np.log1p(-u) - 0.5 * spec.theta0 * u**2 + 0.5 * spec.epsilon**2 * grad2
    return float(np.sum(grid.weights * dens))


LOG_FLOOR = 1e-300


def fp_entropy_array(u, grid: GridSpec) -> tuple[float, bool]:
    """Entropy ``int x^2/2 u + u log u + (1-u) log(1-u)``; logs floored at 1e-300.

    Returns the value and whether any log argument hit the floor.
    """
    x = grid.coords[0]
    p = np.maximum(u, LOG_FLOOR)
    q = np.maximum(1.0 - u, LOG_FLOOR)
    clamped = bool(np.any(u <= LOG_FLOOR) or np.any(1.0 - u <= LOG_FLOOR))
    dens = 0.5 * x**2 * u + u * np.log(p) + (1.0 - u) * np.log(q)
    return float(np.sum(grid.weights * dens)), clamped


# ---------------------------------------------------------------------------
# initial data


def lcg_uniform(seed: int, count: int) -> np.ndarray:
    """Uniform values in (-1, 1) from the 64-bit LCG
    ``s <- 6364136223846793005 s + 1442695040888963407 (mod 2^64)``.

    The state is advanced before each draw; the top 53 bits ``m`` of the new
    state map to ``2 (m + 1/2) / 2^53 - 1``.
    """
    s = int(seed) & _MASK64
    out = np.empty(count)
    for i in range(count):
        s = (LCG_MULT * s + LCG_INC) & _MASK64
        out[i] = 2.0 * (((s >> 11) + 0.5) / 9007199254740992.0) - 1.0
    return out


def tanh_disk(grid: GridSpec, epsilon: float, center=(np.pi, np.pi), radius: float = 1.0) -> np.ndarray:
    """``tanh((radius - |x - center|) / (sqrt(2) epsilon))``."""
    x, y = grid.coords
    r = np.sqrt((x - center[0]) ** 2 + (y - center[1]) ** 2)
    return np.tanh((radius - r) / (np.sqrt(2.0) * epsilon))


def two_bumps(grid: GridSpec, epsilon: float) -> np.ndarray:
    return (
        tanh_disk(grid, epsilon, (np.pi, 1.5 * np.pi))
        + tanh_disk(grid, epsilon, (np.pi, 0.75 * np.pi))
        + 1.0
    )


def random_ch(grid: GridSpec, seed: int, mean: float = 0.2, amplitude: float = 0.05) -> np.ndarray:
    return mean + amplitude * lcg_uniform(seed, grid.size).reshape(grid.shape)


def fp_gaussian(grid: GridSpec, center: float = 1.0, width2: float = 0.4) -> np.ndarray:
    x = grid.coords[0]
    return np.exp(-((x - center) ** 2) / width2)


def sine(grid: GridSpec, amplitude: float = 0.5) -> np.ndarray:
    return amplitude * np.prod([np.sin(c) for c in grid.coords], axis=0)


def cahn_hilliard_step_solve(state, ops: ProblemOps, *, lagrange_lag: bool = True) -> np.ndarray:
    """BDF2 predictor for Cahn-Hilliard with mobility and potential frozen at
    ``2u^n - u^{n-1}``; returns ``u~^{n+1}``."""
    from .integrators import BdfScheme, bdf_predictor_step

    return bdf_predictor_step(state, BdfScheme.of_order(2), ops, lagrange_lag=lagrange_lag)


def semi_implicit_baseline(state, scheme, ops: ProblemOps):
    """One unconstrained step: the same predictor with the corrector disabled."""
    from .integrators import CorrectorKind, full_step

    return full_step(state, scheme, ops, CorrectorKind.NONE, False)
