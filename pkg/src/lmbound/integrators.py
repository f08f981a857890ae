"""IMEX predictors (BDF1-3, modified Crank-Nicolson) and predictor-corrector steps.

A problem is described by :class:`ProblemOps`: the implicit linear part
``L_h`` through ``linear_solve`` (``(sigma I + L_h)^{-1}``) and
``linear_apply``, and the explicit part ``N_h`` through ``nonlinear_eval``.
Both linear callables receive the extrapolated state so that operators with
frozen variable coefficients (Cahn-Hilliard mobility) fit the same contract;
constant-coefficient problems ignore it.

A step is: predictor -> blow-up check -> corrector (Lagrange multiplier,
cut-off, or none) -> history rotation. Histories are stored newest first.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .multipliers import BoundConstraint, correct_array, mass_correct_array
from .spectral import GridSpec


class BlowUp(ArithmeticError):
    """Predictor left the admissible domain (non-finite or log-domain violation)."""


class CorrectorKind(str, enum.Enum):
    LAGRANGE = "lagrange"
    CUTOFF = "cutoff"
    NONE = "none"


_BDF_TABLE = {
    # alpha, A_k weights, B_k weights, B_{k-1} weights
    1: (Fraction(1), (1,), (1,), ()),
    2: (Fraction(3, 2), (2, Fraction(-1, 2)), (2, -1), (1,)),
    3: (Fraction(11, 6), (3, Fraction(-3, 2), Fraction(1, 3)), (3, -3, 1), (2, -1)),
}


@dataclass(frozen=True)
class BdfScheme:
    order: int
    alpha: float
    a_weights: tuple[float, ...]
    b_weights: tuple[float, ...]
    blag_weights: tuple[float, ...]

    @classmethod
    def of_order(cls, k: int) -> "BdfScheme":
        if k not in _BDF_TABLE:
            raise ValueError(f"BDF order must be 1, 2 or 3, got {k}")
        alpha, a, b, blag = _BDF_TABLE[k]
        return cls(k, float(alpha), tuple(map(float, a)), tuple(map(float, b)), tuple(map(float, blag)))

    @property
    def depth(self) -> int:
        return self.order

    @property
    def name(self) -> str:
        return f"bdf{self.order}"


@dataclass(frozen=True)
class ModifiedCN:
    """Diffusion weighted ``(3/4) u~^{n+1} + (1/4) u~^{n-1}``, nonlinearity
    extrapolated with ``(3/2) u^n - (1/2) u^{n-1}``; corrector with factor 1/2."""

    order: int = 2
    depth: int = 2
    name: str = "mcn"


Scheme = BdfScheme | ModifiedCN


def scheme_from_name(name: str) -> Scheme:
    name = name.lower()
    if name == "mcn":
        return ModifiedCN()
    if name.startswith("bdf") and name[3:].isdigit():
        return BdfScheme.of_order(int(name[3:]))
    raise ValueError(f"unknown scheme {name!r}")


@dataclass
class ProblemOps:
    grid: GridSpec
    bounds: BoundConstraint
    linear_solve: Callable[[np.ndarray, float, Optional[np.ndarray]], np.ndarray]
    linear_apply: Callable[[np.ndarray, Optional[np.ndarray]], np.ndarray]
    nonlinear_eval: Callable[[np.ndarray], np.ndarray]
    mass_conserving: bool = False
    energy: Optional[Callable[[np.ndarray], float]] = None
    name: str = "problem"


@dataclass
class SolverState:
    u: list[np.ndarray]
    lam: list[np.ndarray]
    lam_dg: list[np.ndarray]
    xi: list[float]
    u_tilde: list[np.ndarray]
    t: float
    n: int
    dt: float
    depth: int
    secant_iters: int = 0
    diverged: bool = False
    divergence_time: Optional[float] = None
    divergence_reason: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def current(self) -> np.ndarray:
        return self.u[0]


def _combine(weights, history):
    out = weights[0] * history[0]
    for w, h in zip(weights[1:], history[1:]):
        out = out + w * h
    return out


def initialize(scheme: Scheme, u0, ops: ProblemOps, dt: float, *, clamp_tol: float = 1e-12) -> SolverState:
    """Seed a state from ``u0`` with zero multipliers.

    Values outside ``[a, b]`` by at most ``clamp_tol`` are clamped; anything
    further out is rejected. Steps taken before the history is ``depth``
    deep use the first-order scheme (see :func:`full_step`).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    u0 = np.array(getattr(u0, "values", u0), dtype=float).reshape(ops.grid.shape)
    if not np.all(np.isfinite(u0)):
        raise ValueError("initial data is not finite")
    bc = ops.bounds
    excess = max(bc.a - u0.min(), u0.max() - bc.b, 0.0)
    if excess > clamp_tol:
        raise ValueError(f"initial data leaves [{bc.a}, {bc.b}] by {excess:g}")
    if excess > 0:
        import warnings

        warnings.warn(f"initial data clamped into bounds (excess {excess:g})", stacklevel=2)
        u0 = bc.clamp(u0)
    zero = np.zeros_like(u0)
    return SolverState(
        u=[u0], lam=[zero], lam_dg=[zero], xi=[0.0], u_tilde=[u0.copy()],
        t=0.0, n=0, dt=float(dt), depth=scheme.depth,
    )


# ---------------------------------------------------------------------------
# predictors


def _bdf1_predict(u, ops, dt):
    rhs = u / dt - ops.nonlinear_eval(u)
    return ops.linear_solve(rhs, 1.0 / dt, u)


def bdf_predictor_step(
    state: SolverState,
    scheme: BdfScheme,
    ops: ProblemOps,
    *,
    lagrange_lag: bool = True,
    conserve_mass: bool = False,
) -> np.ndarray:
    """Solve ``(alpha/dt + L) u~ = A_k(u)/dt - N(B_k(u)) + B_{k-1}(lam g'(u)) [+ B_{k-1}(xi)]``."""
    k = scheme.order
    if len(state.u) < k:
        raise ValueError(f"BDF{k} needs {k} history levels, state has {len(state.u)}")
    dt = state.dt
    ext = _combine(scheme.b_weights, state.u)
    rhs = _combine(scheme.a_weights, state.u) / dt - ops.nonlinear_eval(ext)
    if k > 1:
        if lagrange_lag:
            rhs = rhs + _combine(scheme.blag_weights, state.lam_dg)
        if conserve_mass:
            rhs = rhs + sum(w * x for w, x in zip(scheme.blag_weights, state.xi))
    return ops.linear_solve(rhs, scheme.alpha / dt, ext)


def mcn_predictor_step(
    state: SolverState,
    ops: ProblemOps,
    *,
    lagrange_lag: bool = True,
    conserve_mass: bool = False,
) -> np.ndarray:
    """Modified Crank-Nicolson predictor.

    ``(I/dt + 3/4 L) u~^{n+1} = u^n/dt - 1/4 L u~^{n-1} - N(ext) + lam^n g'(u^n) [+ xi^n]``
    with ``ext = 3/2 u^n - 1/2 u^{n-1}``, or ``u^0`` on the first step where
    ``u~^{-1} = u^0``.
    """
    u_tilde, _ = _mcn_predict(state, ops, lagrange_lag, conserve_mass)
    return u_tilde


def _mcn_predict(state, ops, lagrange_lag, conserve_mass):
    dt = state.dt
    if state.n == 0 or len(state.u) < 2:
        ext = state.u[0]
    else:
        ext = 1.5 * state.u[0] - 0.5 * state.u[1]
    # L u~^{n-1}: the newest stored u~ is u~^n, the one before is u~^{n-1}
    if len(state.u_tilde) >= 2 and state.extras.get("l_prev") is not None:
        l_prev = state.extras["l_prev"]
    else:
        prev = state.u_tilde[1] if len(state.u_tilde) >= 2 else state.u_tilde[0]
        l_prev = ops.linear_apply(prev, ext)
    rhs = state.u[0] / dt - 0.25 * l_prev - ops.nonlinear_eval(ext)
    if lagrange_lag:
        rhs = rhs + state.lam_dg[0]
    if conserve_mass:
        rhs = rhs + state.xi[0]
    sigma = 4.0 / (3.0 * dt)
    scaled = rhs * (4.0 / 3.0)
    u_tilde = ops.linear_solve(scaled, sigma, ext)
    # (sigma + L) u~ = scaled  =>  L u~ = scaled - sigma u~
    l_new = scaled - sigma * u_tilde
    return u_tilde, l_new


# ---------------------------------------------------------------------------
# full step


def _check_blowup(u_tilde, bc):
    if not np.all(np.isfinite(u_tilde)):
        raise BlowUp("non-finite values in predictor output")
    limit = 10.0 * max(abs(bc.a), abs(bc.b), 1.0)
    peak = float(np.max(np.abs(u_tilde)))
    if peak > limit:
        raise BlowUp(f"|u~|_inf = {peak:g} exceeds {limit:g}")


def _richardson_bdf1(u, ops, dt):
    coarse = _bdf1_predict(u, ops, dt)
    half = _bdf1_predict(_bdf1_predict(u, ops, 0.5 * dt), ops, 0.5 * dt)
    return 2.0 * half - coarse


def full_step(
    state: SolverState,
    scheme: Scheme,
    ops: ProblemOps,
    corrector_kind: CorrectorKind | str = CorrectorKind.LAGRANGE,
    conserve_mass: bool = False,
    *,
    secant_max_iters: int = 50,
) -> SolverState:
    """Advance one step; returns a new state.

    On blow-up the returned state is the input state flagged with
    ``diverged=True`` and the time at which the failed step would have landed.
    """
    kind = CorrectorKind(corrector_kind)
    if state.diverged:
        return state
    dt = state.dt
    bc = ops.bounds
    lagrange = kind is CorrectorKind.LAGRANGE
    startup = isinstance(scheme, BdfScheme) and len(state.u) < scheme.order
    l_new = None
    try:
        if isinstance(scheme, ModifiedCN):
            u_tilde, l_new = _mcn_predict(state, ops, lagrange, conserve_mass)
            s = 0.5 * dt if lagrange else dt
            lag = state.lam_dg[0] if lagrange else 0.0
            xi_lag = state.xi[0] if conserve_mass else 0.0
        elif startup:
            # first-order start; Richardson-extrapolated for BDF3 so the
            # startup error stays below the third-order global error
            if scheme.order >= 3:
                u_tilde = _richardson_bdf1(state.u[0], ops, dt)
            else:
                u_tilde = _bdf1_predict(state.u[0], ops, dt)
            s, lag, xi_lag = dt, 0.0, 0.0
        else:
            u_tilde = bdf_predictor_step(state, scheme, ops, lagrange_lag=lagrange, conserve_mass=conserve_mass)
            s = dt / scheme.alpha
            lag = _combine(scheme.blag_weights, state.lam_dg) if (lagrange and scheme.order > 1) else 0.0
            xi_lag = sum(w * x for w, x in zip(scheme.blag_weights, state.xi)) if conserve_mass else 0.0
        _check_blowup(u_tilde, bc)
    except (BlowUp, FloatingPointError) as exc:
        return replace(
            state, diverged=True, divergence_time=(state.n + 1) * dt, divergence_reason=str(exc)
        )

    xi = 0.0
    iters = 0
    if kind is CorrectorKind.NONE:
        u_new = u_tilde
        lam = np.zeros_like(u_new)
    elif conserve_mass:
        target = float(np.sum(ops.grid.weights * state.u[0]))
        u_new, lam, xi, iters = mass_correct_array(
            u_tilde, ops.grid.weights, bc, s, lag, xi_lag, target, xi1=dt, max_iters=secant_max_iters
        )
    else:
        u_new, lam = correct_array(u_tilde - s * np.asarray(lag), bc, s)

    depth = state.depth
    extras = dict(state.extras)
    extras["l_prev"] = state.extras.get("l_cur")
    extras["l_cur"] = l_new
    return replace(
        state,
        u=([u_new] + state.u)[:depth],
        lam=([lam] + state.lam)[:depth],
        lam_dg=([lam * bc.dg(u_new)] + state.lam_dg)[:depth],
        xi=([float(xi)] + state.xi)[:depth],
        u_tilde=([u_tilde] + state.u_tilde)[:depth],
        t=(state.n + 1) * dt,
        n=state.n + 1,
        secant_iters=iters,
        extras=extras,
    )


def n_steps(t_final: float, dt: float) -> int:
    steps = t_final / dt
    n = int(round(steps))
    if not math.isclose(steps, n, rel_tol=1e-9, abs_tol=1e-9):
        raise ValueError(f"t_final/dt = {steps} is not an integer")
    return n


def integrate(
    ops: ProblemOps,
    scheme: Scheme,
    u0,
    dt: float,
    t_final: float,
    corrector_kind: CorrectorKind | str = CorrectorKind.LAGRANGE,
    conserve_mass: bool = False,
    callback: Optional[Callable[[SolverState], None]] = None,
) -> SolverState:
    """Run to ``t_final`` (or divergence), calling ``callback`` after the
    initial state and after every committed step."""
    state = initialize(scheme, u0, ops, dt)
    if callback is not None:
        callback(state)
    for _ in range(n_steps(t_final, dt)):
        state = full_step(state, scheme, ops, corrector_kind, conserve_mass)
        if state.diverged:
            break
        if callback is not None:
            callback(state)
    return state
